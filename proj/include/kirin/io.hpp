/*
 * Copyright (c) 2026 The Kirin Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef KIRIN_IO_HPP
#define KIRIN_IO_HPP

#include <string>

#include "kirin/hybrid_matmul.hpp"
#include "kirin/quantizer.hpp"
#include "kirin/spike_codec.hpp"

namespace kirin {

/// Text tensor format shared repo-wide: first line "rows cols", then one
/// whitespace-separated row per line. Doubles round-trip exactly (written
/// with max_digits10 precision).
std::string write_tensor_text(const Matrix& m);
Matrix read_tensor_text(const std::string& text);
void write_tensor_file(const Matrix& m, const std::string& path);
Matrix read_tensor_file(const std::string& path);

std::string quant_tensor_to_json(const QuantTensor& q);
QuantTensor quant_tensor_from_json(const std::string& text);

std::string spike_train_to_json(const SpikeTrain& t);
SpikeTrain spike_train_from_json(const std::string& text);

std::string trace_to_json(const ExecutionTrace& t);

} // namespace kirin

#endif
