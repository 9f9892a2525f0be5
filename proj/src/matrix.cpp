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
#include "kirin/matrix.hpp"

namespace kirin {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: non-conformable shapes");
    Matrix out(a.rows, b.cols);
    for (std::int64_t r = 0; r < a.rows; ++r) {
        for (std::int64_t c = 0; c < b.cols; ++c) {
            double acc = 0.0;
            for (std::int64_t k = 0; k < a.cols; ++k)
                acc += a.at(r, k) * b.at(k, c);
            out.at(r, c) = acc;
        }
    }
    return out;
}

std::vector<std::int64_t> matmul_i64(const IntMatrix& a, const IntMatrix& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul_i64: non-conformable shapes");
    std::vector<std::int64_t> out(static_cast<std::size_t>(a.rows * b.cols), 0);
    for (std::int64_t r = 0; r < a.rows; ++r) {
        for (std::int64_t c = 0; c < b.cols; ++c) {
            std::int64_t acc = 0;
            for (std::int64_t k = 0; k < a.cols; ++k)
                acc += static_cast<std::int64_t>(a.at(r, k)) *
                       static_cast<std::int64_t>(b.at(k, c));
            out[static_cast<std::size_t>(r * b.cols + c)] = acc;
        }
    }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols, m.rows);
    for (std::int64_t r = 0; r < m.rows; ++r)
        for (std::int64_t c = 0; c < m.cols; ++c)
            out.at(c, r) = m.at(r, c);
    return out;
}

} // namespace kirin
