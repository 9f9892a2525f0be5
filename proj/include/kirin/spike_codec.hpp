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
#ifndef KIRIN_SPIKE_CODEC_HPP
#define KIRIN_SPIKE_CODEC_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace kirin {

enum class Scheme { Rate, Ttfs };

inline std::string to_string(Scheme s) { return s == Scheme::Rate ? "rate" : "ttfs"; }

/// One neuron's spikes within the window, times sorted ascending, all < T.
/// Spike trains carry magnitudes; the sign flag is applied multiplicatively
/// during integration (spike times cannot be negative).
struct SpikeNeuron {
    std::vector<std::int32_t> times;
    std::int8_t sign = 1;
};

struct SpikeTrain {
    std::int64_t window_T = 0;
    Scheme scheme = Scheme::Ttfs;
    std::vector<SpikeNeuron> neurons;

    std::int64_t neuron_count() const {
        return static_cast<std::int64_t>(neurons.size());
    }
    std::int64_t total_spikes() const;
};

struct SpikeRateStats {
    double mean_rate = 0.0;      // total spikes / (neurons * T)
    double fired_fraction = 0.0; // neurons with >= 1 spike / neurons
    std::int64_t total_spikes = 0;
    std::int64_t neuron_count = 0;
};

/// Time-to-first-spike: neuron i fires exactly once at t = |code_i| when the
/// code is nonzero. Code 0 stays silent; silence decodes back to 0 and costs
/// no energy.
SpikeTrain encode_ttfs(std::span<const std::int32_t> codes, std::int64_t T);

/// Rate: neuron i fires |code_i| times, packed densely from t = 0.
SpikeTrain encode_rate(std::span<const std::int32_t> codes, std::int64_t T);

/// Inverse of both encodings: ttfs -> sign * spike time, rate -> sign * count.
std::vector<std::int32_t> decode(const SpikeTrain& train);

SpikeRateStats measure_rates(const SpikeTrain& train);

} // namespace kirin

#endif
