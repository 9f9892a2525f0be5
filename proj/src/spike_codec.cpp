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
#include "kirin/spike_codec.hpp"

#include <cstdlib>
#include <stdexcept>

namespace kirin {

std::int64_t SpikeTrain::total_spikes() const {
    std::int64_t n = 0;
    for (const auto& nr : neurons) n += static_cast<std::int64_t>(nr.times.size());
    return n;
}

SpikeTrain encode_ttfs(std::span<const std::int32_t> codes, std::int64_t T) {
    if (T <= 0) throw std::invalid_argument("time window must be positive");
    SpikeTrain train;
    train.window_T = T;
    train.scheme = Scheme::Ttfs;
    train.neurons.resize(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const std::int32_t code = codes[i];
        const std::int64_t mag = std::abs(static_cast<std::int64_t>(code));
        if (mag >= T) throw std::invalid_argument("exceeds time window");
        auto& nr = train.neurons[i];
        nr.sign = code < 0 ? -1 : 1;
        if (mag > 0) nr.times.push_back(static_cast<std::int32_t>(mag));
    }
    return train;
}

SpikeTrain encode_rate(std::span<const std::int32_t> codes, std::int64_t T) {
    if (T <= 0) throw std::invalid_argument("time window must be positive");
    SpikeTrain train;
    train.window_T = T;
    train.scheme = Scheme::Rate;
    train.neurons.resize(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const std::int32_t code = codes[i];
        const std::int64_t mag = std::abs(static_cast<std::int64_t>(code));
        if (mag > T) throw std::invalid_argument("exceeds time window");
        auto& nr = train.neurons[i];
        nr.sign = code < 0 ? -1 : 1;
        nr.times.reserve(static_cast<std::size_t>(mag));
        for (std::int64_t t = 0; t < mag; ++t)
            nr.times.push_back(static_cast<std::int32_t>(t));
    }
    return train;
}

std::vector<std::int32_t> decode(const SpikeTrain& train) {
    std::vector<std::int32_t> out;
    out.reserve(train.neurons.size());
    for (const auto& nr : train.neurons) {
        std::int32_t mag = 0;
        if (train.scheme == Scheme::Ttfs) {
            if (nr.times.size() > 1)
                throw std::invalid_argument("ttfs neuron with more than one spike");
            mag = nr.times.empty() ? 0 : nr.times.front();
        } else {
            mag = static_cast<std::int32_t>(nr.times.size());
        }
        out.push_back(static_cast<std::int32_t>(nr.sign) * mag);
    }
    return out;
}

SpikeRateStats measure_rates(const SpikeTrain& train) {
    if (train.neurons.empty()) throw std::invalid_argument("empty train");
    SpikeRateStats stats;
    stats.neuron_count = train.neuron_count();
    std::int64_t fired = 0;
    for (const auto& nr : train.neurons) {
        stats.total_spikes += static_cast<std::int64_t>(nr.times.size());
        if (!nr.times.empty()) ++fired;
    }
    stats.mean_rate = static_cast<double>(stats.total_spikes) /
                      static_cast<double>(stats.neuron_count * train.window_T);
    stats.fired_fraction =
        static_cast<double>(fired) / static_cast<double>(stats.neuron_count);
    return stats;
}

} // namespace kirin
