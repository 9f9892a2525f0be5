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
#include "kirin/if_engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace kirin {

ThresholdSpec ThresholdSpec::from_scales(double s1, double s2) {
    if (!(s1 > 0.0) || !(s2 > 0.0) || !std::isfinite(s1) || !std::isfinite(s2))
        throw std::invalid_argument("scales must be positive and finite");
    ThresholdSpec spec;
    spec.scale_product = s1 * s2;
    spec.v_th = 1.0 / spec.scale_product;
    spec.s_th = spec.v_th;
    return spec;
}

IFResult if_silence_run(std::int64_t v_total, const ThresholdSpec& spec,
                        double bias, std::int64_t emission_window) {
    if (!(spec.s_th > 0.0) || !std::isfinite(spec.s_th) ||
        !std::isfinite(spec.scale_product))
        throw std::invalid_argument("invalid threshold spec");

    const double v = static_cast<double>(v_total);
    std::int64_t st =
        static_cast<std::int64_t>(std::floor(spec.scale_product * v));
    // The product can round across an integer boundary; nudge st so the
    // residual lands in [0, s_th) as computed in double arithmetic.
    double rest = v - static_cast<double>(st) * spec.s_th;
    while (rest < 0.0) {
        --st;
        rest = v - static_cast<double>(st) * spec.s_th;
    }
    while (rest >= spec.s_th) {
        ++st;
        rest = v - static_cast<double>(st) * spec.s_th;
    }

    IFResult r;
    r.v_total = v_total;
    r.silence_count_st = st;
    r.residual_v_rest = rest;
    r.output_value = spec.scale_product * v + bias;
    r.negative_st = st < 0;
    if (emission_window > 0) {
        r.output_spike_time = std::clamp<std::int64_t>(st, 0, emission_window - 1);
        r.truncated = st < 0 || st > emission_window - 1;
    } else {
        r.output_spike_time = st;
    }
    return r;
}

namespace {

/// Per-timestep input currents for a train, one slot per timestep in
/// [0, window). Current at t sums sign * weight over neurons spiking at t
/// for rate dynamics, and sign * weight * t for time-weighted ttfs dynamics.
std::vector<std::int64_t> timestep_currents(const SpikeTrain& train,
                                            std::span<const std::int32_t> weights,
                                            bool time_weighted) {
    if (static_cast<std::size_t>(train.neuron_count()) != weights.size())
        throw std::invalid_argument("weights length must match neuron count");
    std::vector<std::int64_t> current(static_cast<std::size_t>(train.window_T), 0);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const auto& nr = train.neurons[i];
        const std::int64_t w =
            static_cast<std::int64_t>(nr.sign) * static_cast<std::int64_t>(weights[i]);
        for (std::int32_t t : nr.times)
            current[static_cast<std::size_t>(t)] +=
                time_weighted ? w * static_cast<std::int64_t>(t) : w;
    }
    return current;
}

} // namespace

RateRunResult if_rate_run(const SpikeTrain& train,
                          std::span<const std::int32_t> weights, double v_th,
                          bool drain) {
    if (train.scheme != Scheme::Rate)
        throw std::invalid_argument("if_rate_run expects a rate train");
    if (!(v_th > 0.0)) throw std::invalid_argument("v_th must be positive");
    const auto current = timestep_currents(train, weights, /*time_weighted=*/false);

    RateRunResult res;
    double v = 0.0;
    for (std::int64_t t = 0; t < train.window_T; ++t) {
        v += static_cast<double>(current[static_cast<std::size_t>(t)]);
        if (v >= v_th) {
            v -= v_th;
            ++res.output_spikes;
        }
        ++res.steps_run;
    }
    if (drain) {
        // keep firing until no further potential can cross the threshold
        constexpr std::int64_t kMaxDrainSteps = 100'000'000;
        std::int64_t guard = 0;
        while (v >= v_th) {
            v -= v_th;
            ++res.output_spikes;
            ++res.steps_run;
            if (++guard > kMaxDrainSteps)
                throw std::runtime_error("rate drain did not converge");
        }
    }
    res.residual_v = v;
    return res;
}

ClassicTtfsResult if_ttfs_classic_run(const SpikeTrain& train,
                                      std::span<const std::int32_t> weights,
                                      double v_th) {
    if (train.scheme != Scheme::Ttfs)
        throw std::invalid_argument("if_ttfs_classic_run expects a ttfs train");
    const auto current = timestep_currents(train, weights, /*time_weighted=*/true);

    ClassicTtfsResult res;
    IFState state;
    std::int64_t v = 0;
    for (std::int64_t t = 0; t < train.window_T; ++t) {
        const std::int64_t i = current[static_cast<std::size_t>(t)];
        res.v_total_full += i;
        if (state.fired) continue; // silent for the rest of the window
        v += i;
        if (static_cast<double>(v) >= v_th) {
            state.fired = true;
            res.fire_time = t;
            res.v_at_fire = v;
            v = 0; // reset on fire
        }
        state.time = t;
        state.potential = static_cast<double>(v);
    }
    if (res.fire_time)
        res.truncated_potential = res.v_total_full - res.v_at_fire;
    return res;
}

std::int64_t accumulate_potential(const SpikeTrain& train,
                                  std::span<const std::int32_t> weights) {
    if (train.scheme != Scheme::Ttfs)
        throw std::invalid_argument("accumulate_potential expects a ttfs train");
    if (static_cast<std::size_t>(train.neuron_count()) != weights.size())
        throw std::invalid_argument("weights length must match neuron count");
    std::int64_t v = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const auto& nr = train.neurons[i];
        if (nr.times.empty()) continue;
        v += static_cast<std::int64_t>(nr.sign) *
             static_cast<std::int64_t>(weights[i]) *
             static_cast<std::int64_t>(nr.times.front());
    }
    return v;
}

} // namespace kirin
