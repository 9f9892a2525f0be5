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
#ifndef KIRIN_IF_ENGINE_HPP
#define KIRIN_IF_ENGINE_HPP

#include <cstdint>
#include <optional>
#include <span>

#include "kirin/spike_codec.hpp"

namespace kirin {

/// Firing threshold derived from the two quantization scales. S_th is
/// numerically equal to V_th; the silence mechanism counts crossings of S_th
/// instead of emitting spikes. scale_product keeps the original S1*S2 so the
/// fire-time multiply uses the exact same double the dequantization oracle
/// uses.
struct ThresholdSpec {
    double v_th = 1.0;
    double s_th = 1.0;
    double scale_product = 1.0; // S1 * S2 == 1 / v_th

    static ThresholdSpec from_scales(double s1, double s2);
};

/// Step-simulator state shared by the rate and classic-ttfs dynamics.
struct IFState {
    double potential = 0.0;
    std::int64_t time = 0;
    std::int64_t silence_count = 0;
    bool fired = false;
};

/// Result of a silence-threshold firing phase over an exact integer
/// accumulator. Identities, exact in the arithmetic actually performed:
///   silence_count_st * s_th + residual_v_rest == v_total
///   output_value == scale_product * v_total + bias
struct IFResult {
    double output_value = 0.0;
    std::int64_t silence_count_st = 0;
    double residual_v_rest = 0.0;
    std::int64_t v_total = 0;
    std::int64_t output_spike_time = 0; // st, clamped in emission mode
    bool truncated = false;             // emission clamp engaged
    bool negative_st = false;           // v_total < 0; not physically emittable
};

/// Silence-threshold firing. st = floor(v_total / s_th), floor toward
/// minus infinity so the algebra holds for negative accumulations.
/// emission_window > 0 switches on the diagnostic spike-emission mode where
/// the reported spike time is clamped to [0, window-1]; the default
/// exact-algebra mode carries st numerically.
IFResult if_silence_run(std::int64_t v_total, const ThresholdSpec& spec,
                        double bias, std::int64_t emission_window = 0);

struct RateRunResult {
    std::int64_t output_spikes = 0;
    double residual_v = 0.0;
    std::int64_t steps_run = 0; // includes drain steps past the input window
};

/// Rate-coded IF: integrate weighted input spikes per timestep, fire and
/// subtract v_th on every crossing. Input spikes arrive over the train's
/// window; by default the neuron then keeps draining until the potential
/// falls below threshold, so for nonnegative instances the spike count is
/// exactly floor(sum(w*N) / v_th). drain=false truncates at the window end.
RateRunResult if_rate_run(const SpikeTrain& train,
                          std::span<const std::int32_t> weights, double v_th,
                          bool drain = true);

struct ClassicTtfsResult {
    std::optional<std::int64_t> fire_time;
    std::int64_t v_at_fire = 0;       // potential integrated up to the spike
    std::int64_t v_total_full = 0;    // what full integration would have given
    std::int64_t truncated_potential = 0; // v_total_full - v_at_fire when fired
};

/// Classic single-spike TTFS IF: fires at the first threshold crossing and
/// stays silent for the rest of the window, discarding later accumulation.
/// Kept as the witness for the information-truncation failure mode the
/// silence threshold removes.
ClassicTtfsResult if_ttfs_classic_run(const SpikeTrain& train,
                                      std::span<const std::int32_t> weights,
                                      double v_th);

/// Bulk potential accumulation for a ttfs train: sum of sign * weight * time
/// over fired neurons. Integer addition is associative, so this equals the
/// timestep-by-timestep integration and the decoded-codes dot product.
std::int64_t accumulate_potential(const SpikeTrain& train,
                                  std::span<const std::int32_t> weights);

} // namespace kirin

#endif
