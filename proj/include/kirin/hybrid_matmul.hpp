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
#ifndef KIRIN_HYBRID_MATMUL_HPP
#define KIRIN_HYBRID_MATMUL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kirin/if_engine.hpp"
#include "kirin/quantizer.hpp"
#include "kirin/spike_codec.hpp"

namespace kirin {

/// Whether a matmul is an activation-by-weight projection or a product of two
/// intermediate activations. The two kinds count data movement differently:
/// projections read weights per use, attention products move both operands
/// once per contraction channel.
enum class MatmulKind { Linear, Attention };

/// A quantized matrix split for hybrid execution: most elements live as TTFS
/// (or rate) spike trains over the low window, outlier elements whose spike
/// time cannot fit that window stay behind as integers.
struct HybridSpikeMatrix {
    struct Retained {
        std::int32_t line = 0;
        std::int32_t channel = 0;
        std::int32_t code = 0;
    };

    std::vector<SpikeTrain> trains;        // one per line, neurons indexed by channel
    std::vector<Retained> integer_part;    // coordinate list, sorted by line
    std::vector<std::int64_t> line_offsets; // CSR offsets into integer_part
    IntMatrix dense_retained;              // used instead when density > 25%
    bool dense_storage = false;

    std::int64_t rows = 0;
    std::int64_t cols = 0;
    Axis channel_axis = Axis::Column;
    std::int64_t window_T = 0;
    QuantParams params_normal;
    QuantParams params_outlier;
    std::int64_t beta = 0; // retained integer count

    std::int64_t line_count() const {
        return static_cast<std::int64_t>(trains.size());
    }
    /// Retained (channel, code) pairs for one line, independent of storage.
    std::vector<std::pair<std::int32_t, std::int32_t>> retained_in_line(
        std::int64_t line) const;
};

struct SelectionReport {
    std::int64_t count_a = 0;
    std::int64_t count_b = 0;
    enum class Chosen { A, B } chosen = Chosen::A;
    std::int64_t beta = 0;
    double beta_ratio = 0.0; // beta / element count of the chosen matrix
};

/// Aggregated operation counts from one executed (or statically counted)
/// matmul, in exactly the granularity the energy closed forms price.
/// Spike/MAC/bit counts already include the per-output pairing factor.
struct ExecutionTrace {
    std::uint64_t acc_ops = 0;        // spike accumulations + zero-point adds
    std::uint64_t mac_ops_high = 0;   // high-precision MACs (integer part / outlier channels)
    std::uint64_t mac_ops_low = 0;    // dense low-precision MACs (quantized paths)
    std::uint64_t bits_read = 0;      // weight bits read
    std::uint64_t bits_moved = 0;     // activation / spike bits moved
    std::uint64_t bits_read_high = 0; // subset on the high-precision path
    std::uint64_t bits_moved_high = 0;
    std::uint64_t spikes = 0;         // priced spike events, low + high window
    std::uint64_t spikes_high = 0;    // subset running on the high window
    std::uint64_t correction_accs = 0;

    // measured hybridization parameters, exact rationals where fractional
    std::uint64_t beta_total = 0;     // retained integers in the spike matrix
    std::int64_t lines = 0;           // spike train count of the chosen matrix
    std::int64_t gamma = 0;           // outlier channels on the contraction axis
    std::int64_t T = 0;               // low window
    std::int64_t T_high = 0;          // high window (rate baselines)
    int b_w = 4;
    int b_a_low = 4;
    int b_a_high = 8;
    std::int64_t rate_low_num = 0, rate_low_den = 1;   // spikes/(neurons*T), low
    std::int64_t rate_high_num = 0, rate_high_den = 1; // spikes/(neurons*T), high

    std::int64_t contraction = 0;
    std::uint64_t outputs = 0;
    std::int64_t max_spike_time = -1; // largest spike time processed, -1 if none
    std::uint64_t truncation_events = 0;
    MatmulKind kind = MatmulKind::Linear;
    std::string method;

    double beta_mean() const {
        return lines > 0 ? static_cast<double>(beta_total) / static_cast<double>(lines)
                         : 0.0;
    }
    ExecutionTrace& merge(const ExecutionTrace& other);
};

/// Count of elements that must stay in integer form: in an outlier channel
/// and with a code magnitude that cannot be emitted inside the low window
/// (|code| >= T_n; a spike at t = T_n does not exist in a T_n-step window).
std::int64_t count_retained(const QuantTensor& m, std::int64_t t_n);

/// Pick the operand with fewer retained integers as the spike matrix.
/// Ties go to A, the activation-side operand by convention.
SelectionReport select_spike_matrix(const QuantTensor& a, const QuantTensor& b,
                                    std::int64_t t_n);

/// Split a tensor into spike and integer parts. Lines run perpendicular to
/// the channel axis, so neurons within a train are indexed by contraction
/// channel. Retained slots stay silent in the train; decode(spike part) plus
/// the integer part reconstructs the codes exactly.
HybridSpikeMatrix split(const QuantTensor& m, std::int64_t t_n,
                        Scheme scheme = Scheme::Ttfs);

struct HybridMatmulOptions {
    Scheme scheme = Scheme::Ttfs;
    MatmulKind kind = MatmulKind::Linear;
    std::int64_t emission_window = 0; // 0 = exact-algebra mode
};

struct HybridMatmulResult {
    Matrix output;
    ExecutionTrace trace;
    SelectionReport selection;
};

/// Y = IF(spike part, other) + integer part x other, fired through the
/// silence threshold. With symmetric quantization the result is bit-exact
/// against integer-matmul-then-dequantize; with asymmetric activations the
/// zero-point corrections are applied to the accumulator at fire time.
HybridMatmulResult hybrid_matmul(const QuantTensor& a, const QuantTensor& b,
                                 std::span<const double> bias,
                                 const ThresholdSpec& spec, std::int64_t t_n,
                                 const HybridMatmulOptions& opts = {});

/// The quantized-ANN reference: plain 64-bit integer matmul, zero-point
/// corrections, then one dequantizing multiply per element. Independent of
/// the spiking path; losslessness is asserted against this.
Matrix reference_matmul(const QuantTensor& a, const QuantTensor& b,
                        std::span<const double> bias);

/// Static operation counting for the non-spiking execution styles; used to
/// feed the energy model without simulating those paths.
ExecutionTrace trace_quant_matmul(const QuantTensor& a, const QuantTensor& b,
                                  MatmulKind kind);
ExecutionTrace trace_mixed_quant_matmul(const QuantTensor& a, const QuantTensor& b,
                                        MatmulKind kind);
/// Rate-coded baseline: every channel spikes, outlier channels on the high
/// window. Attention-kind products fall back to mixed-precision integer
/// counting because the rate baselines do not convert attention products.
ExecutionTrace trace_snn_baseline_matmul(const QuantTensor& a, const QuantTensor& b,
                                         std::int64_t t_low, std::int64_t t_high,
                                         MatmulKind kind);

} // namespace kirin

#endif
