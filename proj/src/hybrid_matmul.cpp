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
#include "kirin/hybrid_matmul.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <stdexcept>

namespace kirin {

namespace {

std::int64_t abs64(std::int32_t v) { return std::abs(static_cast<std::int64_t>(v)); }

void check_shared_groups(const QuantTensor& t, const char* which) {
    if (t.params_normal.scale != t.params_outlier.scale ||
        t.params_normal.zero_point != t.params_outlier.zero_point)
        throw std::invalid_argument(
            std::string("scale mismatch between precision groups of operand ") + which);
}

/// Outlier channels of an operand that index the contraction axis of a
/// matmul A x B (columns of A, rows of B).
std::vector<std::int32_t> contraction_outliers(const QuantTensor& t, bool is_a) {
    const Axis want = is_a ? Axis::Column : Axis::Row;
    if (t.axis != want) return {};
    return t.outlier_channels;
}

std::vector<std::int32_t> union_sorted(std::vector<std::int32_t> a,
                                       const std::vector<std::int32_t>& b) {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
}

} // namespace

ExecutionTrace& ExecutionTrace::merge(const ExecutionTrace& other) {
    if (other.outputs > 0) {
        b_w = other.b_w;
        b_a_low = other.b_a_low;
        b_a_high = other.b_a_high;
    }
    acc_ops += other.acc_ops;
    mac_ops_high += other.mac_ops_high;
    mac_ops_low += other.mac_ops_low;
    bits_read += other.bits_read;
    bits_moved += other.bits_moved;
    bits_read_high += other.bits_read_high;
    bits_moved_high += other.bits_moved_high;
    spikes += other.spikes;
    spikes_high += other.spikes_high;
    correction_accs += other.correction_accs;
    beta_total += other.beta_total;
    lines += other.lines;
    gamma += other.gamma;
    rate_low_num += other.rate_low_num;
    rate_low_den += other.rate_low_den;
    rate_high_num += other.rate_high_num;
    rate_high_den += other.rate_high_den;
    contraction += other.contraction;
    outputs += other.outputs;
    max_spike_time = std::max(max_spike_time, other.max_spike_time);
    truncation_events += other.truncation_events;
    T = std::max(T, other.T);
    T_high = std::max(T_high, other.T_high);
    return *this;
}

std::vector<std::pair<std::int32_t, std::int32_t>>
HybridSpikeMatrix::retained_in_line(std::int64_t line) const {
    std::vector<std::pair<std::int32_t, std::int32_t>> out;
    if (dense_storage) {
        const std::int64_t nch = channel_axis == Axis::Column ? cols : rows;
        for (std::int64_t ch = 0; ch < nch; ++ch) {
            const std::int32_t code = channel_axis == Axis::Column
                                          ? dense_retained.at(line, ch)
                                          : dense_retained.at(ch, line);
            if (code != 0)
                out.emplace_back(static_cast<std::int32_t>(ch), code);
        }
        return out;
    }
    const auto lo = line_offsets[static_cast<std::size_t>(line)];
    const auto hi = line_offsets[static_cast<std::size_t>(line) + 1];
    for (std::int64_t i = lo; i < hi; ++i)
        out.emplace_back(integer_part[static_cast<std::size_t>(i)].channel,
                         integer_part[static_cast<std::size_t>(i)].code);
    return out;
}

std::int64_t count_retained(const QuantTensor& m, std::int64_t t_n) {
    if (t_n <= 0) throw std::invalid_argument("time window must be positive");
    std::int64_t count = 0;
    for (std::int64_t r = 0; r < m.codes.rows; ++r)
        for (std::int64_t c = 0; c < m.codes.cols; ++c)
            if (m.is_outlier_channel(m.channel_of(r, c)) &&
                abs64(m.codes.at(r, c)) >= t_n)
                ++count;
    return count;
}

SelectionReport select_spike_matrix(const QuantTensor& a, const QuantTensor& b,
                                    std::int64_t t_n) {
    if (a.codes.cols != b.codes.rows)
        throw std::invalid_argument("select_spike_matrix: non-conformable shapes");
    SelectionReport rep;
    rep.count_a = count_retained(a, t_n);
    rep.count_b = count_retained(b, t_n);
    rep.chosen = rep.count_a <= rep.count_b ? SelectionReport::Chosen::A
                                            : SelectionReport::Chosen::B;
    const QuantTensor& chosen = rep.chosen == SelectionReport::Chosen::A ? a : b;
    rep.beta = std::min(rep.count_a, rep.count_b);
    rep.beta_ratio =
        static_cast<double>(rep.beta) / static_cast<double>(chosen.codes.size());
    return rep;
}

HybridSpikeMatrix split(const QuantTensor& m, std::int64_t t_n, Scheme scheme) {
    if (t_n <= 0) throw std::invalid_argument("time window must be positive");
    HybridSpikeMatrix h;
    h.rows = m.codes.rows;
    h.cols = m.codes.cols;
    h.channel_axis = m.axis;
    h.window_T = t_n;
    h.params_normal = m.params_normal;
    h.params_outlier = m.params_outlier;

    const std::int64_t lines = m.axis == Axis::Column ? m.codes.rows : m.codes.cols;
    const std::int64_t nch = m.channel_count();

    h.beta = count_retained(m, t_n);
    h.dense_storage = 4 * h.beta > m.codes.size(); // COO pays off below 25%
    if (h.dense_storage) h.dense_retained = IntMatrix(h.rows, h.cols);

    h.trains.reserve(static_cast<std::size_t>(lines));
    h.line_offsets.assign(1, 0);
    std::vector<std::int32_t> line_codes(static_cast<std::size_t>(nch));
    for (std::int64_t line = 0; line < lines; ++line) {
        for (std::int64_t ch = 0; ch < nch; ++ch) {
            const std::int64_t r = m.axis == Axis::Column ? line : ch;
            const std::int64_t c = m.axis == Axis::Column ? ch : line;
            std::int32_t code = m.codes.at(r, c);
            if (m.is_outlier_channel(ch) && abs64(code) >= t_n) {
                if (h.dense_storage)
                    h.dense_retained.at(r, c) = code;
                else
                    h.integer_part.push_back(
                        {static_cast<std::int32_t>(line),
                         static_cast<std::int32_t>(ch), code});
                code = 0; // slot stays silent in the spike part
            }
            line_codes[static_cast<std::size_t>(ch)] = code;
        }
        h.trains.push_back(scheme == Scheme::Ttfs ? encode_ttfs(line_codes, t_n)
                                                  : encode_rate(line_codes, t_n));
        h.line_offsets.push_back(static_cast<std::int64_t>(h.integer_part.size()));
    }
    return h;
}

Matrix reference_matmul(const QuantTensor& a, const QuantTensor& b,
                        std::span<const double> bias) {
    if (a.codes.cols != b.codes.rows)
        throw std::invalid_argument("reference_matmul: non-conformable shapes");
    if (!bias.empty() && static_cast<std::int64_t>(bias.size()) != b.codes.cols)
        throw std::invalid_argument("bias length must match output columns");
    check_shared_groups(a, "a");
    check_shared_groups(b, "b");

    const double z = a.params_normal.scale * b.params_normal.scale;
    const std::int64_t z1 = a.params_normal.zero_point;
    const std::int64_t z2 = b.params_normal.zero_point;
    const std::int64_t k = a.codes.cols;

    std::vector<std::int64_t> row_sum_a(static_cast<std::size_t>(a.codes.rows), 0);
    std::vector<std::int64_t> col_sum_b(static_cast<std::size_t>(b.codes.cols), 0);
    if (z2 != 0)
        for (std::int64_t r = 0; r < a.codes.rows; ++r)
            for (std::int64_t i = 0; i < k; ++i)
                row_sum_a[static_cast<std::size_t>(r)] += a.codes.at(r, i);
    if (z1 != 0)
        for (std::int64_t c = 0; c < b.codes.cols; ++c)
            for (std::int64_t i = 0; i < k; ++i)
                col_sum_b[static_cast<std::size_t>(c)] += b.codes.at(i, c);

    const auto acc = matmul_i64(a.codes, b.codes);
    Matrix out(a.codes.rows, b.codes.cols);
    for (std::int64_t r = 0; r < a.codes.rows; ++r) {
        for (std::int64_t c = 0; c < b.codes.cols; ++c) {
            std::int64_t v = acc[static_cast<std::size_t>(r * b.codes.cols + c)];
            if (z1 != 0) v -= z1 * col_sum_b[static_cast<std::size_t>(c)];
            if (z2 != 0) v -= z2 * row_sum_a[static_cast<std::size_t>(r)];
            if (z1 != 0 && z2 != 0) v += k * z1 * z2;
            const double deq = z * static_cast<double>(v);
            out.at(r, c) = bias.empty() ? deq : deq + bias[static_cast<std::size_t>(c)];
        }
    }
    return out;
}

HybridMatmulResult hybrid_matmul(const QuantTensor& a, const QuantTensor& b,
                                 std::span<const double> bias,
                                 const ThresholdSpec& spec, std::int64_t t_n,
                                 const HybridMatmulOptions& opts) {
    if (a.codes.cols != b.codes.rows)
        throw std::invalid_argument("hybrid_matmul: non-conformable shapes");
    if (!bias.empty() && static_cast<std::int64_t>(bias.size()) != b.codes.cols)
        throw std::invalid_argument("bias length must match output columns");
    check_shared_groups(a, "a");
    check_shared_groups(b, "b");
    const double z = a.params_normal.scale * b.params_normal.scale;
    if (!(std::fabs(spec.scale_product - z) <= 1e-9 * std::fabs(z)))
        throw std::invalid_argument("scale mismatch between spec and tensors");

    HybridMatmulResult res;
    res.selection = select_spike_matrix(a, b, t_n);
    const bool a_chosen = res.selection.chosen == SelectionReport::Chosen::A;
    const QuantTensor& chosen = a_chosen ? a : b;
    const QuantTensor& other = a_chosen ? b : a;
    const HybridSpikeMatrix hsm = split(chosen, t_n, opts.scheme);

    const std::int64_t rows = a.codes.rows;
    const std::int64_t cols = b.codes.cols;
    const std::int64_t k = a.codes.cols;
    const std::int64_t z1 = a.params_normal.zero_point;
    const std::int64_t z2 = b.params_normal.zero_point;

    std::vector<std::int64_t> row_sum_a(static_cast<std::size_t>(rows), 0);
    std::vector<std::int64_t> col_sum_b(static_cast<std::size_t>(cols), 0);
    if (z2 != 0)
        for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t i = 0; i < k; ++i)
                row_sum_a[static_cast<std::size_t>(r)] += a.codes.at(r, i);
    if (z1 != 0)
        for (std::int64_t c = 0; c < cols; ++c)
            for (std::int64_t i = 0; i < k; ++i)
                col_sum_b[static_cast<std::size_t>(c)] += b.codes.at(i, c);

    // Per line: the weighted-spike terms (channel, sign*t) and the retained
    // integer terms (channel, code). Eq-of-dot-product exactness rests on all
    // of this staying in 64-bit integer arithmetic until fire time.
    const std::int64_t nlines = hsm.line_count();
    std::vector<std::vector<std::pair<std::int32_t, std::int64_t>>> spike_terms(
        static_cast<std::size_t>(nlines));
    std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> int_terms(
        static_cast<std::size_t>(nlines));
    std::int64_t spike_events = 0;
    std::int64_t max_spike_time = -1;
    for (std::int64_t line = 0; line < nlines; ++line) {
        const SpikeTrain& train = hsm.trains[static_cast<std::size_t>(line)];
        auto& st = spike_terms[static_cast<std::size_t>(line)];
        for (std::int64_t ch = 0; ch < train.neuron_count(); ++ch) {
            const auto& nr = train.neurons[static_cast<std::size_t>(ch)];
            for (std::int32_t t : nr.times) {
                if (opts.scheme == Scheme::Ttfs)
                    st.emplace_back(static_cast<std::int32_t>(ch),
                                    static_cast<std::int64_t>(nr.sign) * t);
                else
                    st.emplace_back(static_cast<std::int32_t>(ch),
                                    static_cast<std::int64_t>(nr.sign));
                ++spike_events;
                max_spike_time = std::max<std::int64_t>(max_spike_time, t);
            }
        }
        int_terms[static_cast<std::size_t>(line)] = hsm.retained_in_line(line);
    }

    res.output = Matrix(rows, cols);
    ExecutionTrace& tr = res.trace;
    for (std::int64_t r = 0; r < rows; ++r) {
        for (std::int64_t c = 0; c < cols; ++c) {
            const std::int64_t line = a_chosen ? r : c;
            std::int64_t v = 0;
            for (const auto& [ch, wt] : spike_terms[static_cast<std::size_t>(line)])
                v += wt * (a_chosen ? other.codes.at(ch, c) : other.codes.at(r, ch));
            for (const auto& [ch, code] : int_terms[static_cast<std::size_t>(line)])
                v += static_cast<std::int64_t>(code) *
                     (a_chosen ? other.codes.at(ch, c) : other.codes.at(r, ch));
            if (z1 != 0) {
                v -= z1 * col_sum_b[static_cast<std::size_t>(c)];
                ++tr.correction_accs;
            }
            if (z2 != 0) {
                v -= z2 * row_sum_a[static_cast<std::size_t>(r)];
                ++tr.correction_accs;
            }
            if (z1 != 0 && z2 != 0) {
                v += k * z1 * z2;
                ++tr.correction_accs;
            }
            const IFResult fire = if_silence_run(
                v, spec, bias.empty() ? 0.0 : bias[static_cast<std::size_t>(c)],
                opts.emission_window);
            res.output.at(r, c) = fire.output_value;
            if (fire.truncated) ++tr.truncation_events;
        }
    }

    // Operation counts at closed-form granularity. Every per-(line,channel)
    // event pairs with each output the line feeds; a projection reads the
    // weight per event, an attention product instead moves both operands per
    // contraction channel.
    const std::int64_t outputs_per_line = a_chosen ? cols : rows;
    const int b_w = b.params_normal.bit_width;
    const int b_a_low = a.params_normal.bit_width;
    const int b_a_high = a.params_outlier.bit_width;
    std::int64_t beta_total = hsm.beta;

    tr.kind = opts.kind;
    tr.method = "kirin";
    tr.T = t_n;
    tr.b_w = b_w;
    tr.b_a_low = b_a_low;
    tr.b_a_high = b_a_high;
    tr.lines = nlines;
    tr.beta_total = static_cast<std::uint64_t>(beta_total);
    tr.gamma = static_cast<std::int64_t>(contraction_outliers(chosen, a_chosen).size());
    tr.contraction = k;
    tr.outputs = static_cast<std::uint64_t>(rows * cols);
    tr.max_spike_time = max_spike_time;
    tr.spikes = static_cast<std::uint64_t>(spike_events * outputs_per_line);
    tr.mac_ops_high = static_cast<std::uint64_t>(beta_total * outputs_per_line);
    tr.acc_ops = tr.spikes + tr.correction_accs;
    if (opts.kind == MatmulKind::Linear) {
        tr.bits_read_high =
            static_cast<std::uint64_t>(beta_total * outputs_per_line * b_w);
        tr.bits_read = static_cast<std::uint64_t>(
            (spike_events + beta_total) * outputs_per_line * b_w);
        tr.bits_moved_high =
            static_cast<std::uint64_t>(beta_total * b_a_high * outputs_per_line);
        tr.bits_moved = static_cast<std::uint64_t>(
            (spike_events * 1 + beta_total * b_a_high) * outputs_per_line);
    } else {
        tr.bits_read = 0;
        tr.bits_moved_high =
            static_cast<std::uint64_t>(2 * k * beta_total * b_a_high);
        tr.bits_moved = static_cast<std::uint64_t>(
            2 * k * (spike_events * 1 + beta_total * b_a_high));
    }
    tr.rate_low_num = spike_events;
    tr.rate_low_den = (nlines * k - beta_total) * t_n;
    if (tr.rate_low_den == 0) tr.rate_low_den = 1;
    return res;
}

ExecutionTrace trace_quant_matmul(const QuantTensor& a, const QuantTensor& b,
                                  MatmulKind kind) {
    if (a.codes.cols != b.codes.rows)
        throw std::invalid_argument("trace_quant_matmul: non-conformable shapes");
    ExecutionTrace tr;
    tr.kind = kind;
    tr.method = "quant";
    tr.b_w = b.params_normal.bit_width;
    tr.b_a_low = a.params_normal.bit_width;
    tr.b_a_high = a.params_outlier.bit_width;
    const std::int64_t tokens = a.codes.rows;
    const std::int64_t k = a.codes.cols;
    const std::int64_t n = b.codes.cols;
    tr.contraction = k;
    tr.outputs = static_cast<std::uint64_t>(tokens * n);
    tr.lines = tokens;
    tr.mac_ops_low = static_cast<std::uint64_t>(tokens * k * n);
    if (kind == MatmulKind::Linear) {
        tr.bits_read = static_cast<std::uint64_t>(tokens * k * n * tr.b_w);
        tr.bits_moved = static_cast<std::uint64_t>(tokens * k * n * tr.b_a_low);
    } else {
        tr.bits_read = 0;
        tr.bits_moved = static_cast<std::uint64_t>(2 * tokens * k * k * tr.b_a_low);
    }
    return tr;
}

ExecutionTrace trace_mixed_quant_matmul(const QuantTensor& a, const QuantTensor& b,
                                        MatmulKind kind) {
    if (a.codes.cols != b.codes.rows)
        throw std::invalid_argument("trace_mixed_quant_matmul: non-conformable shapes");
    ExecutionTrace tr;
    tr.kind = kind;
    tr.method = "mixed_quant";
    tr.b_w = b.params_normal.bit_width;
    tr.b_a_low = a.params_normal.bit_width;
    tr.b_a_high = a.params_outlier.bit_width;
    const std::int64_t tokens = a.codes.rows;
    const std::int64_t k = a.codes.cols;
    const std::int64_t n = b.codes.cols;
    const auto high =
        union_sorted(contraction_outliers(a, true), contraction_outliers(b, false));
    const std::int64_t gamma = static_cast<std::int64_t>(high.size());
    tr.gamma = gamma;
    tr.contraction = k;
    tr.outputs = static_cast<std::uint64_t>(tokens * n);
    tr.lines = tokens;
    tr.mac_ops_high = static_cast<std::uint64_t>(tokens * gamma * n);
    tr.mac_ops_low = static_cast<std::uint64_t>(tokens * (k - gamma) * n);
    if (kind == MatmulKind::Linear) {
        tr.bits_read_high = static_cast<std::uint64_t>(tokens * gamma * n * tr.b_w);
        tr.bits_read = static_cast<std::uint64_t>(tokens * k * n * tr.b_w);
        tr.bits_moved_high =
            static_cast<std::uint64_t>(tokens * n * gamma * tr.b_a_high);
        tr.bits_moved = static_cast<std::uint64_t>(
            tokens * n * (gamma * tr.b_a_high + (k - gamma) * tr.b_a_low));
    } else {
        tr.bits_read = 0;
        tr.bits_moved_high =
            static_cast<std::uint64_t>(2 * tokens * k * gamma * tr.b_a_high);
        tr.bits_moved = static_cast<std::uint64_t>(
            2 * tokens * k * (gamma * tr.b_a_high + (k - gamma) * tr.b_a_low));
    }
    return tr;
}

ExecutionTrace trace_snn_baseline_matmul(const QuantTensor& a, const QuantTensor& b,
                                         std::int64_t t_low, std::int64_t t_high,
                                         MatmulKind kind) {
    if (kind == MatmulKind::Attention) {
        // rate-coded baselines leave attention products in the integer domain
        ExecutionTrace tr = trace_mixed_quant_matmul(a, b, kind);
        tr.method = "snn_baseline";
        tr.T = t_low;
        tr.T_high = t_high;
        return tr;
    }
    if (a.codes.cols != b.codes.rows)
        throw std::invalid_argument("trace_snn_baseline_matmul: non-conformable shapes");
    ExecutionTrace tr;
    tr.kind = kind;
    tr.method = "snn_baseline";
    tr.T = t_low;
    tr.T_high = t_high;
    tr.b_w = b.params_normal.bit_width;
    tr.b_a_low = a.params_normal.bit_width;
    tr.b_a_high = a.params_outlier.bit_width;
    const std::int64_t tokens = a.codes.rows;
    const std::int64_t k = a.codes.cols;
    const std::int64_t n = b.codes.cols;
    const auto high = contraction_outliers(a, true);
    const std::int64_t gamma = static_cast<std::int64_t>(high.size());
    tr.gamma = gamma;
    tr.contraction = k;
    tr.outputs = static_cast<std::uint64_t>(tokens * n);
    tr.lines = tokens;

    std::int64_t spikes_low = 0;
    std::int64_t spikes_high = 0;
    std::int64_t max_t = -1;
    for (std::int64_t r = 0; r < tokens; ++r) {
        for (std::int64_t ch = 0; ch < k; ++ch) {
            const std::int64_t mag = abs64(a.codes.at(r, ch));
            if (mag == 0) continue;
            const bool is_high = std::binary_search(high.begin(), high.end(),
                                                    static_cast<std::int32_t>(ch));
            (is_high ? spikes_high : spikes_low) += mag;
            max_t = std::max(max_t, mag - 1); // rate spikes occupy t = 0..N-1
        }
    }
    tr.spikes = static_cast<std::uint64_t>((spikes_low + spikes_high) * n);
    tr.spikes_high = static_cast<std::uint64_t>(spikes_high * n);
    tr.acc_ops = tr.spikes;
    tr.bits_read_high = static_cast<std::uint64_t>(spikes_high * n * tr.b_w);
    tr.bits_read =
        static_cast<std::uint64_t>((spikes_low + spikes_high) * n * tr.b_w);
    tr.bits_moved_high = static_cast<std::uint64_t>(spikes_high * n);
    tr.bits_moved = static_cast<std::uint64_t>((spikes_low + spikes_high) * n);
    tr.max_spike_time = max_t;
    tr.rate_low_num = spikes_low;
    tr.rate_low_den = tokens * (k - gamma) * t_low;
    if (tr.rate_low_den == 0) tr.rate_low_den = 1;
    tr.rate_high_num = spikes_high;
    tr.rate_high_den = tokens * gamma * t_high;
    if (tr.rate_high_den == 0) tr.rate_high_den = 1;
    return tr;
}

} // namespace kirin
