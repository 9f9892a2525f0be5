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
#ifndef KIRIN_ENERGY_MODEL_HPP
#define KIRIN_ENERGY_MODEL_HPP

#include <cstdint>
#include <map>
#include <string>

#include "kirin/hybrid_matmul.hpp"

namespace kirin {

/// Exact fraction for measured spike rates and retained-integer averages.
/// Keeping these rational lets closed-form operation counts cancel to exact
/// integers, so the analytical formulas and the counting oracle agree to the
/// bit on simulated instances.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d);
    static Rational from_double(double v);
    static Rational from_int(std::int64_t v) { return Rational(v, 1); }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Energy cost table, normalized so a 4-4-4 accumulate is 1.00 unit.
/// Entries mirror a 22 nm process measurement set; unlisted MAC bit-width
/// triples are rejected rather than interpolated.
struct EnergyConstants {
    double acc_4_4_4 = 1.00;
    double acc_5_5_5 = 1.18;
    double mac_1_4_16 = 4.06;
    double mac_4_4_32 = 8.66;
    double mac_4_5_32 = 9.24;
    double mac_4_8_32 = 10.94;
    double mac_1_16_32 = 10.89;
    double mac_2_16_32 = 11.46;
    double mac_3_16_32 = 13.28;
    double read_per_bit = 6.04;
    double move_per_bit = 11.04;
    /// Optional absolute-unit conversion; 0 means report normalized units.
    double joules_per_unit = 0.0;

    double mac(int b_w, int b_a, int acc_width = 32) const;
    /// ACC cost by accumulated bit width. The table prices 4- and 5-bit
    /// accumulates only; wider paths fall back to the 5-bit entry unless
    /// strict lookup is requested.
    double acc(int bits, bool strict = false) const;

    std::string to_json() const;
    static EnergyConstants from_json(const std::string& text);
    static EnergyConstants load_file(const std::string& path);
};

/// Dimension and hybridization parameters feeding the closed forms.
struct EnergyInputs {
    std::int64_t B = 1;
    std::int64_t S = 1;
    std::int64_t H_in = 1;
    std::int64_t H_out = 1;
    int b_w = 4;
    int b_a_low = 4;
    int b_a_high = 8;
    std::int64_t gamma = 0;   // outlier channels
    Rational beta{0, 1};      // retained integers per spike-train line
    std::int64_t T_low = 16;
    std::int64_t T_high = 256;
    Rational S_r_low{1, 16};  // spike rate, low window
    Rational S_r_high{1, 256};

    /// Parameters for a measured matmul, ready for exact substitution back
    /// into the closed forms.
    static EnergyInputs from_trace(const ExecutionTrace& t);
};

struct EnergyBreakdown {
    double compute = 0.0;
    double read_data = 0.0;
    double move_data = 0.0;
    double total() const { return compute + read_data + move_data; }
};

EnergyBreakdown operator+(const EnergyBreakdown& a, const EnergyBreakdown& b);

// Linear-projection energies.
EnergyBreakdown le_q(const EnergyInputs& in, const EnergyConstants& c);
EnergyBreakdown le_mq_high(const EnergyInputs& in, const EnergyConstants& c);
EnergyBreakdown le_q_low(const EnergyInputs& in, const EnergyConstants& c);
EnergyBreakdown le_mq(const EnergyInputs& in, const EnergyConstants& c);
EnergyBreakdown le_s_high(const EnergyInputs& in, const EnergyConstants& c);
EnergyBreakdown le_s_low(const EnergyInputs& in, const EnergyConstants& c);
EnergyBreakdown le_s(const EnergyInputs& in, const EnergyConstants& c);
EnergyBreakdown le_kirin(const EnergyInputs& in, const EnergyConstants& c);

// Attention-product energies.
EnergyBreakdown ae_q(const EnergyInputs& in, const EnergyConstants& c);
EnergyBreakdown ae_mq_high(const EnergyInputs& in, const EnergyConstants& c);
EnergyBreakdown ae_mq_low(const EnergyInputs& in, const EnergyConstants& c);
EnergyBreakdown ae_mq(const EnergyInputs& in, const EnergyConstants& c);
EnergyBreakdown ae_kirin(const EnergyInputs& in, const EnergyConstants& c);

/// Prices the operations a simulation actually counted. On any instance
/// whose measured beta / gamma / spike rates are substituted back into the
/// matching closed form, the two agree exactly, term by term.
EnergyBreakdown counting_oracle(const ExecutionTrace& trace,
                                const EnergyConstants& c);

/// Full linear-attention block (four projections, two attention products)
/// for each execution style, plus reduction percentages against the plain
/// quantization baseline.
struct MethodComparison {
    struct Entry {
        std::map<std::string, EnergyBreakdown> per_component;
        EnergyBreakdown block;
        double reduction_vs_quant_pct = 0.0;
    };
    std::map<std::string, Entry> methods; // quant, mixed_quant, snn_baseline, kirin
    double joules_per_unit = 0.0;
};

MethodComparison method_comparison(const EnergyInputs& in, const EnergyConstants& c);

} // namespace kirin

#endif
