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
#include "kirin/energy_model.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace kirin {

namespace {

/// Product of integer factors and rationals kept exact in 128-bit arithmetic
/// while it fits; the quotient is returned as an exact double whenever the
/// denominator divides out (it always does for measured rates, where the
/// denominator is built from the same factors).
class Term {
public:
    Term& mul(std::int64_t v) {
        if (overflowed_) {
            approx_ *= static_cast<double>(v);
            return *this;
        }
        if (would_overflow(num_, v)) spill();
        if (overflowed_)
            approx_ *= static_cast<double>(v);
        else {
            num_ *= v;
            reduce();
        }
        return *this;
    }
    Term& mul(const Rational& r) {
        if (overflowed_) {
            approx_ *= r.value();
            return *this;
        }
        if (would_overflow(num_, r.num) || would_overflow(den_, r.den)) spill();
        if (overflowed_)
            approx_ *= r.value();
        else {
            num_ *= r.num;
            den_ *= r.den;
            reduce();
        }
        return *this;
    }
    double value() const {
        if (overflowed_) return approx_;
        if (den_ != 0 && num_ % den_ == 0)
            return static_cast<double>(num_ / den_);
        return static_cast<double>(num_) / static_cast<double>(den_);
    }

private:
    __int128 num_ = 1;
    __int128 den_ = 1;
    bool overflowed_ = false;
    double approx_ = 1.0;

    static double to_double(__int128 v) { return static_cast<double>(v); }
    static bool would_overflow(__int128 cur, std::int64_t v) {
        if (v == 0 || cur == 0) return false;
        const __int128 limit = (__int128(1) << 100);
        __int128 av = v < 0 ? -__int128(v) : __int128(v);
        __int128 ac = cur < 0 ? -cur : cur;
        return ac > limit / av;
    }
    void reduce() {
        // keep magnitudes tame with a cheap power-of-two + small-prime trim
        while (num_ % 2 == 0 && den_ % 2 == 0) {
            num_ /= 2;
            den_ /= 2;
        }
        for (std::int64_t p : {3, 5, 7})
            while (num_ % p == 0 && den_ % p == 0) {
                num_ /= p;
                den_ /= p;
            }
    }
    void spill() {
        approx_ = to_double(num_) / to_double(den_);
        overflowed_ = true;
    }
};

double term(std::initializer_list<std::int64_t> ints,
            std::initializer_list<Rational> rats = {}) {
    Term t;
    for (auto v : ints) t.mul(v);
    for (const auto& r : rats) t.mul(r);
    return t.value();
}

Rational minus(std::int64_t whole, const Rational& r) {
    // whole - r, exact while the cross product fits
    if (whole > 0 &&
        r.den > std::numeric_limits<std::int64_t>::max() / (whole + 1))
        return Rational::from_double(static_cast<double>(whole) - r.value());
    return Rational(whole * r.den - r.num, r.den);
}

} // namespace

Rational::Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den == 0) throw std::invalid_argument("rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
}

Rational Rational::from_double(double v) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite rate");
    if (v == 0.0) return Rational(0, 1);
    int exp = 0;
    double m = std::frexp(v, &exp); // v = m * 2^exp, |m| in [0.5, 1)
    std::int64_t num = static_cast<std::int64_t>(std::ldexp(m, 53));
    int shift = exp - 53;
    while (num % 2 == 0 && shift < 0) {
        num /= 2;
        ++shift;
    }
    if (shift >= 0) {
        if (shift > 10) throw std::invalid_argument("rate too large");
        return Rational(num << shift, 1);
    }
    if (-shift > 62) {
        // below exact-representation reach; round to a 2^-40 grid
        return Rational(static_cast<std::int64_t>(std::llround(v * 0x1p40)),
                        std::int64_t(1) << 40);
    }
    return Rational(num, std::int64_t(1) << -shift);
}

double EnergyConstants::mac(int b_w, int b_a, int acc_width) const {
    struct Key {
        int w, a, acc;
        double EnergyConstants::*field;
    };
    static constexpr Key table[] = {
        {1, 4, 16, &EnergyConstants::mac_1_4_16},
        {4, 4, 32, &EnergyConstants::mac_4_4_32},
        {4, 5, 32, &EnergyConstants::mac_4_5_32},
        {4, 8, 32, &EnergyConstants::mac_4_8_32},
        {1, 16, 32, &EnergyConstants::mac_1_16_32},
        {2, 16, 32, &EnergyConstants::mac_2_16_32},
        {3, 16, 32, &EnergyConstants::mac_3_16_32},
    };
    const int acc_eff = (b_w == 1 && b_a == 4) ? 16 : acc_width;
    for (const auto& k : table)
        if (k.w == b_w && k.a == b_a && k.acc == acc_eff) return this->*(k.field);
    std::ostringstream os;
    os << "no energy constant for MAC " << b_w << "-" << b_a << "-" << acc_width;
    throw std::invalid_argument(os.str());
}

double EnergyConstants::acc(int bits, bool strict) const {
    if (bits <= 4) return acc_4_4_4;
    if (bits == 5) return acc_5_5_5;
    if (strict) {
        std::ostringstream os;
        os << "no energy constant for ACC " << bits << "-" << bits << "-" << bits;
        throw std::invalid_argument(os.str());
    }
    return acc_5_5_5; // widest priced accumulate
}

std::string EnergyConstants::to_json() const {
    nlohmann::ordered_json j;
    j["acc_4_4_4"] = acc_4_4_4;
    j["acc_5_5_5"] = acc_5_5_5;
    j["mac_1_4_16"] = mac_1_4_16;
    j["mac_4_4_32"] = mac_4_4_32;
    j["mac_4_5_32"] = mac_4_5_32;
    j["mac_4_8_32"] = mac_4_8_32;
    j["mac_1_16_32"] = mac_1_16_32;
    j["mac_2_16_32"] = mac_2_16_32;
    j["mac_3_16_32"] = mac_3_16_32;
    j["read_per_bit"] = read_per_bit;
    j["move_per_bit"] = move_per_bit;
    j["joules_per_unit"] = joules_per_unit;
    return j.dump(2);
}

EnergyConstants EnergyConstants::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    EnergyConstants c;
    auto get = [&](const char* key, double& field) {
        if (j.contains(key)) field = j.at(key).get<double>();
    };
    get("acc_4_4_4", c.acc_4_4_4);
    get("acc_5_5_5", c.acc_5_5_5);
    get("mac_1_4_16", c.mac_1_4_16);
    get("mac_4_4_32", c.mac_4_4_32);
    get("mac_4_5_32", c.mac_4_5_32);
    get("mac_4_8_32", c.mac_4_8_32);
    get("mac_1_16_32", c.mac_1_16_32);
    get("mac_2_16_32", c.mac_2_16_32);
    get("mac_3_16_32", c.mac_3_16_32);
    get("read_per_bit", c.read_per_bit);
    get("move_per_bit", c.move_per_bit);
    get("joules_per_unit", c.joules_per_unit);
    for (double v : {c.acc_4_4_4, c.acc_5_5_5, c.read_per_bit, c.move_per_bit})
        if (!(v > 0.0)) throw std::invalid_argument("energy constants must be positive");
    return c;
}

EnergyConstants EnergyConstants::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open constants file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

EnergyInputs EnergyInputs::from_trace(const ExecutionTrace& t) {
    EnergyInputs in;
    in.B = 1;
    // For projections the token count is the line dimension of the
    // activation side; attention products are priced on the square-output
    // convention where H_out names the contraction width.
    if (t.kind == MatmulKind::Linear) {
        in.S = t.lines;
        in.H_in = t.contraction;
        in.H_out = t.lines > 0 ? static_cast<std::int64_t>(t.outputs) / t.lines : 0;
    } else {
        in.S = t.lines;
        in.H_in = t.contraction;
        in.H_out = t.contraction;
    }
    in.b_w = t.b_w;
    in.b_a_low = t.b_a_low;
    in.b_a_high = t.b_a_high;
    in.gamma = t.gamma;
    in.beta = Rational(static_cast<std::int64_t>(t.beta_total),
                       t.lines > 0 ? t.lines : 1);
    in.T_low = t.T > 0 ? t.T : 1;
    in.T_high = t.T_high > 0 ? t.T_high : in.T_low;
    in.S_r_low = Rational(t.rate_low_num, t.rate_low_den > 0 ? t.rate_low_den : 1);
    in.S_r_high = Rational(t.rate_high_num, t.rate_high_den > 0 ? t.rate_high_den : 1);
    return in;
}

EnergyBreakdown operator+(const EnergyBreakdown& a, const EnergyBreakdown& b) {
    return {a.compute + b.compute, a.read_data + b.read_data,
            a.move_data + b.move_data};
}

EnergyBreakdown le_q(const EnergyInputs& in, const EnergyConstants& c) {
    EnergyBreakdown e;
    e.compute = term({in.B, in.S, in.H_in, in.H_out}) * c.mac(in.b_w, in.b_a_low);
    e.read_data = term({in.B, in.S, in.H_in, in.H_out, in.b_w}) * c.read_per_bit;
    e.move_data = term({in.B, in.S, in.H_in, in.H_out, in.b_a_low}) * c.move_per_bit;
    return e;
}

EnergyBreakdown ae_q(const EnergyInputs& in, const EnergyConstants& c) {
    EnergyBreakdown e;
    e.compute = term({in.B, in.S, in.S, in.H_out}) * c.mac(in.b_w, in.b_a_low);
    e.move_data =
        term({2, in.B, in.S, in.H_out, in.H_out, in.b_a_low}) * c.move_per_bit;
    return e;
}

EnergyBreakdown le_mq_high(const EnergyInputs& in, const EnergyConstants& c) {
    EnergyBreakdown e;
    e.compute =
        term({in.B, in.S, in.H_out, in.gamma}) * c.mac(in.b_w, in.b_a_high);
    e.read_data =
        term({in.B, in.S, in.gamma, in.H_out, in.b_w}) * c.read_per_bit;
    e.move_data =
        term({in.B, in.S, in.gamma, in.H_out, in.b_a_high}) * c.move_per_bit;
    return e;
}

EnergyBreakdown le_q_low(const EnergyInputs& in, const EnergyConstants& c) {
    EnergyBreakdown e;
    const std::int64_t rest = in.H_in - in.gamma;
    e.compute = term({in.B, in.S, in.H_out, rest}) * c.mac(in.b_w, in.b_a_low);
    e.read_data = term({in.B, in.S, rest, in.H_out, in.b_w}) * c.read_per_bit;
    e.move_data = term({in.B, in.S, rest, in.H_out, in.b_a_low}) * c.move_per_bit;
    return e;
}

EnergyBreakdown le_mq(const EnergyInputs& in, const EnergyConstants& c) {
    return le_mq_high(in, c) + le_q_low(in, c);
}

EnergyBreakdown ae_mq_high(const EnergyInputs& in, const EnergyConstants& c) {
    EnergyBreakdown e;
    e.compute = term({in.B, in.S, in.S, in.gamma}) * c.mac(in.b_w, in.b_a_high);
    e.move_data =
        term({2, in.B, in.S, in.gamma, in.H_out, in.b_a_high}) * c.move_per_bit;
    return e;
}

EnergyBreakdown ae_mq_low(const EnergyInputs& in, const EnergyConstants& c) {
    EnergyBreakdown e;
    const std::int64_t rest = in.H_out - in.gamma;
    e.compute = term({in.B, in.S, in.S, rest}) * c.mac(in.b_w, in.b_a_low);
    e.move_data =
        term({2, in.B, in.S, rest, in.H_out, in.b_a_low}) * c.move_per_bit;
    return e;
}

EnergyBreakdown ae_mq(const EnergyInputs& in, const EnergyConstants& c) {
    return ae_mq_high(in, c) + ae_mq_low(in, c);
}

EnergyBreakdown le_s_high(const EnergyInputs& in, const EnergyConstants& c) {
    EnergyBreakdown e;
    const double spike_cost = c.acc(in.b_a_high) + c.mac(in.b_w, in.b_a_high);
    e.compute = term({in.B, in.S, in.H_out, in.gamma, in.T_high}, {in.S_r_high}) *
                spike_cost;
    e.read_data =
        term({in.B, in.S, in.gamma, in.H_out, in.T_high, in.b_w}, {in.S_r_high}) *
        c.read_per_bit;
    // spikes are single bits; the move term carries no bit-width factor
    e.move_data = term({in.B, in.S, in.gamma, in.H_out, in.T_high}, {in.S_r_high}) *
                  c.move_per_bit;
    return e;
}

EnergyBreakdown le_s_low(const EnergyInputs& in, const EnergyConstants& c) {
    EnergyBreakdown e;
    const std::int64_t rest = in.H_in - in.gamma;
    const double spike_cost = c.acc(in.b_a_low) + c.mac(in.b_w, in.b_a_low);
    e.compute =
        term({in.B, in.S, in.H_out, rest, in.T_low}, {in.S_r_low}) * spike_cost;
    e.read_data =
        term({in.B, in.S, rest, in.H_out, in.T_low, in.b_w}, {in.S_r_low}) *
        c.read_per_bit;
    e.move_data =
        term({in.B, in.S, rest, in.H_out, in.T_low}, {in.S_r_low}) * c.move_per_bit;
    return e;
}

EnergyBreakdown le_s(const EnergyInputs& in, const EnergyConstants& c) {
    return le_s_high(in, c) + le_s_low(in, c);
}

EnergyBreakdown le_kirin(const EnergyInputs& in, const EnergyConstants& c) {
    // integer part: the mixed-precision high formula with beta standing in
    // for gamma; spike part: the low spike formula with beta removed from
    // the spiking population.
    EnergyBreakdown e;
    const Rational rest = minus(in.H_in, in.beta);
    const double spike_cost = c.acc(in.b_a_low) + c.mac(in.b_w, in.b_a_low);

    EnergyBreakdown ints;
    ints.compute =
        term({in.B, in.S, in.H_out}, {in.beta}) * c.mac(in.b_w, in.b_a_high);
    ints.read_data =
        term({in.B, in.S, in.H_out, in.b_w}, {in.beta}) * c.read_per_bit;
    ints.move_data =
        term({in.B, in.S, in.H_out, in.b_a_high}, {in.beta}) * c.move_per_bit;

    EnergyBreakdown spikes;
    spikes.compute =
        term({in.B, in.S, in.H_out, in.T_low}, {rest, in.S_r_low}) * spike_cost;
    spikes.read_data =
        term({in.B, in.S, in.H_out, in.T_low, in.b_w}, {rest, in.S_r_low}) *
        c.read_per_bit;
    spikes.move_data =
        term({in.B, in.S, in.H_out, in.T_low}, {rest, in.S_r_low}) * c.move_per_bit;

    e.compute = ints.compute + spikes.compute;
    e.read_data = ints.read_data + spikes.read_data;
    e.move_data = ints.move_data + spikes.move_data;
    return e;
}

EnergyBreakdown ae_kirin(const EnergyInputs& in, const EnergyConstants& c) {
    EnergyBreakdown e;
    const Rational rest = minus(in.H_out, in.beta);
    const double spike_cost = c.acc(in.b_a_low) + c.mac(in.b_w, in.b_a_low);

    const double int_compute =
        term({in.B, in.S, in.S}, {in.beta}) * c.mac(in.b_w, in.b_a_high);
    const double int_move =
        term({2, in.B, in.S, in.H_out, in.b_a_high}, {in.beta}) * c.move_per_bit;
    const double spk_compute =
        term({in.B, in.S, in.S, in.T_low}, {rest, in.S_r_low}) * spike_cost;
    const double spk_move =
        term({2, in.B, in.S, in.H_out, in.T_low}, {rest, in.S_r_low}) *
        c.move_per_bit;

    e.compute = int_compute + spk_compute;
    e.move_data = int_move + spk_move;
    return e;
}

EnergyBreakdown counting_oracle(const ExecutionTrace& t, const EnergyConstants& c) {
    const double mac_low = c.mac(t.b_w, t.b_a_low);
    const double mac_high = c.mac(t.b_w, t.b_a_high);
    const double acc_low = c.acc(t.b_a_low);
    const double acc_high = c.acc(t.b_a_high);

    const double spikes_low = static_cast<double>(t.spikes - t.spikes_high);
    const double spikes_high = static_cast<double>(t.spikes_high);

    EnergyBreakdown e;
    e.compute = spikes_low * (acc_low + mac_low) +
                spikes_high * (acc_high + mac_high) +
                static_cast<double>(t.mac_ops_high) * mac_high +
                static_cast<double>(t.mac_ops_low) * mac_low +
                static_cast<double>(t.correction_accs) * acc_low;
    // low/high traffic priced separately so the sum mirrors the two-part
    // closed forms term for term
    const double read_low = static_cast<double>(t.bits_read - t.bits_read_high);
    const double move_low = static_cast<double>(t.bits_moved - t.bits_moved_high);
    e.read_data = read_low * c.read_per_bit +
                  static_cast<double>(t.bits_read_high) * c.read_per_bit;
    e.move_data = move_low * c.move_per_bit +
                  static_cast<double>(t.bits_moved_high) * c.move_per_bit;
    return e;
}

MethodComparison method_comparison(const EnergyInputs& in, const EnergyConstants& c) {
    MethodComparison cmp;
    cmp.joules_per_unit = c.joules_per_unit;

    struct Formulas {
        EnergyBreakdown (*linear)(const EnergyInputs&, const EnergyConstants&);
        EnergyBreakdown (*attention)(const EnergyInputs&, const EnergyConstants&);
    };
    const std::map<std::string, Formulas> methods = {
        {"quant", {le_q, ae_q}},
        {"mixed_quant", {le_mq, ae_mq}},
        {"snn_baseline", {le_s, ae_mq}}, // baselines keep attention in integers
        {"kirin", {le_kirin, ae_kirin}},
    };

    for (const auto& [name, f] : methods) {
        MethodComparison::Entry entry;
        const EnergyBreakdown lin = f.linear(in, c);
        const EnergyBreakdown att = f.attention(in, c);
        for (const char* comp : {"q_proj", "k_proj", "v_proj", "o_proj"})
            entry.per_component[comp] = lin;
        entry.per_component["qk_attention"] = att;
        entry.per_component["pv_attention"] = att;
        entry.block = lin + lin + lin + lin + att + att;
        cmp.methods[name] = entry;
    }
    const double base = cmp.methods.at("quant").block.total();
    for (auto& [name, entry] : cmp.methods)
        entry.reduction_vs_quant_pct =
            base > 0.0 ? 100.0 * (1.0 - entry.block.total() / base) : 0.0;
    return cmp;
}

} // namespace kirin
