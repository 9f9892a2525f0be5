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
#include "kirin/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kirin/if_engine.hpp"
#include "kirin/rng.hpp"
#include "kirin/spike_codec.hpp"

namespace kirin {

using nlohmann::json;
using nlohmann::ordered_json;

RunMode run_mode_from_string(const std::string& s) {
    if (s == "fp") return RunMode::Fp;
    if (s == "quant") return RunMode::QuantAnn;
    if (s == "snn") return RunMode::SnnBaseline;
    if (s == "kirin") return RunMode::Kirin;
    throw std::invalid_argument("unknown mode: " + s);
}

std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::Fp: return "fp";
        case RunMode::QuantAnn: return "quant";
        case RunMode::SnnBaseline: return "snn";
        case RunMode::Kirin: return "kirin";
    }
    return "?";
}

std::string BlockConfig::to_json() const {
    ordered_json j;
    j["B"] = B;
    j["S"] = S;
    j["H"] = H;
    j["mlp_hidden"] = mlp_hidden;
    j["b_n"] = b_n;
    j["b_o"] = b_o;
    j["mode"] = mode == QuantMode::Symmetric ? "symmetric" : "asymmetric";
    j["mad"] = ordered_json{{"threshold_k", mad.threshold_k},
                            {"consistency_constant", mad.consistency_constant},
                            {"statistic", mad.statistic == ChannelStat::MeanAbs
                                              ? "mean_abs"
                                              : mad.statistic == ChannelStat::MaxAbs
                                                    ? "max_abs"
                                                    : "rms"}};
    j["seed"] = seed;
    j["weight_distribution"] = weight_distribution == WeightDist::Gaussian
                                   ? "gaussian"
                                   : "gaussian_plus_outlier_channels";
    j["inject_gamma"] = inject_gamma;
    j["outlier_scale"] = outlier_scale;
    j["emission_window"] = emission_window;
    return j.dump(2);
}

BlockConfig BlockConfig::from_json(const std::string& text) {
    const json j = json::parse(text);
    BlockConfig c;
    auto geti = [&](const char* k, std::int64_t& v) {
        if (j.contains(k)) v = j.at(k).get<std::int64_t>();
    };
    geti("B", c.B);
    geti("S", c.S);
    geti("H", c.H);
    geti("mlp_hidden", c.mlp_hidden);
    if (j.contains("b_n")) c.b_n = j.at("b_n").get<int>();
    if (j.contains("b_o")) c.b_o = j.at("b_o").get<int>();
    if (j.contains("mode"))
        c.mode = j.at("mode").get<std::string>() == "asymmetric"
                     ? QuantMode::Asymmetric
                     : QuantMode::Symmetric;
    if (j.contains("mad")) {
        const auto& m = j.at("mad");
        if (m.contains("threshold_k"))
            c.mad.threshold_k = m.at("threshold_k").get<double>();
        if (m.contains("consistency_constant"))
            c.mad.consistency_constant = m.at("consistency_constant").get<double>();
        if (m.contains("statistic")) {
            const auto s = m.at("statistic").get<std::string>();
            c.mad.statistic = s == "max_abs" ? ChannelStat::MaxAbs
                              : s == "rms"   ? ChannelStat::Rms
                                             : ChannelStat::MeanAbs;
        }
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("weight_distribution"))
        c.weight_distribution =
            j.at("weight_distribution").get<std::string>() == "gaussian"
                ? WeightDist::Gaussian
                : WeightDist::GaussianPlusOutliers;
    geti("inject_gamma", c.inject_gamma);
    if (j.contains("outlier_scale"))
        c.outlier_scale = j.at("outlier_scale").get<double>();
    geti("emission_window", c.emission_window);
    if (c.S <= 0 || c.H <= 0) throw std::invalid_argument("invalid dims");
    return c;
}

BlockConfig BlockConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

namespace {

Matrix gaussian_matrix(Rng& rng, std::int64_t rows, std::int64_t cols, double sd) {
    Matrix m(rows, cols);
    for (auto& v : m.data) v = sd * rng.gaussian();
    return m;
}

/// Scale a few channels up so they behave like genuine distribution
/// outliers. Channels are picked without replacement.
void inject_outlier_channels(Rng& rng, Matrix& m, Axis axis, std::int64_t count,
                             double factor) {
    const std::int64_t nch = axis == Axis::Row ? m.rows : m.cols;
    count = std::min(count, nch);
    std::vector<std::int64_t> idx(static_cast<std::size_t>(nch));
    for (std::int64_t i = 0; i < nch; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (std::int64_t i = nch - 1; i > 0; --i)
        std::swap(idx[static_cast<std::size_t>(i)],
                  idx[static_cast<std::size_t>(rng.uniform_int(0, i))]);
    for (std::int64_t n = 0; n < count; ++n) {
        const std::int64_t ch = idx[static_cast<std::size_t>(n)];
        const std::int64_t len = axis == Axis::Row ? m.cols : m.rows;
        for (std::int64_t i = 0; i < len; ++i) {
            if (axis == Axis::Row)
                m.at(ch, i) *= factor;
            else
                m.at(i, ch) *= factor;
        }
    }
}

std::vector<double> gaussian_vector(Rng& rng, std::int64_t n, double sd) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = sd * rng.gaussian();
    return v;
}

Matrix layernorm(const Matrix& x) {
    Matrix out(x.rows, x.cols);
    for (std::int64_t r = 0; r < x.rows; ++r) {
        double mean = 0.0;
        for (std::int64_t c = 0; c < x.cols; ++c) mean += x.at(r, c);
        mean /= static_cast<double>(x.cols);
        double var = 0.0;
        for (std::int64_t c = 0; c < x.cols; ++c) {
            const double d = x.at(r, c) - mean;
            var += d * d;
        }
        var /= static_cast<double>(x.cols);
        const double inv = 1.0 / std::sqrt(var + 1e-5);
        for (std::int64_t c = 0; c < x.cols; ++c)
            out.at(r, c) = (x.at(r, c) - mean) * inv;
    }
    return out;
}

Matrix softmax_rows(const Matrix& x) {
    Matrix out(x.rows, x.cols);
    for (std::int64_t r = 0; r < x.rows; ++r) {
        double mx = x.at(r, 0);
        for (std::int64_t c = 1; c < x.cols; ++c) mx = std::max(mx, x.at(r, c));
        double sum = 0.0;
        for (std::int64_t c = 0; c < x.cols; ++c) {
            const double e = std::exp(x.at(r, c) - mx);
            out.at(r, c) = e;
            sum += e;
        }
        for (std::int64_t c = 0; c < x.cols; ++c) out.at(r, c) /= sum;
    }
    return out;
}

Matrix relu(const Matrix& x) {
    Matrix out = x;
    for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    Matrix out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

Matrix scale_all(const Matrix& a, double s) {
    Matrix out = a;
    for (auto& v : out.data) v *= s;
    return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double mx = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        mx = std::max(mx, std::fabs(a.data[i] - b.data[i]));
    return mx;
}

/// Execution of one converted matmul in any mode. A and Bw are the mode's
/// current real-valued operands; quantization is dynamic (fresh scales from
/// the tensors at hand).
struct MatmulExecutor {
    const BlockConfig& cfg;
    RunMode mode;

    LayerRecord run(const std::string& name, const Matrix& a, const Matrix& bw,
                    std::span<const double> bias, MatmulKind kind) const {
        LayerRecord rec;
        rec.name = name;
        rec.kind = kind;

        if (mode == RunMode::Fp) {
            rec.output = matmul(a, bw);
            if (!bias.empty())
                for (std::int64_t r = 0; r < rec.output.rows; ++r)
                    for (std::int64_t c = 0; c < rec.output.cols; ++c)
                        rec.output.at(r, c) += bias[static_cast<std::size_t>(c)];
            return rec;
        }

        const QuantTensor qa =
            quantize(a, Axis::Column, cfg.b_n, cfg.b_o, cfg.mode, cfg.mad);
        const QuantTensor qb =
            quantize(bw, Axis::Row, cfg.b_n, cfg.b_o, cfg.mode, cfg.mad);

        // all-method cost view of this layer, independent of the mode run
        rec.tr_quant = trace_quant_matmul(qa, qb, kind);
        rec.tr_mixed = trace_mixed_quant_matmul(qa, qb, kind);
        rec.tr_snn = trace_snn_baseline_matmul(qa, qb, cfg.t_n(), cfg.t_o(), kind);
        {
            ThresholdSpec spec = ThresholdSpec::from_scales(
                qa.params_normal.scale, qb.params_normal.scale);
            HybridMatmulOptions opts;
            opts.kind = kind;
            opts.emission_window = cfg.emission_window;
            HybridMatmulResult hyb = hybrid_matmul(qa, qb, bias, spec, cfg.t_n(), opts);
            rec.tr_kirin = hyb.trace;
            if (mode == RunMode::Kirin) {
                rec.output = std::move(hyb.output);
                rec.trace = hyb.trace;
                rec.selection = hyb.selection;
                rec.window = cfg.t_n();
                rec.max_spike_time = hyb.trace.max_spike_time;
                rec.beta = static_cast<std::int64_t>(hyb.trace.beta_total);
                rec.gamma = hyb.trace.gamma;
                rec.truncations = hyb.trace.truncation_events;
                if (hyb.trace.rate_low_den > 0)
                    rec.mean_rate = static_cast<double>(hyb.trace.rate_low_num) /
                                    static_cast<double>(hyb.trace.rate_low_den);
                const HybridSpikeMatrix hsm = split(
                    hyb.selection.chosen == SelectionReport::Chosen::A ? qa : qb,
                    cfg.t_n());
                std::int64_t fired = 0, total = 0;
                for (const auto& t : hsm.trains) {
                    total += t.neuron_count();
                    for (const auto& nr : t.neurons)
                        if (!nr.times.empty()) ++fired;
                }
                rec.fired_fraction =
                    total > 0 ? static_cast<double>(fired) / static_cast<double>(total)
                              : 0.0;
                return rec;
            }
        }

        if (mode == RunMode::QuantAnn) {
            rec.output = reference_matmul(qa, qb, bias);
            rec.trace = rec.tr_mixed;
            rec.window = 0;
            return rec;
        }

        // Rate-coded baseline: every channel spikes; outlier channels need
        // the full high window, so the layer must be provisioned at t_o.
        // The carried value is the output spike count (the silence residual
        // is exactly what rate emission truncates); attention products stay
        // in the integer domain like the rate baselines we model.
        rec.trace = rec.tr_snn;
        rec.window = kind == MatmulKind::Linear ? cfg.t_o() : 0;
        rec.max_spike_time = rec.tr_snn.max_spike_time;
        if (rec.tr_snn.rate_low_den + rec.tr_snn.rate_high_den > 0)
            rec.mean_rate =
                static_cast<double>(rec.tr_snn.rate_low_num + rec.tr_snn.rate_high_num) /
                static_cast<double>(rec.tr_snn.rate_low_den + rec.tr_snn.rate_high_den);
        rec.gamma = rec.tr_snn.gamma;

        const Matrix exact = reference_matmul(qa, qb, bias);
        if (kind == MatmulKind::Attention) {
            rec.output = exact;
            return rec;
        }
        rec.output = Matrix(exact.rows, exact.cols);
        for (std::int64_t r = 0; r < exact.rows; ++r) {
            for (std::int64_t c = 0; c < exact.cols; ++c) {
                const double b = bias.empty() ? 0.0 : bias[static_cast<std::size_t>(c)];
                const double pre = exact.at(r, c) - b;
                // pre == scale_product * V_total, so its integer part is the
                // output spike count; the sub-threshold residual never leaves
                // a rate neuron
                rec.output.at(r, c) = std::floor(pre) + b;
            }
        }
        return rec;
    }
};

} // namespace

ToyBlock build_block(const BlockConfig& cfg) {
    if (cfg.S <= 0 || cfg.H <= 0) throw std::invalid_argument("invalid dims");
    ToyBlock blk;
    blk.cfg = cfg;
    const std::int64_t h = cfg.H;
    const std::int64_t m = cfg.mlp_hidden > 0 ? cfg.mlp_hidden : 4 * h;

    Rng rng(cfg.seed);
    const double w_sd = 1.0 / std::sqrt(static_cast<double>(h));

    blk.x = gaussian_matrix(rng, cfg.S, h, 1.0);
    blk.w_q = gaussian_matrix(rng, h, h, w_sd);
    blk.w_k = gaussian_matrix(rng, h, h, w_sd);
    blk.w_v = gaussian_matrix(rng, h, h, w_sd);
    blk.w_o = gaussian_matrix(rng, h, h, w_sd);
    blk.w_fc1 = gaussian_matrix(rng, h, m, w_sd);
    blk.w_fc2 = gaussian_matrix(rng, m, h, 1.0 / std::sqrt(static_cast<double>(m)));

    if (cfg.weight_distribution == WeightDist::GaussianPlusOutliers &&
        cfg.inject_gamma > 0) {
        inject_outlier_channels(rng, blk.x, Axis::Column, cfg.inject_gamma,
                                cfg.outlier_scale);
        for (Matrix* w : {&blk.w_q, &blk.w_k, &blk.w_v, &blk.w_o, &blk.w_fc1})
            inject_outlier_channels(rng, *w, Axis::Row, cfg.inject_gamma,
                                    cfg.outlier_scale);
        inject_outlier_channels(rng, blk.w_fc2, Axis::Row, cfg.inject_gamma,
                                cfg.outlier_scale);
    }

    blk.b_q = gaussian_vector(rng, h, 0.1);
    blk.b_k = gaussian_vector(rng, h, 0.1);
    blk.b_v = gaussian_vector(rng, h, 0.1);
    blk.b_o = gaussian_vector(rng, h, 0.1);
    blk.b_fc1 = gaussian_vector(rng, m, 0.1);
    blk.b_fc2 = gaussian_vector(rng, h, 0.1);
    return blk;
}

BlockRun run_block(const ToyBlock& block, RunMode mode) {
    const BlockConfig& cfg = block.cfg;
    MatmulExecutor exec{cfg, mode};
    BlockRun run;
    run.mode = mode;

    const Matrix x1 = layernorm(block.x);
    LayerRecord q = exec.run("q_proj", x1, block.w_q, block.b_q, MatmulKind::Linear);
    LayerRecord k = exec.run("k_proj", x1, block.w_k, block.b_k, MatmulKind::Linear);
    LayerRecord v = exec.run("v_proj", x1, block.w_v, block.b_v, MatmulKind::Linear);

    LayerRecord qk = exec.run("qk_attention", q.output, transpose(k.output), {},
                              MatmulKind::Attention);
    const Matrix probs = softmax_rows(
        scale_all(qk.output, 1.0 / std::sqrt(static_cast<double>(cfg.H))));
    LayerRecord pv = exec.run("pv_attention", probs, v.output, {},
                              MatmulKind::Attention);
    LayerRecord o = exec.run("o_proj", pv.output, block.w_o, block.b_o,
                             MatmulKind::Linear);

    const Matrix x2 = add(block.x, o.output);
    const Matrix x3 = layernorm(x2);
    LayerRecord f1 =
        exec.run("mlp_fc1", x3, block.w_fc1, block.b_fc1, MatmulKind::Linear);
    LayerRecord f2 = exec.run("mlp_fc2", relu(f1.output), block.w_fc2, block.b_fc2,
                              MatmulKind::Linear);
    run.final_output = add(x2, f2.output);

    run.layers.push_back(std::move(q));
    run.layers.push_back(std::move(k));
    run.layers.push_back(std::move(v));
    run.layers.push_back(std::move(qk));
    run.layers.push_back(std::move(pv));
    run.layers.push_back(std::move(o));
    run.layers.push_back(std::move(f1));
    run.layers.push_back(std::move(f2));
    return run;
}

RunReport compare_block(const ToyBlock& block) {
    RunReport rep;
    rep.cfg = block.cfg;

    const BlockRun fp = run_block(block, RunMode::Fp);
    const BlockRun quant = run_block(block, RunMode::QuantAnn);
    const BlockRun snn = run_block(block, RunMode::SnnBaseline);
    const BlockRun kirin = run_block(block, RunMode::Kirin);

    rep.window_snn = block.cfg.t_o();
    std::map<std::string, ExecutionTrace> method_traces;
    for (std::size_t i = 0; i < kirin.layers.size(); ++i) {
        const LayerRecord& kl = kirin.layers[i];
        LayerReport lr;
        lr.name = kl.name;
        lr.dev_kirin_vs_quant = max_abs_diff(kl.output, quant.layers[i].output);
        lr.dev_quant_vs_fp =
            max_abs_diff(quant.layers[i].output, fp.layers[i].output);
        lr.window_kirin = block.cfg.t_n();
        lr.window_snn = snn.layers[i].window;
        lr.max_spike_kirin = kl.max_spike_time;
        lr.max_spike_snn = snn.layers[i].max_spike_time;
        lr.mean_rate = kl.mean_rate;
        lr.fired_fraction = kl.fired_fraction;
        lr.beta = kl.beta;
        lr.gamma = kl.gamma;
        lr.truncations = kl.truncations;
        rep.max_dev_kirin_vs_quant =
            std::max(rep.max_dev_kirin_vs_quant, lr.dev_kirin_vs_quant);
        rep.max_dev_quant_vs_fp =
            std::max(rep.max_dev_quant_vs_fp, lr.dev_quant_vs_fp);
        rep.max_spike_time_kirin =
            std::max(rep.max_spike_time_kirin, kl.max_spike_time);
        rep.truncations += kl.truncations;
        rep.layers.push_back(std::move(lr));

        const EnergyConstants c;
        for (const auto& [method, tr] :
             {std::pair<const char*, const ExecutionTrace*>{"quant", &kl.tr_quant},
              {"mixed_quant", &kl.tr_mixed},
              {"snn_baseline", &kl.tr_snn},
              {"kirin", &kl.tr_kirin}}) {
            rep.energy_components[method][kl.name] = counting_oracle(*tr, c);
            method_traces[method].merge(*tr);
        }
    }
    const EnergyConstants c;
    for (const auto& [method, tr] : method_traces)
        rep.energy_totals[method] = counting_oracle(tr, c);

    // invariants
    if (block.cfg.emission_window == 0 && rep.max_dev_kirin_vs_quant != 0.0)
        rep.violations.push_back("hybrid output deviates from quantized reference");
    if (rep.max_spike_time_kirin > block.cfg.t_n() - 1)
        rep.violations.push_back("spike time exceeded the low window");
    return rep;
}

namespace {

std::string breakdown_csv_row(const std::string& method, const std::string& comp,
                              const EnergyBreakdown& e) {
    std::ostringstream os;
    os << std::setprecision(17) << method << "," << comp << "," << e.compute << ","
       << e.read_data << "," << e.move_data << "," << e.total() << "\n";
    return os.str();
}

} // namespace

std::string RunReport::to_json() const {
    ordered_json j;
    j["config"] = json::parse(cfg.to_json());
    j["max_dev_kirin_vs_quant"] = max_dev_kirin_vs_quant;
    j["max_dev_quant_vs_fp"] = max_dev_quant_vs_fp;
    j["max_spike_time_kirin"] = max_spike_time_kirin;
    j["window_snn"] = window_snn;
    j["truncations"] = truncations;
    ordered_json layers_j = ordered_json::array();
    for (const auto& l : layers) {
        layers_j.push_back(ordered_json{
            {"name", l.name},
            {"dev_kirin_vs_quant", l.dev_kirin_vs_quant},
            {"dev_quant_vs_fp", l.dev_quant_vs_fp},
            {"window_kirin", l.window_kirin},
            {"window_snn", l.window_snn},
            {"max_spike_kirin", l.max_spike_kirin},
            {"max_spike_snn", l.max_spike_snn},
            {"mean_rate", l.mean_rate},
            {"fired_fraction", l.fired_fraction},
            {"beta", l.beta},
            {"gamma", l.gamma},
            {"truncations", l.truncations}});
    }
    j["layers"] = std::move(layers_j);
    ordered_json energy;
    for (const auto& [method, e] : energy_totals)
        energy[method] = ordered_json{{"compute", e.compute},
                                      {"read", e.read_data},
                                      {"move", e.move_data},
                                      {"total", e.total()}};
    j["energy_totals"] = std::move(energy);
    j["violations"] = violations;
    return j.dump(2);
}

std::string RunReport::energy_csv() const {
    std::string out = "method,component,compute,read,move,total\n";
    for (const auto& [method, comps] : energy_components)
        for (const auto& [comp, e] : comps) out += breakdown_csv_row(method, comp, e);
    for (const auto& [method, e] : energy_totals)
        out += breakdown_csv_row(method, "total", e);
    return out;
}

std::string RunReport::layers_csv() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "layer,dev_kirin_vs_quant,dev_quant_vs_fp,window_kirin,window_snn,"
          "max_spike_kirin,max_spike_snn,mean_rate,fired_fraction,beta,gamma,"
          "truncations\n";
    for (const auto& l : layers) {
        os << l.name << "," << l.dev_kirin_vs_quant << "," << l.dev_quant_vs_fp
           << "," << l.window_kirin << "," << l.window_snn << ","
           << l.max_spike_kirin << "," << l.max_spike_snn << "," << l.mean_rate
           << "," << l.fired_fraction << "," << l.beta << "," << l.gamma << ","
           << l.truncations << "\n";
    }
    return os.str();
}

OutlierStats outlier_injection_stats(std::int64_t rows, std::int64_t channels,
                                     std::int64_t inject_gamma,
                                     double outlier_scale, int b_n, int b_o,
                                     std::uint64_t seed, const MadConfig& mad) {
    Rng rng(seed);
    Matrix x = gaussian_matrix(rng, rows, channels, 1.0);

    // pick injected channels deterministically off the same stream
    std::vector<std::int64_t> idx(static_cast<std::size_t>(channels));
    for (std::int64_t i = 0; i < channels; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (std::int64_t i = channels - 1; i > 0; --i)
        std::swap(idx[static_cast<std::size_t>(i)],
                  idx[static_cast<std::size_t>(rng.uniform_int(0, i))]);
    std::set<std::int64_t> injected(idx.begin(),
                                    idx.begin() + static_cast<std::ptrdiff_t>(
                                                      std::min(inject_gamma, channels)));
    for (std::int64_t ch : injected)
        for (std::int64_t r = 0; r < rows; ++r) x.at(r, ch) *= outlier_scale;

    OutlierStats st;
    st.injected_gamma = static_cast<std::int64_t>(injected.size());
    const auto detected = detect_outlier_channels(x, Axis::Column, mad);
    st.detected_gamma = static_cast<std::int64_t>(detected.size());
    for (std::int32_t ch : detected)
        if (injected.count(ch)) ++st.matched;

    const QuantTensor q =
        quantize(x, Axis::Column, b_n, b_o, QuantMode::Symmetric, mad);
    st.beta = count_retained(q, std::int64_t(1) << b_n);
    st.beta_ratio = static_cast<double>(st.beta) / static_cast<double>(x.size());
    return st;
}

} // namespace kirin
