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
#ifndef KIRIN_PIPELINE_HPP
#define KIRIN_PIPELINE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "kirin/energy_model.hpp"
#include "kirin/hybrid_matmul.hpp"
#include "kirin/quantizer.hpp"

namespace kirin {

enum class RunMode { Fp, QuantAnn, SnnBaseline, Kirin };

RunMode run_mode_from_string(const std::string& s);
std::string to_string(RunMode m);

enum class WeightDist { Gaussian, GaussianPlusOutliers };

/// Configuration of the toy single-head block: Q/K/V/O projections, the two
/// attention products, and a two-layer MLP. Softmax, layer norm, residuals
/// and the MLP nonlinearity always run in real arithmetic; only matrix
/// multiplications are converted between execution styles.
struct BlockConfig {
    std::int64_t B = 1; // kept for report parity; the block runs one batch
    std::int64_t S = 8;
    std::int64_t H = 32;
    std::int64_t mlp_hidden = 0; // 0 -> 4*H
    int b_n = 4;
    int b_o = 8;
    QuantMode mode = QuantMode::Symmetric;
    MadConfig mad;
    std::uint64_t seed = 1;
    WeightDist weight_distribution = WeightDist::GaussianPlusOutliers;
    std::int64_t inject_gamma = 2;  // outlier channels injected per tensor
    double outlier_scale = 20.0;
    std::int64_t emission_window = 0; // 0 = exact-algebra mode

    std::int64_t t_n() const { return std::int64_t(1) << b_n; }
    std::int64_t t_o() const { return std::int64_t(1) << b_o; }

    std::string to_json() const;
    static BlockConfig from_json(const std::string& text);
    static BlockConfig load_file(const std::string& path);
};

struct ToyBlock {
    BlockConfig cfg;
    Matrix x; // input activations [S, H]
    Matrix w_q, w_k, w_v, w_o;
    Matrix w_fc1, w_fc2;
    std::vector<double> b_q, b_k, b_v, b_o;
    std::vector<double> b_fc1, b_fc2;
};

ToyBlock build_block(const BlockConfig& cfg);

/// One converted matmul inside a run.
struct LayerRecord {
    std::string name;
    MatmulKind kind = MatmulKind::Linear;
    Matrix output;              // the mode's real-valued result
    ExecutionTrace trace;       // the mode's own execution counts
    // What every execution style would cost on this layer's tensors; feeds
    // the per-method energy report.
    ExecutionTrace tr_quant, tr_mixed, tr_snn, tr_kirin;
    SelectionReport selection;  // hybrid runs only
    std::int64_t window = 0;    // provisioned time window of this mode
    std::int64_t max_spike_time = -1;
    double mean_rate = 0.0;
    double fired_fraction = 0.0;
    std::int64_t beta = 0;
    std::int64_t gamma = 0;
    std::uint64_t truncations = 0;
};

struct BlockRun {
    RunMode mode = RunMode::Fp;
    std::vector<LayerRecord> layers;
    Matrix final_output;
};

BlockRun run_block(const ToyBlock& block, RunMode mode);

struct LayerReport {
    std::string name;
    double dev_kirin_vs_quant = 0.0;
    double dev_quant_vs_fp = 0.0;
    std::int64_t window_kirin = 0;
    std::int64_t window_snn = 0;
    std::int64_t max_spike_kirin = -1;
    std::int64_t max_spike_snn = -1;
    double mean_rate = 0.0;
    double fired_fraction = 0.0;
    std::int64_t beta = 0;
    std::int64_t gamma = 0;
    std::uint64_t truncations = 0;
};

struct RunReport {
    BlockConfig cfg;
    std::vector<LayerReport> layers;
    double max_dev_kirin_vs_quant = 0.0;
    double max_dev_quant_vs_fp = 0.0;
    std::int64_t max_spike_time_kirin = -1;
    std::int64_t window_snn = 0;
    std::uint64_t truncations = 0;
    /// Per-method energy from measured traces, plus per-layer component rows.
    std::map<std::string, EnergyBreakdown> energy_totals;
    std::map<std::string, std::map<std::string, EnergyBreakdown>> energy_components;
    std::vector<std::string> violations; // empty iff all invariants held

    bool invariants_ok() const { return violations.empty(); }
    std::string to_json() const;
    std::string energy_csv() const;
    std::string layers_csv() const;
};

/// Runs fp, quantized-ANN, rate baseline and hybrid executions of one block
/// and cross-checks them: hybrid output must match the quantized-ANN oracle
/// exactly in exact-algebra mode, and its spike times must stay inside the
/// low window.
RunReport compare_block(const ToyBlock& block);

/// Detection / hybridization statistics on a synthetic heavy-tailed tensor,
/// used by the large-shape profile where no reference run is feasible.
struct OutlierStats {
    std::int64_t injected_gamma = 0;
    std::int64_t detected_gamma = 0;
    std::int64_t matched = 0; // injected channels recovered
    std::int64_t beta = 0;
    double beta_ratio = 0.0;
};

OutlierStats outlier_injection_stats(std::int64_t rows, std::int64_t channels,
                                     std::int64_t inject_gamma,
                                     double outlier_scale, int b_n, int b_o,
                                     std::uint64_t seed,
                                     const MadConfig& mad = {});

} // namespace kirin

#endif
