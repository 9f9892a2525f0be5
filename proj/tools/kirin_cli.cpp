// Command-line front end: build toy blocks, run or compare execution modes,
// evaluate the analytical energy model, inspect constants.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "kirin/energy_model.hpp"
#include "kirin/io.hpp"
#include "kirin/pipeline.hpp"

using namespace kirin;
namespace fs = std::filesystem;

namespace {

fs::path output_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("KIRIN_OUT_DIR")) return env;
    return "kirin-out";
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

BlockConfig load_config(const std::string& path) {
    return path.empty() ? BlockConfig{} : BlockConfig::load_file(path);
}

struct ShapePreset {
    std::int64_t H;
    std::int64_t gamma;
    std::int64_t beta;
};

const std::map<std::string, ShapePreset> kShapes = {
    {"opt-1.3b", {2048, 50, 40}},
    {"opt-2.7b", {2560, 55, 41}},
    {"llama2-7b", {4096, 110, 87}},
    {"llama2-13b", {5120, 118, 99}},
};

std::string comparison_csv(const MethodComparison& cmp) {
    std::ostringstream os;
    os.precision(17);
    os << "method,component,compute,read,move,total\n";
    for (const auto& [method, entry] : cmp.methods) {
        for (const auto& [comp, e] : entry.per_component)
            os << method << "," << comp << "," << e.compute << "," << e.read_data
               << "," << e.move_data << "," << e.total() << "\n";
        os << method << ",block," << entry.block.compute << ","
           << entry.block.read_data << "," << entry.block.move_data << ","
           << entry.block.total() << "\n";
    }
    return os.str();
}

std::string comparison_json(const MethodComparison& cmp) {
    nlohmann::ordered_json j;
    for (const auto& [method, entry] : cmp.methods) {
        nlohmann::ordered_json mj;
        for (const auto& [comp, e] : entry.per_component)
            mj["components"][comp] = {{"compute", e.compute},
                                      {"read", e.read_data},
                                      {"move", e.move_data},
                                      {"total", e.total()}};
        mj["block_total"] = entry.block.total();
        mj["reduction_vs_quant_pct"] = entry.reduction_vs_quant_pct;
        if (cmp.joules_per_unit > 0.0)
            mj["block_total_uJ"] = entry.block.total() * cmp.joules_per_unit * 1e6;
        j[method] = std::move(mj);
    }
    return j.dump(2);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid spike/integer matmul simulator and energy model"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_flag;
    std::string constants_path;

    // build -----------------------------------------------------------
    auto* build = app.add_subcommand("build", "emit a toy block to files");
    build->add_option("--config", config_path, "block config json");
    build->add_option("--out", out_flag, "output directory");

    // run -------------------------------------------------------------
    auto* run = app.add_subcommand("run", "run one execution mode");
    std::string mode_str = "kirin";
    bool stats_only = false;
    run->add_option("--mode", mode_str, "fp | quant | snn | kirin")->required();
    run->add_option("--config", config_path, "block config json");
    run->add_option("--out", out_flag, "output directory");
    run->add_flag("--stats-only", stats_only,
                  "outlier/hybridization statistics only; use for large "
                  "shapes where a full reference run is not feasible");

    // compare ---------------------------------------------------------
    auto* compare = app.add_subcommand("compare", "cross-check execution modes");
    std::string modes_str = "kirin,quant";
    compare->add_option("--modes", modes_str, "comma list, e.g. kirin,quant");
    compare->add_option("--config", config_path, "block config json");
    compare->add_option("--out", out_flag, "output directory");

    // energy ----------------------------------------------------------
    auto* energy = app.add_subcommand("energy", "evaluate the analytical model");
    std::string shape = "llama2-7b";
    std::int64_t opt_s = 512, opt_b = 1, opt_h = 0, opt_gamma = -1, opt_beta = -1;
    double calibrate_to = 0.0;
    energy->add_option("--shape", shape,
                       "opt-1.3b | opt-2.7b | llama2-7b | llama2-13b | custom");
    energy->add_option("--seq", opt_s, "sequence length");
    energy->add_option("--batch", opt_b, "batch");
    energy->add_option("--hidden", opt_h, "hidden size (custom shape)");
    energy->add_option("--gamma", opt_gamma, "outlier channels (custom shape)");
    energy->add_option("--beta", opt_beta, "retained integers (custom shape)");
    energy->add_option("--constants", constants_path, "constants json file");
    energy->add_option("--calibrate-to", calibrate_to,
                       "fit uJ per unit so the baseline block hits this");
    int base_bw = 4, base_ba = 4;
    energy->add_option("--base-bw", base_bw, "baseline weight bits for the fit");
    energy->add_option("--base-ba", base_ba, "baseline activation bits for the fit");
    energy->add_option("--out", out_flag, "output directory");

    // constants ---------------------------------------------------------
    auto* constants = app.add_subcommand("constants", "show the cost table");
    constants->add_option("--file", constants_path, "constants json file");

    CLI11_PARSE(app, argc, argv);

    try {
        const fs::path out_dir = output_dir(out_flag);

        if (build->parsed()) {
            fs::create_directories(out_dir);
            const BlockConfig cfg = load_config(config_path);
            const ToyBlock blk = build_block(cfg);
            write_file(out_dir / "block.json", cfg.to_json());
            write_tensor_file(blk.x, (out_dir / "x.txt").string());
            write_tensor_file(blk.w_q, (out_dir / "w_q.txt").string());
            write_tensor_file(blk.w_k, (out_dir / "w_k.txt").string());
            write_tensor_file(blk.w_v, (out_dir / "w_v.txt").string());
            write_tensor_file(blk.w_o, (out_dir / "w_o.txt").string());
            write_tensor_file(blk.w_fc1, (out_dir / "w_fc1.txt").string());
            write_tensor_file(blk.w_fc2, (out_dir / "w_fc2.txt").string());
            std::cout << "block written to " << out_dir << "\n";
            return 0;
        }

        if (run->parsed()) {
            fs::create_directories(out_dir);
            const BlockConfig cfg = load_config(config_path);
            if (stats_only) {
                const OutlierStats st = outlier_injection_stats(
                    cfg.S, cfg.H, cfg.inject_gamma, cfg.outlier_scale, cfg.b_n,
                    cfg.b_o, cfg.seed, cfg.mad);
                nlohmann::ordered_json j;
                j["config"] = nlohmann::json::parse(cfg.to_json());
                j["injected_gamma"] = st.injected_gamma;
                j["detected_gamma"] = st.detected_gamma;
                j["matched"] = st.matched;
                j["beta"] = st.beta;
                j["beta_ratio"] = st.beta_ratio;
                write_file(out_dir / "stats.json", j.dump(2));
                std::cout << "detected " << st.detected_gamma << " channels ("
                          << st.matched << " injected matched), retained ratio "
                          << 100.0 * st.beta_ratio << "%\n"
                          << "stats written to " << (out_dir / "stats.json")
                          << "\n";
                return 0;
            }
            const ToyBlock blk = build_block(cfg);
            const RunMode mode = run_mode_from_string(mode_str);
            const BlockRun br = run_block(blk, mode);

            nlohmann::ordered_json j;
            j["mode"] = to_string(mode);
            j["config"] = nlohmann::json::parse(cfg.to_json());
            for (const auto& l : br.layers) {
                nlohmann::ordered_json lj;
                lj["name"] = l.name;
                lj["window"] = l.window;
                lj["max_spike_time"] = l.max_spike_time;
                lj["beta"] = l.beta;
                lj["gamma"] = l.gamma;
                lj["truncations"] = l.truncations;
                if (mode != RunMode::Fp)
                    lj["trace"] = nlohmann::json::parse(trace_to_json(l.trace));
                j["layers"].push_back(std::move(lj));
            }
            write_file(out_dir / "run.json", j.dump(2));
            write_tensor_file(br.final_output, (out_dir / "output.txt").string());
            std::cout << "run report written to " << (out_dir / "run.json") << "\n";
            return 0;
        }

        if (compare->parsed()) {
            fs::create_directories(out_dir);
            const BlockConfig cfg = load_config(config_path);
            const ToyBlock blk = build_block(cfg);
            const RunReport rep = compare_block(blk);
            write_file(out_dir / "report.json", rep.to_json());
            write_file(out_dir / "energy.csv", rep.energy_csv());
            write_file(out_dir / "layers.csv", rep.layers_csv());

            // pairwise deviation for the requested mode pair
            std::vector<std::string> modes;
            std::stringstream ss(modes_str);
            for (std::string item; std::getline(ss, item, ',');)
                if (!item.empty()) modes.push_back(item);
            if (modes.size() == 2) {
                const BlockRun ra = run_block(blk, run_mode_from_string(modes[0]));
                const BlockRun rb = run_block(blk, run_mode_from_string(modes[1]));
                double dev = 0.0;
                for (std::size_t i = 0; i < ra.layers.size(); ++i)
                    for (std::size_t e = 0; e < ra.layers[i].output.data.size(); ++e)
                        dev = std::max(dev,
                                       std::fabs(ra.layers[i].output.data[e] -
                                                 rb.layers[i].output.data[e]));
                std::cout << "max |" << modes[0] << " - " << modes[1]
                          << "| deviation: " << dev << "\n";
            }

            std::cout << "max |hybrid - quantized| deviation: "
                      << rep.max_dev_kirin_vs_quant << "\n"
                      << "max hybrid spike time: " << rep.max_spike_time_kirin
                      << " (window " << cfg.t_n() << ")\n"
                      << "reports written to " << out_dir << "\n";
            for (const auto& v : rep.violations)
                std::cerr << "invariant violated: " << v << "\n";
            return rep.invariants_ok() ? 0 : 1;
        }

        if (energy->parsed()) {
            fs::create_directories(out_dir);
            EnergyConstants c;
            if (!constants_path.empty())
                c = EnergyConstants::load_file(constants_path);

            EnergyInputs in;
            in.B = opt_b;
            in.S = opt_s;
            if (shape == "custom") {
                if (opt_h <= 0 || opt_gamma < 0 || opt_beta < 0)
                    throw std::runtime_error(
                        "custom shape needs --hidden, --gamma and --beta");
                in.H_in = in.H_out = opt_h;
                in.gamma = opt_gamma;
                in.beta = Rational(opt_beta, 1);
            } else {
                const auto it = kShapes.find(shape);
                if (it == kShapes.end())
                    throw std::runtime_error("unknown shape: " + shape);
                in.H_in = in.H_out = it->second.H;
                in.gamma = it->second.gamma;
                in.beta = Rational(it->second.beta, 1);
            }
            in.S_r_low = Rational(1, in.T_low);
            in.S_r_high = Rational(1, in.T_high);

            if (calibrate_to > 0.0) {
                EnergyInputs base = in;
                base.b_w = base_bw;
                base.b_a_low = base_ba;
                const double base_units =
                    4 * le_q(base, c).total() + 2 * ae_q(base, c).total();
                c.joules_per_unit = calibrate_to * 1e-6 / base_units;
                std::cout << "fitted " << c.joules_per_unit
                          << " J per normalized unit against the W" << base_bw
                          << "A" << base_ba << " baseline\n";
            }

            MethodComparison cmp = method_comparison(in, c);
            write_file(out_dir / "energy_model.csv", comparison_csv(cmp));
            write_file(out_dir / "energy_model.json", comparison_json(cmp));
            for (const auto& [method, entry] : cmp.methods) {
                std::cout << method << ": " << entry.block.total() << " units";
                if (c.joules_per_unit > 0.0)
                    std::cout << " = " << entry.block.total() * c.joules_per_unit * 1e6
                              << " uJ";
                std::cout << " (" << entry.reduction_vs_quant_pct
                          << "% vs quant)\n";
            }
            std::cout << "energy tables written to " << out_dir << "\n";
            return 0;
        }

        if (constants->parsed()) {
            EnergyConstants c;
            if (!constants_path.empty())
                c = EnergyConstants::load_file(constants_path);
            std::cout << c.to_json() << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
