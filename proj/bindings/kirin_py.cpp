// Python bindings for the main operations: quantization, spike codecs, the
// silence-threshold IF, hybrid matmul and the energy model.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kirin/energy_model.hpp"
#include "kirin/hybrid_matmul.hpp"
#include "kirin/if_engine.hpp"
#include "kirin/io.hpp"
#include "kirin/pipeline.hpp"
#include "kirin/quantizer.hpp"

namespace py = pybind11;
using namespace kirin;

namespace {

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return Matrix();
    Matrix m(static_cast<std::int64_t>(rows.size()),
             static_cast<std::int64_t>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size())
            throw std::invalid_argument("ragged matrix");
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m.at(static_cast<std::int64_t>(r), static_cast<std::int64_t>(c)) =
                rows[r][c];
    }
    return m;
}

std::vector<std::vector<double>> from_matrix(const Matrix& m) {
    std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows));
    for (std::int64_t r = 0; r < m.rows; ++r) {
        out[static_cast<std::size_t>(r)].resize(static_cast<std::size_t>(m.cols));
        for (std::int64_t c = 0; c < m.cols; ++c)
            out[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
                m.at(r, c);
    }
    return out;
}

std::vector<std::vector<std::int32_t>> from_int_matrix(const IntMatrix& m) {
    std::vector<std::vector<std::int32_t>> out(static_cast<std::size_t>(m.rows));
    for (std::int64_t r = 0; r < m.rows; ++r) {
        out[static_cast<std::size_t>(r)].resize(static_cast<std::size_t>(m.cols));
        for (std::int64_t c = 0; c < m.cols; ++c)
            out[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
                m.at(r, c);
    }
    return out;
}

py::dict trace_dict(const ExecutionTrace& t) {
    py::dict d;
    d["acc_ops"] = t.acc_ops;
    d["mac_ops_high"] = t.mac_ops_high;
    d["mac_ops_low"] = t.mac_ops_low;
    d["bits_read"] = t.bits_read;
    d["bits_moved"] = t.bits_moved;
    d["spikes"] = t.spikes;
    d["beta"] = t.beta_mean();
    d["gamma"] = t.gamma;
    d["T"] = t.T;
    d["max_spike_time"] = t.max_spike_time;
    return d;
}

} // namespace

PYBIND11_MODULE(_kirin, m) {
    m.doc() = "hybrid spike/integer matmul simulator";

    py::enum_<Axis>(m, "Axis")
        .value("row", Axis::Row)
        .value("column", Axis::Column);

    py::class_<QuantTensor>(m, "QuantTensor")
        .def_property_readonly(
            "codes", [](const QuantTensor& q) { return from_int_matrix(q.codes); })
        .def_property_readonly(
            "scale", [](const QuantTensor& q) { return q.params_normal.scale; })
        .def_property_readonly(
            "zero_point",
            [](const QuantTensor& q) { return q.params_normal.zero_point; })
        .def_readonly("outlier_channels", &QuantTensor::outlier_channels)
        .def("to_json", [](const QuantTensor& q) { return quant_tensor_to_json(q); });

    m.def(
        "quantize",
        [](const std::vector<std::vector<double>>& x, Axis axis, int b_n, int b_o,
           const std::string& mode, double threshold_k) {
            MadConfig cfg;
            cfg.threshold_k = threshold_k;
            return quantize(to_matrix(x), axis, b_n, b_o,
                            mode == "asymmetric" ? QuantMode::Asymmetric
                                                 : QuantMode::Symmetric,
                            cfg);
        },
        py::arg("x"), py::arg("axis") = Axis::Column, py::arg("b_n") = 4,
        py::arg("b_o") = 8, py::arg("mode") = "symmetric",
        py::arg("threshold_k") = 3.0);

    m.def("dequantize",
          [](const QuantTensor& q) { return from_matrix(dequantize(q)); });

    m.def(
        "detect_outlier_channels",
        [](const std::vector<std::vector<double>>& x, Axis axis, double k) {
            MadConfig cfg;
            cfg.threshold_k = k;
            return detect_outlier_channels(to_matrix(x), axis, cfg);
        },
        py::arg("x"), py::arg("axis") = Axis::Column, py::arg("threshold_k") = 3.0);

    py::class_<SpikeTrain>(m, "SpikeTrain")
        .def_property_readonly("window_T",
                               [](const SpikeTrain& t) { return t.window_T; })
        .def("decode", [](const SpikeTrain& t) { return decode(t); })
        .def("total_spikes", &SpikeTrain::total_spikes)
        .def("to_json", [](const SpikeTrain& t) { return spike_train_to_json(t); });

    m.def("encode_ttfs",
          [](const std::vector<std::int32_t>& codes, std::int64_t T) {
              return encode_ttfs(codes, T);
          });
    m.def("encode_rate",
          [](const std::vector<std::int32_t>& codes, std::int64_t T) {
              return encode_rate(codes, T);
          });
    m.def("measure_rates", [](const SpikeTrain& t) {
        const SpikeRateStats s = measure_rates(t);
        py::dict d;
        d["mean_rate"] = s.mean_rate;
        d["fired_fraction"] = s.fired_fraction;
        d["total_spikes"] = s.total_spikes;
        return d;
    });

    m.def(
        "if_silence_run",
        [](std::int64_t v_total, double s1, double s2, double bias) {
            const IFResult r =
                if_silence_run(v_total, ThresholdSpec::from_scales(s1, s2), bias);
            py::dict d;
            d["output_value"] = r.output_value;
            d["st"] = r.silence_count_st;
            d["v_rest"] = r.residual_v_rest;
            d["v_total"] = r.v_total;
            return d;
        },
        py::arg("v_total"), py::arg("s1"), py::arg("s2"), py::arg("bias") = 0.0);

    m.def("accumulate_potential",
          [](const SpikeTrain& t, const std::vector<std::int32_t>& w) {
              return accumulate_potential(t, w);
          });

    m.def(
        "hybrid_matmul",
        [](const QuantTensor& a, const QuantTensor& b,
           const std::vector<double>& bias, std::int64_t t_n,
           const std::string& kind) {
            HybridMatmulOptions opts;
            opts.kind =
                kind == "attention" ? MatmulKind::Attention : MatmulKind::Linear;
            const ThresholdSpec spec = ThresholdSpec::from_scales(
                a.params_normal.scale, b.params_normal.scale);
            const HybridMatmulResult r = hybrid_matmul(a, b, bias, spec, t_n, opts);
            return py::make_tuple(from_matrix(r.output), trace_dict(r.trace));
        },
        py::arg("a"), py::arg("b"), py::arg("bias") = std::vector<double>{},
        py::arg("t_n") = 16, py::arg("kind") = "linear");

    m.def(
        "reference_matmul",
        [](const QuantTensor& a, const QuantTensor& b,
           const std::vector<double>& bias) {
            return from_matrix(reference_matmul(a, b, bias));
        },
        py::arg("a"), py::arg("b"), py::arg("bias") = std::vector<double>{});

    m.def(
        "energy_comparison",
        [](std::int64_t s, std::int64_t h, std::int64_t gamma, std::int64_t beta) {
            EnergyInputs in;
            in.S = s;
            in.H_in = in.H_out = h;
            in.gamma = gamma;
            in.beta = Rational(beta, 1);
            in.S_r_low = Rational(1, in.T_low);
            in.S_r_high = Rational(1, in.T_high);
            const MethodComparison cmp = method_comparison(in, EnergyConstants{});
            py::dict d;
            for (const auto& [name, entry] : cmp.methods)
                d[name.c_str()] = entry.block.total();
            return d;
        },
        py::arg("s") = 512, py::arg("h") = 4096, py::arg("gamma") = 110,
        py::arg("beta") = 87);

    m.def(
        "le_q_total",
        [](std::int64_t b, std::int64_t s, std::int64_t h_in, std::int64_t h_out) {
            EnergyInputs in;
            in.B = b;
            in.S = s;
            in.H_in = h_in;
            in.H_out = h_out;
            return le_q(in, EnergyConstants{}).total();
        },
        py::arg("b") = 1, py::arg("s") = 1, py::arg("h_in") = 2,
        py::arg("h_out") = 2);

    m.def(
        "compare_block_json",
        [](const std::string& config_json) {
            const BlockConfig cfg = config_json.empty()
                                        ? BlockConfig{}
                                        : BlockConfig::from_json(config_json);
            return compare_block(build_block(cfg)).to_json();
        },
        py::arg("config_json") = "");
}
