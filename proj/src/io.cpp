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
#include "kirin/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace kirin {

using nlohmann::json;
using nlohmann::ordered_json;

std::string write_tensor_text(const Matrix& m) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << m.rows << " " << m.cols << "\n";
    for (std::int64_t r = 0; r < m.rows; ++r) {
        for (std::int64_t c = 0; c < m.cols; ++c) {
            if (c) os << " ";
            os << m.at(r, c);
        }
        os << "\n";
    }
    return os.str();
}

Matrix read_tensor_text(const std::string& text) {
    std::istringstream is(text);
    std::int64_t rows = 0, cols = 0;
    if (!(is >> rows >> cols))
        throw std::runtime_error("tensor text: missing 'rows cols' header");
    Matrix m(rows, cols);
    for (std::int64_t i = 0; i < rows * cols; ++i)
        if (!(is >> m.data[static_cast<std::size_t>(i)]))
            throw std::runtime_error("tensor text: truncated data");
    return m;
}

void write_tensor_file(const Matrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << write_tensor_text(m);
}

Matrix read_tensor_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return read_tensor_text(ss.str());
}

namespace {

ordered_json params_to_json(const QuantParams& p) {
    return ordered_json{{"scale", p.scale},
                        {"zero_point", p.zero_point},
                        {"bit_width", p.bit_width},
                        {"signed", p.is_signed}};
}

QuantParams params_from_json(const json& j) {
    QuantParams p;
    p.scale = j.at("scale").get<double>();
    p.zero_point = j.at("zero_point").get<std::int32_t>();
    p.bit_width = j.at("bit_width").get<int>();
    p.is_signed = j.at("signed").get<bool>();
    return p;
}

} // namespace

std::string quant_tensor_to_json(const QuantTensor& q) {
    ordered_json j;
    j["rows"] = q.codes.rows;
    j["cols"] = q.codes.cols;
    ordered_json codes = ordered_json::array();
    for (std::int64_t r = 0; r < q.codes.rows; ++r) {
        ordered_json row = ordered_json::array();
        for (std::int64_t c = 0; c < q.codes.cols; ++c) row.push_back(q.codes.at(r, c));
        codes.push_back(std::move(row));
    }
    j["codes"] = std::move(codes);
    j["params_normal"] = params_to_json(q.params_normal);
    j["params_outlier"] = params_to_json(q.params_outlier);
    j["outlier_channels"] = q.outlier_channels;
    j["axis"] = to_string(q.axis);
    return j.dump();
}

QuantTensor quant_tensor_from_json(const std::string& text) {
    const json j = json::parse(text);
    QuantTensor q;
    const auto rows = j.at("rows").get<std::int64_t>();
    const auto cols = j.at("cols").get<std::int64_t>();
    q.codes = IntMatrix(rows, cols);
    const auto& codes = j.at("codes");
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t c = 0; c < cols; ++c)
            q.codes.at(r, c) = codes.at(static_cast<std::size_t>(r))
                                   .at(static_cast<std::size_t>(c))
                                   .get<std::int32_t>();
    q.params_normal = params_from_json(j.at("params_normal"));
    q.params_outlier = params_from_json(j.at("params_outlier"));
    q.outlier_channels = j.at("outlier_channels").get<std::vector<std::int32_t>>();
    q.axis = axis_from_string(j.at("axis").get<std::string>());
    return q;
}

std::string spike_train_to_json(const SpikeTrain& t) {
    ordered_json j;
    j["T"] = t.window_T;
    j["scheme"] = to_string(t.scheme);
    ordered_json neurons = ordered_json::array();
    for (const auto& nr : t.neurons)
        neurons.push_back(ordered_json{{"times", nr.times},
                                       {"sign", static_cast<int>(nr.sign)}});
    j["neurons"] = std::move(neurons);
    return j.dump();
}

SpikeTrain spike_train_from_json(const std::string& text) {
    const json j = json::parse(text);
    SpikeTrain t;
    t.window_T = j.at("T").get<std::int64_t>();
    const auto scheme = j.at("scheme").get<std::string>();
    if (scheme == "rate")
        t.scheme = Scheme::Rate;
    else if (scheme == "ttfs")
        t.scheme = Scheme::Ttfs;
    else
        throw std::invalid_argument("unknown scheme: " + scheme);
    for (const auto& nj : j.at("neurons")) {
        SpikeNeuron nr;
        nr.times = nj.at("times").get<std::vector<std::int32_t>>();
        nr.sign = static_cast<std::int8_t>(nj.at("sign").get<int>());
        t.neurons.push_back(std::move(nr));
    }
    return t;
}

std::string trace_to_json(const ExecutionTrace& t) {
    ordered_json j;
    j["acc_ops"] = t.acc_ops;
    j["mac_ops_high"] = t.mac_ops_high;
    j["mac_ops_low"] = t.mac_ops_low;
    j["bits_read"] = t.bits_read;
    j["bits_moved"] = t.bits_moved;
    j["spikes"] = t.spikes;
    j["beta"] = t.beta_mean();
    j["gamma"] = t.gamma;
    j["T"] = t.T;
    j["spikes_high"] = t.spikes_high;
    j["bits_read_high"] = t.bits_read_high;
    j["bits_moved_high"] = t.bits_moved_high;
    j["beta_total"] = t.beta_total;
    j["lines"] = t.lines;
    j["outputs"] = t.outputs;
    j["max_spike_time"] = t.max_spike_time;
    j["truncation_events"] = t.truncation_events;
    j["kind"] = t.kind == MatmulKind::Linear ? "linear" : "attention";
    j["method"] = t.method;
    return j.dump();
}

} // namespace kirin
