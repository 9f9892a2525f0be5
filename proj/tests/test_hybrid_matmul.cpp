#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "kirin/hybrid_matmul.hpp"
#include "kirin/io.hpp"
#include "kirin/rng.hpp"

using namespace kirin;

namespace {

QuantTensor tensor_from_codes(const std::vector<std::vector<std::int32_t>>& rows,
                              double scale, Axis axis,
                              std::vector<std::int32_t> outliers, int b_n = 4,
                              int b_o = 10) {
    QuantTensor q;
    q.codes = IntMatrix(static_cast<std::int64_t>(rows.size()),
                        static_cast<std::int64_t>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            q.codes.at(static_cast<std::int64_t>(r), static_cast<std::int64_t>(c)) =
                rows[r][c];
    q.params_normal = QuantParams{scale, 0, b_n, true};
    q.params_outlier = QuantParams{scale, 0, b_o, true};
    q.outlier_channels = std::move(outliers);
    q.axis = axis;
    return q;
}

Matrix random_matrix(Rng& rng, std::int64_t rows, std::int64_t cols,
                     double heavy_every = 0.0) {
    Matrix m(rows, cols);
    for (auto& v : m.data) v = rng.gaussian();
    if (heavy_every > 0.0) {
        const std::int64_t step =
            std::max<std::int64_t>(2, static_cast<std::int64_t>(heavy_every));
        for (std::int64_t c = 0; c < cols; c += step)
            for (std::int64_t r = 0; r < rows; ++r) m.at(r, c) *= 20.0;
    }
    return m;
}

} // namespace

TEST_CASE("retained count follows the window conjunction") {
    const auto no_outliers =
        tensor_from_codes({{20, 3, 200}}, 1.0, Axis::Row, {});
    CHECK(count_retained(no_outliers, 16) == 0); // not flagged, not retained

    const auto one_channel =
        tensor_from_codes({{20, 3, 200}}, 1.0, Axis::Row, {0});
    CHECK(count_retained(one_channel, 16) == 2); // 20 and 200 only
}

TEST_CASE("window-edge codes cannot become spikes and are retained") {
    const auto q = tensor_from_codes({{16, 15, -16}}, 1.0, Axis::Row, {0});
    CHECK(count_retained(q, 16) == 2); // a spike at t=16 has no slot
    const HybridSpikeMatrix h = split(q, 16);
    CHECK(h.beta == 2);
    // one channel (the row); lines run along the columns
    CHECK(decode(h.trains[0]) == std::vector<std::int32_t>{0});
    CHECK(decode(h.trains[1]) == std::vector<std::int32_t>{15});
    CHECK(decode(h.trains[2]) == std::vector<std::int32_t>{0});
}

TEST_CASE("retained ratio on a model-width heavy-tailed tensor") {
    // 4096 channels, 110 of them spread uniformly across a wide range so
    // most of their codes overflow the low window once quantized at 8 bits
    Rng rng(1);
    const std::int64_t rows = 512, channels = 4096, heavy = 110;
    Matrix m(rows, channels);
    for (auto& v : m.data) v = rng.gaussian();
    for (std::int64_t ch = 0; ch < heavy; ++ch) {
        const std::int64_t col = ch * 37 % channels;
        for (std::int64_t r = 0; r < rows; ++r)
            m.at(r, col) = rng.uniform(-100.0, 100.0);
    }
    const QuantTensor q = quantize(m, Axis::Column, 4, 8);
    CHECK(q.gamma() >= heavy);
    const std::int64_t beta = count_retained(q, 16);
    const double ratio = static_cast<double>(beta) / static_cast<double>(m.size());
    CHECK(ratio > 0.0164); // 2.14% band, half a point each way
    CHECK(ratio < 0.0264);
}

TEST_CASE("spike matrix selection minimizes retained integers") {
    const auto a = tensor_from_codes({{20, 3}, {40, 1}}, 1.0, Axis::Column, {0});
    const auto b = tensor_from_codes(
        {{100, 90, 80}, {1, 2, 3}}, 1.0, Axis::Row, {0, 1});
    const SelectionReport rep = select_spike_matrix(a, b, 16);
    CHECK(rep.count_a == 2);
    CHECK(rep.count_b == 3);
    CHECK(rep.chosen == SelectionReport::Chosen::A);
    CHECK(rep.beta == 2);

    // tie breaks toward the activation side
    const auto clean_a = tensor_from_codes({{1, 2}, {3, 4}}, 1.0, Axis::Column, {});
    const auto clean_b = tensor_from_codes({{1, 2}, {3, 4}}, 1.0, Axis::Row, {});
    CHECK(select_spike_matrix(clean_a, clean_b, 16).chosen ==
          SelectionReport::Chosen::A);

    CHECK_THROWS(select_spike_matrix(b, clean_a, 16)); // 2x3 against 2x2
}

TEST_CASE("selection always takes the smaller count") {
    Rng rng(17);
    for (int iter = 0; iter < 200; ++iter) {
        const Matrix ma = random_matrix(rng, 6, 8, 3);
        const Matrix mb = random_matrix(rng, 8, 5, 4);
        const QuantTensor qa = quantize(ma, Axis::Column, 4, 8);
        const QuantTensor qb = quantize(mb, Axis::Row, 4, 8);
        const SelectionReport rep = select_spike_matrix(qa, qb, 16);
        CHECK(rep.beta == std::min(rep.count_a, rep.count_b));
        CHECK(rep.beta <= std::max(rep.count_a, rep.count_b));
    }
}

TEST_CASE("split covers every element exactly once") {
    const auto q = tensor_from_codes({{20, 3, 200}}, 1.0, Axis::Row, {0});
    const HybridSpikeMatrix h = split(q, 16);
    CHECK(h.beta == 2);
    REQUIRE(h.trains.size() == 3); // channel axis is the row, lines are columns
    // reconstruct: decoded spikes plus retained integers give the codes back
    IntMatrix rebuilt(1, 3);
    for (std::int64_t line = 0; line < h.line_count(); ++line) {
        const auto decoded = decode(h.trains[static_cast<std::size_t>(line)]);
        rebuilt.at(0, line) = decoded[0];
        for (const auto& [ch, code] : h.retained_in_line(line))
            rebuilt.at(ch, line) += code;
    }
    CHECK(rebuilt.data == q.codes.data);

    const auto clean = tensor_from_codes({{1, -2, 3}}, 1.0, Axis::Row, {0});
    CHECK(split(clean, 16).beta == 0);
}

TEST_CASE("split reconstruction over random tensors") {
    Rng rng(23);
    for (int iter = 0; iter < 1000; ++iter) {
        const std::int64_t rows = rng.uniform_int(1, 10);
        const std::int64_t cols = rng.uniform_int(1, 10);
        const Matrix m = random_matrix(rng, rows, cols, 3);
        const QuantTensor q = quantize(m, Axis::Column, 4, 8);
        const HybridSpikeMatrix h = split(q, 16);
        IntMatrix rebuilt(rows, cols);
        for (std::int64_t r = 0; r < rows; ++r) {
            const auto decoded = decode(h.trains[static_cast<std::size_t>(r)]);
            for (std::int64_t c = 0; c < cols; ++c)
                rebuilt.at(r, c) = decoded[static_cast<std::size_t>(c)];
            for (const auto& [ch, code] : h.retained_in_line(r))
                rebuilt.at(r, ch) += code;
        }
        CHECK(rebuilt.data == q.codes.data);
    }
}

TEST_CASE("dense retained storage above the density cutoff") {
    // every element lives in an outlier channel and exceeds the window
    const auto q = tensor_from_codes({{100, 120}, {-90, 80}}, 1.0, Axis::Row,
                                     {0, 1}, 4, 10);
    const HybridSpikeMatrix h = split(q, 16);
    CHECK(h.dense_storage);
    CHECK(h.beta == 4);
    CHECK(h.retained_in_line(0).size() == 2);

    const auto sparse = tensor_from_codes({{100, 1}, {2, 3}}, 1.0, Axis::Row, {0});
    CHECK_FALSE(split(sparse, 16).dense_storage);
}

TEST_CASE("hybrid matmul worked example") {
    const auto a = tensor_from_codes({{5, 3}}, 0.5, Axis::Column, {});
    const auto b = tensor_from_codes({{2}, {-1}}, 0.5, Axis::Row, {});
    const ThresholdSpec spec = ThresholdSpec::from_scales(0.5, 0.5);
    const HybridMatmulResult res = hybrid_matmul(a, b, {}, spec, 16);
    CHECK(res.output.at(0, 0) == 1.75); // 0.25 * (10 - 3)
    CHECK(res.trace.beta_total == 0);
    CHECK(res.trace.max_spike_time == 5);
}

TEST_CASE("identity-shaped rows reproduce dequantized entries") {
    // a one-hot integer row picks out one dequantized weight row
    const auto a = tensor_from_codes({{1, 0, 0}}, 1.0, Axis::Column, {});
    Rng rng(3);
    const Matrix wb = random_matrix(rng, 3, 4);
    const QuantTensor qb = quantize(wb, Axis::Row, 4, 8);
    const ThresholdSpec spec =
        ThresholdSpec::from_scales(1.0, qb.params_normal.scale);
    const HybridMatmulResult res = hybrid_matmul(a, qb, {}, spec, 16);
    const Matrix deq = dequantize(qb);
    for (std::int64_t c = 0; c < 4; ++c)
        CHECK(res.output.at(0, c) == doctest::Approx(deq.at(0, c)).epsilon(1e-12));
}

TEST_CASE("hybrid execution is bit-exact against the integer reference") {
    Rng rng(2024);
    int nonzero_beta_cases = 0;
    for (int iter = 0; iter < 500; ++iter) {
        const Matrix ma = random_matrix(rng, 8, 8, 3);
        const Matrix mb = random_matrix(rng, 8, 8, 4);
        const QuantTensor qa = quantize(ma, Axis::Column, 4, 8);
        const QuantTensor qb = quantize(mb, Axis::Row, 4, 8);
        std::vector<double> bias(8);
        for (auto& v : bias) v = rng.gaussian();
        const ThresholdSpec spec = ThresholdSpec::from_scales(
            qa.params_normal.scale, qb.params_normal.scale);
        const HybridMatmulResult res = hybrid_matmul(qa, qb, bias, spec, 16);
        const Matrix ref = reference_matmul(qa, qb, bias);
        CHECK(res.output.data == ref.data); // bitwise
        CHECK(res.trace.max_spike_time <= 15);
        if (res.trace.beta_total > 0) ++nonzero_beta_cases;
    }
    CHECK(nonzero_beta_cases > 0); // the integer path was actually exercised
}

TEST_CASE("hybrid execution matches dequantize-then-multiply closely") {
    Rng rng(77);
    const Matrix ma = random_matrix(rng, 6, 10, 3);
    const Matrix mb = random_matrix(rng, 10, 7, 5);
    const QuantTensor qa = quantize(ma, Axis::Column, 4, 8);
    const QuantTensor qb = quantize(mb, Axis::Row, 4, 8);
    const ThresholdSpec spec =
        ThresholdSpec::from_scales(qa.params_normal.scale, qb.params_normal.scale);
    const HybridMatmulResult res = hybrid_matmul(qa, qb, {}, spec, 16);
    const Matrix deq = matmul(dequantize(qa), dequantize(qb));
    for (std::size_t i = 0; i < deq.data.size(); ++i)
        CHECK(res.output.data[i] ==
              doctest::Approx(deq.data[i]).epsilon(1e-12));
}

TEST_CASE("asymmetric activations stay exact through the correction terms") {
    Rng rng(88);
    for (int iter = 0; iter < 100; ++iter) {
        Matrix ma = random_matrix(rng, 5, 9, 4);
        for (auto& v : ma.data) v = std::fabs(v) + 0.1; // one-sided activations
        const Matrix mb = random_matrix(rng, 9, 6, 3);
        const QuantTensor qa =
            quantize(ma, Axis::Column, 4, 8, QuantMode::Asymmetric);
        const QuantTensor qb = quantize(mb, Axis::Row, 4, 8);
        const ThresholdSpec spec = ThresholdSpec::from_scales(
            qa.params_normal.scale, qb.params_normal.scale);
        const std::int64_t t_n = 16;
        HybridMatmulOptions opts;
        const HybridMatmulResult res = hybrid_matmul(qa, qb, {}, spec, t_n, opts);
        const Matrix ref = reference_matmul(qa, qb, {});
        CHECK(res.output.data == ref.data);
        if (qa.params_normal.zero_point != 0)
            CHECK(res.trace.correction_accs > 0);
    }
}

TEST_CASE("hybrid matmul rejects inconsistent inputs") {
    const auto a = tensor_from_codes({{1, 2}}, 0.5, Axis::Column, {});
    const auto b = tensor_from_codes({{1}, {2}, {3}}, 0.5, Axis::Row, {});
    const ThresholdSpec spec = ThresholdSpec::from_scales(0.5, 0.5);
    CHECK_THROWS(hybrid_matmul(a, b, {}, spec, 16)); // shapes

    const auto b2 = tensor_from_codes({{1}, {2}}, 0.5, Axis::Row, {});
    const ThresholdSpec wrong = ThresholdSpec::from_scales(0.9, 0.9);
    CHECK_THROWS_WITH(hybrid_matmul(a, b2, {}, wrong, 16),
                      doctest::Contains("scale mismatch"));

    const std::vector<double> bad_bias(5, 0.0);
    CHECK_THROWS(hybrid_matmul(a, b2, bad_bias, spec, 16));
}

TEST_CASE("trace json carries the schema fields") {
    const auto a = tensor_from_codes({{5, 3}}, 0.5, Axis::Column, {});
    const auto b = tensor_from_codes({{2}, {-1}}, 0.5, Axis::Row, {});
    const ThresholdSpec spec = ThresholdSpec::from_scales(0.5, 0.5);
    const HybridMatmulResult res = hybrid_matmul(a, b, {}, spec, 16);
    const std::string j = trace_to_json(res.trace);
    for (const char* key : {"acc_ops", "mac_ops_high", "mac_ops_low", "bits_read",
                            "bits_moved", "spikes", "beta", "gamma", "T"})
        CHECK(j.find(key) != std::string::npos);
}
