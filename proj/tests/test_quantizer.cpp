#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "kirin/io.hpp"
#include "kirin/quantizer.hpp"
#include "kirin/rng.hpp"

using namespace kirin;

namespace {

Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m(static_cast<std::int64_t>(rows.size()),
             static_cast<std::int64_t>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m.at(static_cast<std::int64_t>(r), static_cast<std::int64_t>(c)) =
                rows[r][c];
    return m;
}

} // namespace

TEST_CASE("code formula with a fixed scale") {
    QuantParams p{1.42, 0, 8, true};
    CHECK(quantize_value(7.1, p) == 5);
    CHECK(quantize_value(0.0, p) == 0);
    CHECK(quantize_value(-7.1, p) == -5);

    QuantParams asym{0.5, 3, 8, false};
    CHECK(quantize_value(0.0, asym) == 3);

    // values past the representable maximum clamp to the top code
    QuantParams narrow{1.0, 0, 4, false};
    CHECK(quantize_value(1000.0, narrow) == 15); // 2^4 - 1
    QuantParams snarrow{1.0, 0, 4, true};
    CHECK(quantize_value(1000.0, snarrow) == 7);
    CHECK(quantize_value(-1000.0, snarrow) == -8);
}

TEST_CASE("dequantize inverts the code formula") {
    QuantParams p{1.42, 0, 8, true};
    CHECK(dequantize_value(5, p) == doctest::Approx(7.10).epsilon(1e-12));
    CHECK(dequantize_value(0, p) == 0.0);

    QuantParams asym{0.5, 3, 8, false};
    CHECK(dequantize_value(3, asym) == 0.0);
}

TEST_CASE("round trip stays within half a step") {
    const QuantParams p{0.37, 0, 8, true};
    for (int code = -127; code <= 127; ++code) {
        for (double f : {-0.49, -0.25, 0.0, 0.25, 0.49}) {
            const double x = p.scale * (static_cast<double>(code) + f);
            const std::int32_t q = quantize_value(x, p);
            const double back = dequantize_value(q, p);
            CHECK(std::fabs(back - x) <= p.scale / 2 + 1e-12);
        }
    }
}

TEST_CASE("quantize preserves ordering within a channel") {
    Rng rng(7);
    std::vector<double> vals(64);
    for (auto& v : vals) v = rng.uniform(-3.0, 3.0);
    std::sort(vals.begin(), vals.end());
    Matrix m(1, 64);
    for (std::size_t i = 0; i < vals.size(); ++i) m.data[i] = vals[i];
    const QuantTensor q = quantize(m, Axis::Row, 4, 8);
    for (std::int64_t c = 1; c < 64; ++c)
        CHECK(q.codes.at(0, c) >= q.codes.at(0, c - 1));
}

TEST_CASE("mad fence on hand-made channel stats") {
    // channel stats are (1,1,1,1,100); median 1, MAD 0, so the fallback
    // flags the strict maximum
    const Matrix m = matrix_from_rows({{1, 1}, {1, 1}, {1, 1}, {1, 1}, {100, 100}});
    const auto out = detect_outlier_channels(m, Axis::Row);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == 4);

    // identical channels carry no outliers
    const Matrix same = matrix_from_rows({{2, 2}, {2, 2}, {2, 2}});
    CHECK(detect_outlier_channels(same, Axis::Row).empty());
}

TEST_CASE("detection errors and edge behavior") {
    Matrix empty;
    CHECK_THROWS_WITH(detect_outlier_channels(empty, Axis::Row),
                      doctest::Contains("empty input"));

    MadConfig bad;
    bad.threshold_k = 0.0;
    const Matrix m = matrix_from_rows({{1, 2}, {3, 4}});
    CHECK_THROWS(detect_outlier_channels(m, Axis::Row, bad));
}

TEST_CASE("detection is scale equivariant") {
    Rng rng(11);
    Matrix m(32, 48);
    for (auto& v : m.data) v = rng.gaussian();
    for (std::int64_t r = 0; r < 32; ++r) m.at(r, 5) *= 25.0;

    const auto base = detect_outlier_channels(m, Axis::Column);
    Matrix scaled = m;
    for (auto& v : scaled.data) v *= 3.7;
    CHECK(detect_outlier_channels(scaled, Axis::Column) == base);
}

TEST_CASE("flagged channel count shrinks as the fence widens") {
    Rng rng(13);
    Matrix m(64, 64);
    for (auto& v : m.data) v = rng.gaussian();
    for (std::int64_t r = 0; r < 64; ++r) {
        m.at(r, 3) *= 8.0;
        m.at(r, 40) *= 20.0;
    }
    std::size_t prev = SIZE_MAX;
    for (double k : {0.5, 1.0, 2.0, 3.0, 5.0, 9.0}) {
        MadConfig cfg;
        cfg.threshold_k = k;
        const auto found = detect_outlier_channels(m, Axis::Column, cfg);
        CHECK(found.size() <= prev);
        prev = found.size();
    }
}

TEST_CASE("injected heavy channels are recovered exactly at desk scale") {
    Rng rng(104729);
    Matrix m(256, 512);
    for (auto& v : m.data) v = rng.gaussian();
    std::vector<std::int32_t> injected = {7, 100, 255, 400, 501};
    for (std::int32_t ch : injected)
        for (std::int64_t r = 0; r < 256; ++r) m.at(r, ch) *= 20.0;
    const auto found = detect_outlier_channels(m, Axis::Column);
    CHECK(found == injected);
}

TEST_CASE("mixed-precision tensor honors range invariants") {
    Rng rng(29);
    Matrix m(64, 96);
    for (auto& v : m.data) v = rng.gaussian();
    for (std::int64_t r = 0; r < 64; ++r) {
        m.at(r, 10) *= 18.0;
        m.at(r, 77) *= 22.0;
    }
    const QuantTensor q = quantize(m, Axis::Column, 4, 8);
    CHECK(q.params_normal.scale == q.params_outlier.scale);
    CHECK(q.params_normal.scale > 0.0);
    CHECK(q.gamma() >= 2);
    for (std::int64_t r = 0; r < q.codes.rows; ++r) {
        for (std::int64_t c = 0; c < q.codes.cols; ++c) {
            const auto& p = q.params_for_channel(q.channel_of(r, c));
            CHECK(q.codes.at(r, c) >= p.qmin());
            CHECK(q.codes.at(r, c) <= p.qmax());
        }
    }
    // dequantization error bounded by half a step where no clamping occurs
    const Matrix back = dequantize(q);
    for (std::size_t i = 0; i < m.data.size(); ++i)
        CHECK(std::fabs(back.data[i] - m.data[i]) <=
              q.params_normal.scale / 2 + 1e-12);
}

TEST_CASE("quantize rejects malformed input") {
    Matrix m(2, 2);
    m.at(0, 0) = std::nan("");
    CHECK_THROWS_WITH(quantize(m, Axis::Row, 4, 8), doctest::Contains("non-finite"));

    Matrix ok(2, 2, 1.0);
    CHECK_THROWS(quantize(ok, Axis::Row, 8, 4)); // b_n > b_o
    Matrix empty;
    CHECK_THROWS(quantize(empty, Axis::Row, 4, 8));
}

TEST_CASE("asymmetric mode round-trips through the shared zero point") {
    Rng rng(31);
    Matrix m(16, 24);
    for (auto& v : m.data) v = rng.uniform(0.0, 5.0);
    const QuantTensor q = quantize(m, Axis::Column, 4, 8, QuantMode::Asymmetric);
    CHECK_FALSE(q.params_normal.is_signed);
    CHECK(q.params_normal.zero_point == q.params_outlier.zero_point);
    const Matrix back = dequantize(q);
    for (std::size_t i = 0; i < m.data.size(); ++i)
        CHECK(std::fabs(back.data[i] - m.data[i]) <= q.params_normal.scale + 1e-9);
}

TEST_CASE("quant tensor json round trip") {
    Rng rng(37);
    Matrix m(8, 12);
    for (auto& v : m.data) v = rng.gaussian();
    for (std::int64_t r = 0; r < 8; ++r) m.at(r, 4) *= 30.0;
    const QuantTensor q = quantize(m, Axis::Column, 4, 8);
    const QuantTensor back = quant_tensor_from_json(quant_tensor_to_json(q));
    CHECK(back.codes.data == q.codes.data);
    CHECK(back.outlier_channels == q.outlier_channels);
    CHECK(back.params_normal.scale == q.params_normal.scale);
    CHECK(back.axis == q.axis);
}

TEST_CASE("tensor text format round trip") {
    Rng rng(41);
    Matrix m(5, 3);
    for (auto& v : m.data) v = rng.gaussian();
    const Matrix back = read_tensor_text(write_tensor_text(m));
    CHECK(back.rows == m.rows);
    CHECK(back.cols == m.cols);
    CHECK(back.data == m.data);
}
