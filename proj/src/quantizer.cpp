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
#include "kirin/quantizer.hpp"

#include <algorithm>
#include <cmath>

namespace kirin {

namespace {

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    if (n == 0) throw std::invalid_argument("empty input");
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    double hi = *mid;
    if (n % 2 == 1) return hi;
    std::nth_element(v.begin(), mid - 1, mid);
    return 0.5 * (*(mid - 1) + hi);
}

std::vector<double> channel_stats(const Matrix& x, Axis axis, ChannelStat stat) {
    const std::int64_t nch = axis == Axis::Row ? x.rows : x.cols;
    const std::int64_t len = axis == Axis::Row ? x.cols : x.rows;
    std::vector<double> out(static_cast<std::size_t>(nch), 0.0);
    for (std::int64_t ch = 0; ch < nch; ++ch) {
        double acc = 0.0;
        for (std::int64_t i = 0; i < len; ++i) {
            const double v = axis == Axis::Row ? x.at(ch, i) : x.at(i, ch);
            const double a = std::fabs(v);
            switch (stat) {
                case ChannelStat::MeanAbs: acc += a; break;
                case ChannelStat::MaxAbs: acc = std::max(acc, a); break;
                case ChannelStat::Rms: acc += a * a; break;
            }
        }
        if (stat == ChannelStat::MeanAbs) acc /= static_cast<double>(len);
        if (stat == ChannelStat::Rms) acc = std::sqrt(acc / static_cast<double>(len));
        out[static_cast<std::size_t>(ch)] = acc;
    }
    return out;
}

struct GroupExtrema {
    double min = 0.0;
    double max = 0.0;
    double absmax = 0.0;
    bool any = false;
    void feed(double v) {
        if (!any) {
            min = max = v;
            any = true;
        } else {
            min = std::min(min, v);
            max = std::max(max, v);
        }
        absmax = std::max(absmax, std::fabs(v));
    }
};

} // namespace

bool QuantTensor::is_outlier_channel(std::int64_t ch) const {
    return std::binary_search(outlier_channels.begin(), outlier_channels.end(),
                              static_cast<std::int32_t>(ch));
}

std::int32_t quantize_value(double x, const QuantParams& p) {
    if (!(p.scale > 0.0))
        throw std::invalid_argument("quantize_value: scale must be positive");
    // round half away from zero
    const double q = std::round(x / p.scale) + static_cast<double>(p.zero_point);
    const double lo = static_cast<double>(p.qmin());
    const double hi = static_cast<double>(p.qmax());
    return static_cast<std::int32_t>(std::clamp(q, lo, hi));
}

double dequantize_value(std::int32_t code, const QuantParams& p) {
    return p.scale * (static_cast<double>(code) - static_cast<double>(p.zero_point));
}

std::vector<std::int32_t> detect_outlier_channels(const Matrix& x, Axis axis,
                                                  const MadConfig& cfg) {
    if (x.empty()) throw std::invalid_argument("empty input");
    if (!(cfg.threshold_k > 0.0))
        throw std::invalid_argument("threshold_k must be positive");

    const std::vector<double> stats = channel_stats(x, axis, cfg.statistic);
    const double med = median_of(stats);

    std::vector<double> devs(stats.size());
    for (std::size_t i = 0; i < stats.size(); ++i)
        devs[i] = std::fabs(stats[i] - med);
    const double mad = median_of(devs);

    std::vector<std::int32_t> out;
    if (mad > 0.0) {
        const double fence = cfg.threshold_k * cfg.consistency_constant * mad;
        for (std::size_t i = 0; i < stats.size(); ++i)
            if (stats[i] - med > fence) out.push_back(static_cast<std::int32_t>(i));
        return out;
    }

    // MAD == 0. Constant data carries no outliers; otherwise flag the strict
    // maxima only (documented fallback).
    const double mx = *std::max_element(stats.begin(), stats.end());
    const double mn = *std::min_element(stats.begin(), stats.end());
    if (mx == mn) return out;
    if (mx > med)
        for (std::size_t i = 0; i < stats.size(); ++i)
            if (stats[i] == mx) out.push_back(static_cast<std::int32_t>(i));
    return out;
}

QuantTensor quantize_with_outliers(const Matrix& x, Axis axis, int b_n, int b_o,
                                   QuantMode mode,
                                   std::vector<std::int32_t> outliers) {
    if (x.empty()) throw std::invalid_argument("empty input");
    if (b_n > b_o) throw std::invalid_argument("b_n must not exceed b_o");
    if (b_n < 2 || b_o > 16) throw std::invalid_argument("bit widths out of range");
    for (double v : x.data)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite input");

    std::sort(outliers.begin(), outliers.end());
    outliers.erase(std::unique(outliers.begin(), outliers.end()), outliers.end());

    QuantTensor q;
    q.axis = axis;
    q.outlier_channels = std::move(outliers);
    q.codes = IntMatrix(x.rows, x.cols);

    GroupExtrema normal, outlier;
    for (std::int64_t r = 0; r < x.rows; ++r) {
        for (std::int64_t c = 0; c < x.cols; ++c) {
            const std::int64_t ch = axis == Axis::Row ? r : c;
            (q.is_outlier_channel(ch) ? outlier : normal).feed(x.at(r, c));
        }
    }

    const bool is_signed = mode == QuantMode::Symmetric;
    q.params_normal = QuantParams{1.0, 0, b_n, is_signed};
    q.params_outlier = QuantParams{1.0, 0, b_o, is_signed};

    double scale = 0.0;
    std::int32_t zp = 0;
    if (mode == QuantMode::Symmetric) {
        // One shared scale; each group's absmax must land inside its own
        // integer range, so take the binding constraint of the two.
        if (normal.any)
            scale = std::max(scale, normal.absmax / static_cast<double>(q.params_normal.qmax()));
        if (outlier.any)
            scale = std::max(scale, outlier.absmax / static_cast<double>(q.params_outlier.qmax()));
    } else {
        double gmin = 0.0, gmax = 0.0;
        bool any = false;
        if (normal.any) {
            scale = std::max(scale, (normal.max - normal.min) /
                                        static_cast<double>(q.params_normal.qmax()));
            gmin = normal.min;
            gmax = normal.max;
            any = true;
        }
        if (outlier.any) {
            scale = std::max(scale, (outlier.max - outlier.min) /
                                        static_cast<double>(q.params_outlier.qmax()));
            gmin = any ? std::min(gmin, outlier.min) : outlier.min;
            gmax = any ? std::max(gmax, outlier.max) : outlier.max;
        }
        if (scale > 0.0) {
            const double z = std::round(-gmin / scale);
            zp = static_cast<std::int32_t>(
                std::clamp(z, 0.0, static_cast<double>(q.params_outlier.qmax())));
        }
    }
    if (scale == 0.0) scale = 1.0; // constant-zero tensors

    q.params_normal.scale = scale;
    q.params_outlier.scale = scale;
    q.params_normal.zero_point = zp;
    q.params_outlier.zero_point = zp;

    for (std::int64_t r = 0; r < x.rows; ++r)
        for (std::int64_t c = 0; c < x.cols; ++c)
            q.codes.at(r, c) =
                quantize_value(x.at(r, c), q.params_for_channel(q.channel_of(r, c)));
    return q;
}

QuantTensor quantize(const Matrix& x, Axis axis, int b_n, int b_o, QuantMode mode,
                     const MadConfig& cfg) {
    return quantize_with_outliers(x, axis, b_n, b_o, mode,
                                  detect_outlier_channels(x, axis, cfg));
}

Matrix dequantize(const QuantTensor& q) {
    Matrix out(q.codes.rows, q.codes.cols);
    for (std::int64_t r = 0; r < q.codes.rows; ++r)
        for (std::int64_t c = 0; c < q.codes.cols; ++c)
            out.at(r, c) = dequantize_value(
                q.codes.at(r, c), q.params_for_channel(q.channel_of(r, c)));
    return out;
}

} // namespace kirin
