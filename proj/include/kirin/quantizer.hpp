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
#ifndef KIRIN_QUANTIZER_HPP
#define KIRIN_QUANTIZER_HPP

#include <cstdint>
#include <vector>

#include "kirin/matrix.hpp"

namespace kirin {

enum class QuantMode { Symmetric, Asymmetric };

/// Per-channel summary statistic the outlier detector runs MAD on.
/// MeanAbs is the default: it concentrates tightly for well-behaved channels,
/// so a k=3 fence separates genuinely heavy channels instead of flagging the
/// tail of a max-statistic distribution.
enum class ChannelStat { MeanAbs, MaxAbs, Rms };

struct MadConfig {
    double threshold_k = 3.0;
    double consistency_constant = 1.4826;
    ChannelStat statistic = ChannelStat::MeanAbs;
};

struct QuantParams {
    double scale = 1.0;
    std::int32_t zero_point = 0;
    int bit_width = 8;
    bool is_signed = true;

    std::int64_t qmin() const {
        return is_signed ? -(std::int64_t(1) << (bit_width - 1)) : 0;
    }
    std::int64_t qmax() const {
        return is_signed ? (std::int64_t(1) << (bit_width - 1)) - 1
                         : (std::int64_t(1) << bit_width) - 1;
    }
};

/// Integer codes plus everything needed to undo them. The normal and outlier
/// groups differ only in representable range: they share one scale and one
/// zero point per tensor, which is what keeps a matmul's dequantization a
/// single scalar multiply and the spiking execution path exact.
struct QuantTensor {
    IntMatrix codes;
    QuantParams params_normal;  // low bit-width group
    QuantParams params_outlier; // high bit-width group
    std::vector<std::int32_t> outlier_channels; // sorted channel indices
    Axis axis = Axis::Row;      // which axis "channel" indexes

    std::int64_t channel_count() const {
        return axis == Axis::Row ? codes.rows : codes.cols;
    }
    std::int64_t channel_length() const {
        return axis == Axis::Row ? codes.cols : codes.rows;
    }
    bool is_outlier_channel(std::int64_t ch) const;
    const QuantParams& params_for_channel(std::int64_t ch) const {
        return is_outlier_channel(ch) ? params_outlier : params_normal;
    }
    /// Channel index of element (r, c) under this tensor's axis.
    std::int64_t channel_of(std::int64_t r, std::int64_t c) const {
        return axis == Axis::Row ? r : c;
    }
    std::int64_t gamma() const {
        return static_cast<std::int64_t>(outlier_channels.size());
    }
};

/// code = clamp(round(x / scale) + zero_point, range).
/// Rounding is half-away-from-zero for cross-platform determinism.
std::int32_t quantize_value(double x, const QuantParams& p);

double dequantize_value(std::int32_t code, const QuantParams& p);

/// Flags channels whose magnitude statistic sits above the scaled-MAD fence:
///   stat > median + threshold_k * (consistency_constant * MAD).
/// The fence is one-sided; for quantization only unusually large channels
/// inflate the dynamic range. When MAD collapses to zero on nonconstant data
/// the detector falls back to flagging the strict maxima only.
std::vector<std::int32_t> detect_outlier_channels(const Matrix& x, Axis axis,
                                                  const MadConfig& cfg = {});

/// Outlier-aware mixed-precision quantization. Non-outlier channels carry
/// b_n-bit codes, outlier channels b_o-bit codes, all against one shared
/// scale chosen so each group's extrema stay representable.
QuantTensor quantize(const Matrix& x, Axis axis, int b_n, int b_o,
                     QuantMode mode = QuantMode::Symmetric,
                     const MadConfig& cfg = {});

/// Same but with a caller-supplied outlier channel set (skips detection).
QuantTensor quantize_with_outliers(const Matrix& x, Axis axis, int b_n, int b_o,
                                   QuantMode mode,
                                   std::vector<std::int32_t> outliers);

Matrix dequantize(const QuantTensor& q);

} // namespace kirin

#endif
