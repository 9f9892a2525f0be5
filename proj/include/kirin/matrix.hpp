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
#ifndef KIRIN_MATRIX_HPP
#define KIRIN_MATRIX_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace kirin {

/// Dense row-major matrix of doubles. Small and deliberately simple; every
/// simulation in this project is desk-scale.
struct Matrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::int64_t r, std::int64_t c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r * c), fill) {
        if (r < 0 || c < 0)
            throw std::invalid_argument("matrix dims must be nonnegative");
    }

    double& at(std::int64_t r, std::int64_t c) {
        return data[static_cast<std::size_t>(r * cols + c)];
    }
    double at(std::int64_t r, std::int64_t c) const {
        return data[static_cast<std::size_t>(r * cols + c)];
    }
    std::int64_t size() const { return rows * cols; }
    bool empty() const { return rows == 0 || cols == 0; }
};

/// Row-major matrix of integer codes.
struct IntMatrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<std::int32_t> data;

    IntMatrix() = default;
    IntMatrix(std::int64_t r, std::int64_t c, std::int32_t fill = 0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r * c), fill) {
        if (r < 0 || c < 0)
            throw std::invalid_argument("matrix dims must be nonnegative");
    }

    std::int32_t& at(std::int64_t r, std::int64_t c) {
        return data[static_cast<std::size_t>(r * cols + c)];
    }
    std::int32_t at(std::int64_t r, std::int64_t c) const {
        return data[static_cast<std::size_t>(r * cols + c)];
    }
    std::int64_t size() const { return rows * cols; }
    bool empty() const { return rows == 0 || cols == 0; }
};

/// Which axis of a matrix the notion of "channel" indexes.
enum class Axis { Row, Column };

inline std::string to_string(Axis a) { return a == Axis::Row ? "row" : "column"; }

inline Axis axis_from_string(const std::string& s) {
    if (s == "row") return Axis::Row;
    if (s == "column") return Axis::Column;
    throw std::invalid_argument("unknown axis: " + s);
}

/// Plain double matmul, used by the floating-point reference path.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Exact integer matmul on codes; the quantized-ANN oracle uses this.
/// Accumulation is 64-bit so desk-scale products never overflow.
std::vector<std::int64_t> matmul_i64(const IntMatrix& a, const IntMatrix& b);

Matrix transpose(const Matrix& m);

} // namespace kirin

#endif
