// Copyright (c) 2026 The ctcslu Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctcslu {

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense row-major tensor of 64-bit floats.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> dims)
        : dims_(std::move(dims)), values_(numel_of(dims_), 0.0) {}

    Tensor(std::vector<std::size_t> dims, std::vector<double> values)
        : dims_(std::move(dims)), values_(std::move(values)) {
        if (numel_of(dims_) != values_.size())
            throw ShapeError("tensor dims do not match value count");
    }

    static Tensor matrix(std::size_t rows, std::size_t cols) {
        return Tensor({rows, cols});
    }

    static Tensor vector(std::vector<double> values) {
        std::size_t n = values.size();
        return Tensor({n}, std::move(values));
    }

    static Tensor from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) return Tensor({0, 0});
        std::size_t cols = rows.front().size();
        Tensor out({rows.size(), cols});
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != cols)
                throw ShapeError("ragged row list");
            for (std::size_t j = 0; j < cols; ++j) out.at(i, j) = rows[i][j];
        }
        return out;
    }

    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t rank() const { return dims_.size(); }
    std::size_t numel() const { return values_.size(); }

    std::size_t dim(std::size_t i) const { return dims_.at(i); }
    std::size_t rows() const { return dims_.at(0); }
    std::size_t cols() const { return dims_.at(1); }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    double& at(std::size_t i, std::size_t j) { return values_[i * dims_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return values_[i * dims_[1] + j]; }

    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return values_[(i * dims_[1] + j) * dims_[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return values_[(i * dims_[1] + j) * dims_[2] + k];
    }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    std::vector<double> row(std::size_t i) const {
        std::size_t c = cols();
        return {values_.begin() + static_cast<std::ptrdiff_t>(i * c),
                values_.begin() + static_cast<std::ptrdiff_t>((i + 1) * c)};
    }

    void fill(double v) { std::fill(values_.begin(), values_.end(), v); }

    bool same_dims(const Tensor& o) const { return dims_ == o.dims_; }

    static std::size_t numel_of(const std::vector<std::size_t>& dims) {
        std::size_t n = 1;
        for (std::size_t d : dims) n *= d;
        return dims.empty() ? 0 : n;
    }

private:
    std::vector<std::size_t> dims_;
    std::vector<double> values_;
};

}  // namespace ctcslu
