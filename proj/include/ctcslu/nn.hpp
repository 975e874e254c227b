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

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctcslu/tensor.hpp"

namespace ctcslu {

struct StateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Named parameter tensors with gradients and AdamW moment state.
/// Iteration order is insertion order and never changes.
class ParamStore {
public:
    struct Entry {
        std::string name;
        Tensor value;
        Tensor grad;
        Tensor moment1;
        Tensor moment2;
        std::uint64_t step = 0;
        bool trainable = true;
    };

    Tensor& add(const std::string& name, Tensor value) {
        if (index_.count(name)) throw StateError("duplicate parameter: " + name);
        Entry e;
        e.name = name;
        e.grad = Tensor(value.dims());
        e.moment1 = Tensor(value.dims());
        e.moment2 = Tensor(value.dims());
        e.value = std::move(value);
        index_[name] = entries_.size();
        entries_.push_back(std::move(e));
        return entries_.back().value;
    }

    bool has(const std::string& name) const { return index_.count(name) != 0; }

    Entry& entry(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw StateError("unknown parameter: " + name);
        return entries_[it->second];
    }
    const Entry& entry(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw StateError("unknown parameter: " + name);
        return entries_[it->second];
    }

    Tensor& value(const std::string& name) { return entry(name).value; }
    const Tensor& value(const std::string& name) const { return entry(name).value; }
    Tensor& grad(const std::string& name) { return entry(name).grad; }

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }

    void zero_grad() {
        for (auto& e : entries_) e.grad.fill(0.0);
    }

    std::size_t num_params() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.value.numel();
        return n;
    }

    /// Snapshot of parameter values only (optimizer state excluded).
    std::vector<Tensor> snapshot() const {
        std::vector<Tensor> out;
        out.reserve(entries_.size());
        for (const auto& e : entries_) out.push_back(e.value);
        return out;
    }

    void restore(const std::vector<Tensor>& snap) {
        if (snap.size() != entries_.size())
            throw StateError("snapshot does not match store layout");
        for (std::size_t i = 0; i < snap.size(); ++i) {
            if (!snap[i].same_dims(entries_[i].value))
                throw StateError("snapshot dims mismatch for " + entries_[i].name);
            entries_[i].value = snap[i];
        }
    }

    void set_trainable_all(bool flag) {
        for (auto& e : entries_) e.trainable = flag;
    }

    /// Mark as trainable exactly the entries whose name starts with one of
    /// the given prefixes.
    void set_trainable_prefixes(const std::vector<std::string>& prefixes) {
        for (auto& e : entries_) {
            bool on = false;
            for (const auto& p : prefixes)
                if (e.name.rfind(p, 0) == 0) on = true;
            e.trainable = on;
        }
    }

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

namespace nn {

/// out[j] = sum_i weight[j,i]*x[i] + bias[j]
Tensor linear_forward(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Accumulates dweight/dbias and returns dx.
Tensor linear_backward(const Tensor& x, const Tensor& weight, const Tensor& dout,
                       Tensor& dweight, Tensor& dbias);

double gelu_scalar(double x);
double gelu_grad_scalar(double x);
Tensor gelu(const Tensor& x);
Tensor gelu_backward(const Tensor& x, const Tensor& dout);

std::vector<double> softmax(const std::vector<double>& logits);
Tensor softmax(const Tensor& logits);

/// log softmax of one row, stable via log-sum-exp.
std::vector<double> log_softmax(const std::vector<double>& logits);

/// vjp of row-wise softmax: dlogits = p .* (dout - <dout, p>)
std::vector<double> softmax_backward_row(const std::vector<double>& probs,
                                         const std::vector<double>& dout);

struct MaxpoolResult {
    Tensor pooled;                    // [d]
    std::vector<std::size_t> argmax;  // winning frame per dimension
};

/// Column-wise max over time; ties go to the earliest frame.
MaxpoolResult maxpool_time(const Tensor& H);
void maxpool_time_backward(const MaxpoolResult& res, const Tensor& dpooled, Tensor& dH);

struct CrossEntropyResult {
    double loss;
    std::vector<double> dlogits;  // softmax(logits) - one_hot(label)
};

CrossEntropyResult cross_entropy(const std::vector<double>& logits, std::size_t label);

/// One decoupled-weight-decay Adam step over all trainable entries.
/// Gradients are left untouched; the caller zeroes them.
void adamw_step(ParamStore& store, const AdamWConfig& cfg);

/// Scale all trainable gradients so their global L2 norm is at most max_norm.
/// Returns the pre-clip norm.
double clip_grad_norm(ParamStore& store, double max_norm);

struct LinearSpec {
    std::string name;
    std::size_t fan_out;
    std::size_t fan_in;
    std::vector<std::size_t> weight_dims;  // defaults to [fan_out, fan_in]
};

/// Glorot-uniform weights, zero biases, fully determined by seed.
/// Adds "<name>.weight" and "<name>.bias" per spec entry.
void init_params(ParamStore& store, const std::vector<LinearSpec>& specs,
                 std::uint64_t seed);

/// Central-difference check of the analytic gradients already present in
/// `store` against `loss_fn`, over a seeded random subsample of coordinates.
/// Returns the max relative error max|a-n| / max(1e-8, |a|+|n|).
double finite_diff_check(const std::function<double(ParamStore&)>& loss_fn,
                         ParamStore& store, double h, std::size_t subsample,
                         std::uint64_t seed);

}  // namespace nn
}  // namespace ctcslu
