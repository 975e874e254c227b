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

#include "ctcslu/nn.hpp"

#include <algorithm>
#include <cmath>

#include "ctcslu/rng.hpp"

namespace ctcslu::nn {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

Tensor linear_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    if (weight.rank() != 2 || x.rank() != 1 || bias.rank() != 1 ||
        weight.cols() != x.numel() || weight.rows() != bias.numel())
        throw ShapeError("linear_forward: dims do not conform");
    std::size_t n_out = weight.rows(), n_in = weight.cols();
    Tensor out({n_out});
    for (std::size_t j = 0; j < n_out; ++j) {
        double acc = bias[j];
        for (std::size_t i = 0; i < n_in; ++i) acc += weight.at(j, i) * x[i];
        out[j] = acc;
    }
    return out;
}

Tensor linear_backward(const Tensor& x, const Tensor& weight, const Tensor& dout,
                       Tensor& dweight, Tensor& dbias) {
    std::size_t n_out = weight.rows(), n_in = weight.cols();
    if (dout.numel() != n_out || x.numel() != n_in)
        throw ShapeError("linear_backward: dims do not conform");
    Tensor dx({n_in});
    for (std::size_t j = 0; j < n_out; ++j) {
        double g = dout[j];
        dbias[j] += g;
        for (std::size_t i = 0; i < n_in; ++i) {
            dweight.at(j, i) += g * x[i];
            dx[i] += g * weight.at(j, i);
        }
    }
    return dx;
}

double gelu_scalar(double x) {
    return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
}

double gelu_grad_scalar(double x) {
    double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    return cdf + x * pdf;
}

Tensor gelu(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.values()) v = gelu_scalar(v);
    return out;
}

Tensor gelu_backward(const Tensor& x, const Tensor& dout) {
    if (!x.same_dims(dout)) throw ShapeError("gelu_backward: dims mismatch");
    Tensor dx = x;
    for (std::size_t i = 0; i < dx.numel(); ++i)
        dx[i] = dout[i] * gelu_grad_scalar(x[i]);
    return dx;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        z += out[i];
    }
    for (double& v : out) v /= z;
    return out;
}

Tensor softmax(const Tensor& logits) {
    return Tensor::vector(softmax(logits.values()));
}

std::vector<double> log_softmax(const std::vector<double>& logits) {
    double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - m);
    double lse = m + std::log(z);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
    return out;
}

std::vector<double> softmax_backward_row(const std::vector<double>& probs,
                                         const std::vector<double>& dout) {
    double dot = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) dot += probs[i] * dout[i];
    std::vector<double> dlogits(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i)
        dlogits[i] = probs[i] * (dout[i] - dot);
    return dlogits;
}

MaxpoolResult maxpool_time(const Tensor& H) {
    if (H.rank() != 2 || H.rows() == 0)
        throw ShapeError("maxpool_time: empty sequence");
    std::size_t T = H.rows(), d = H.cols();
    MaxpoolResult res;
    res.pooled = Tensor({d});
    res.argmax.assign(d, 0);
    for (std::size_t j = 0; j < d; ++j) {
        double best = H.at(0, j);
        std::size_t best_t = 0;
        for (std::size_t t = 1; t < T; ++t) {
            if (H.at(t, j) > best) {  // strict: ties keep the earliest frame
                best = H.at(t, j);
                best_t = t;
            }
        }
        res.pooled[j] = best;
        res.argmax[j] = best_t;
    }
    return res;
}

void maxpool_time_backward(const MaxpoolResult& res, const Tensor& dpooled,
                           Tensor& dH) {
    for (std::size_t j = 0; j < res.argmax.size(); ++j)
        dH.at(res.argmax[j], j) += dpooled[j];
}

CrossEntropyResult cross_entropy(const std::vector<double>& logits,
                                 std::size_t label) {
    if (label >= logits.size())
        throw std::invalid_argument("cross_entropy: label out of range");
    std::vector<double> lp = log_softmax(logits);
    CrossEntropyResult res;
    res.loss = -lp[label];
    res.dlogits.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i)
        res.dlogits[i] = std::exp(lp[i]);
    res.dlogits[label] -= 1.0;
    return res;
}

void adamw_step(ParamStore& store, const AdamWConfig& cfg) {
    for (auto& e : store.entries()) {
        if (!e.grad.same_dims(e.value))
            throw StateError("adamw_step: gradient dims mismatch for " + e.name);
        if (!e.trainable) continue;
        e.step += 1;
        double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(e.step));
        double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(e.step));
        for (std::size_t i = 0; i < e.value.numel(); ++i) {
            double g = e.grad[i];
            e.moment1[i] = cfg.beta1 * e.moment1[i] + (1.0 - cfg.beta1) * g;
            e.moment2[i] = cfg.beta2 * e.moment2[i] + (1.0 - cfg.beta2) * g * g;
            double mhat = e.moment1[i] / bc1;
            double vhat = e.moment2[i] / bc2;
            e.value[i] *= 1.0 - cfg.lr * cfg.weight_decay;
            e.value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

double clip_grad_norm(ParamStore& store, double max_norm) {
    double sq = 0.0;
    for (auto& e : store.entries()) {
        if (!e.trainable) continue;
        for (double g : e.grad.values()) sq += g * g;
    }
    double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        double scale = max_norm / norm;
        for (auto& e : store.entries()) {
            if (!e.trainable) continue;
            for (double& g : e.grad.values()) g *= scale;
        }
    }
    return norm;
}

void init_params(ParamStore& store, const std::vector<LinearSpec>& specs,
                 std::uint64_t seed) {
    Rng rng(seed);
    for (const auto& s : specs) {
        if (s.fan_in == 0 || s.fan_out == 0)
            throw std::invalid_argument("init_params: layer sizes must be positive");
        std::vector<std::size_t> wdims = s.weight_dims;
        if (wdims.empty()) wdims = {s.fan_out, s.fan_in};
        double bound = std::sqrt(6.0 / static_cast<double>(s.fan_in + s.fan_out));
        Tensor w(wdims);
        for (double& v : w.values()) v = rng.uniform(-bound, bound);
        store.add(s.name + ".weight", std::move(w));
        store.add(s.name + ".bias", Tensor({s.fan_out}));
    }
}

double finite_diff_check(const std::function<double(ParamStore&)>& loss_fn,
                         ParamStore& store, double h, std::size_t subsample,
                         std::uint64_t seed) {
    struct Coord {
        std::size_t entry;
        std::size_t index;
    };
    std::vector<Coord> coords;
    for (std::size_t e = 0; e < store.entries().size(); ++e)
        for (std::size_t i = 0; i < store.entries()[e].value.numel(); ++i)
            coords.push_back({e, i});
    if (subsample > 0 && subsample < coords.size()) {
        Rng rng(seed);
        rng.shuffle(coords);
        coords.resize(subsample);
    }
    double max_rel = 0.0;
    for (const auto& c : coords) {
        double& theta = store.entries()[c.entry].value[c.index];
        double analytic = store.entries()[c.entry].grad[c.index];
        double orig = theta;
        theta = orig + h;
        double fp = loss_fn(store);
        theta = orig - h;
        double fm = loss_fn(store);
        theta = orig;
        double numeric = (fp - fm) / (2.0 * h);
        double denom = std::max(1e-8, std::abs(analytic) + std::abs(numeric));
        max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
    }
    return max_rel;
}

}  // namespace ctcslu::nn
