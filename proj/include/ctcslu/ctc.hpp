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
#include <limits>
#include <vector>

#include "ctcslu/tensor.hpp"

namespace ctcslu {

using Transcript = std::vector<std::size_t>;  // token ids in [0, V)

namespace ctc {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Blank is always the last class index V of a (V+1)-wide frame distribution.
inline std::size_t blank_id(std::size_t num_classes) { return num_classes - 1; }

double log_add(double a, double b);

/// Transcript interleaved with blanks: eps w1 eps w2 ... wU eps (length 2U+1).
/// Blank is encoded as `blank` (pass blank_id of the frame distribution).
std::vector<std::size_t> expand_target(const Transcript& transcript,
                                       std::size_t blank);

/// Forward/backward lattices over the extended target, all in log space.
/// Invariant: logsumexp_s(log_alpha[t][s] + log_beta[t][s]) == log_likelihood
/// at every frame t (for feasible targets).
struct CtcTable {
    Tensor log_alpha;       // [T x S]
    Tensor log_beta;        // [T x S]
    double log_likelihood = kNegInf;
    bool infeasible = false;
};

/// frame_log_probs: [T x (V+1)] rows of normalized log distributions.
/// Infeasible targets (no valid alignment fits in T) come back with
/// log_likelihood = -inf and infeasible = true instead of throwing, so a
/// batch loss can skip the item.
CtcTable ctc_log_likelihood(const Tensor& frame_log_probs,
                            const Transcript& transcript);

/// Gradient of -log p(W|X) w.r.t. the pre-softmax frame logits:
/// softmax(logits)[t,k] - gamma_t(k), with gamma the state posterior.
Tensor ctc_grad(const Tensor& frame_log_probs, const Transcript& transcript,
                const CtcTable& table);

struct SizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Literal alignment-sum: enumerates every length-T alignment, keeps those
/// that collapse to the transcript, sums exact probabilities. Oracle only;
/// refuses instances with (V+1)^T > 10^7.
double ctc_brute_force(const Tensor& frame_log_probs, const Transcript& transcript);

/// Collapse rule: remove repeats, then blanks.
Transcript collapse(const std::vector<std::size_t>& alignment, std::size_t blank);

/// Per-frame argmax (ties to the lowest class index), then collapse.
Transcript greedy_decode(const Tensor& frame_logits);

}  // namespace ctc
}  // namespace ctcslu
