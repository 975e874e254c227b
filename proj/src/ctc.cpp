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

#include "ctcslu/ctc.hpp"

#include <cmath>

#include "ctcslu/nn.hpp"

namespace ctcslu::ctc {

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    if (a < b) std::swap(a, b);
    return a + std::log1p(std::exp(b - a));
}

std::vector<std::size_t> expand_target(const Transcript& transcript,
                                       std::size_t blank) {
    std::vector<std::size_t> ext;
    ext.reserve(2 * transcript.size() + 1);
    ext.push_back(blank);
    for (std::size_t tok : transcript) {
        ext.push_back(tok);
        ext.push_back(blank);
    }
    return ext;
}

CtcTable ctc_log_likelihood(const Tensor& frame_log_probs,
                            const Transcript& transcript) {
    std::size_t T = frame_log_probs.rows();
    std::size_t C = frame_log_probs.cols();
    std::size_t blank = blank_id(C);
    for (std::size_t tok : transcript)
        if (tok >= blank)
            throw std::invalid_argument("ctc: token id out of vocabulary");

    std::vector<std::size_t> ext = expand_target(transcript, blank);
    std::size_t S = ext.size();

    CtcTable table;
    table.log_alpha = Tensor({T, S});
    table.log_beta = Tensor({T, S});
    table.log_alpha.fill(kNegInf);
    table.log_beta.fill(kNegInf);

    auto& la = table.log_alpha;
    la.at(0, 0) = frame_log_probs.at(0, ext[0]);
    if (S > 1) la.at(0, 1) = frame_log_probs.at(0, ext[1]);
    for (std::size_t t = 1; t < T; ++t) {
        for (std::size_t s = 0; s < S; ++s) {
            double acc = la.at(t - 1, s);
            if (s >= 1) acc = log_add(acc, la.at(t - 1, s - 1));
            // The skip transition is allowed only between distinct non-blank
            // symbols; ext[s-2] == ext[s] covers both the blank and the
            // repeated-token case since blanks alternate.
            if (s >= 2 && ext[s] != blank && ext[s] != ext[s - 2])
                acc = log_add(acc, la.at(t - 1, s - 2));
            la.at(t, s) = acc + frame_log_probs.at(t, ext[s]);
        }
    }

    double ll = la.at(T - 1, S - 1);
    if (S > 1) ll = log_add(ll, la.at(T - 1, S - 2));
    table.log_likelihood = ll;
    table.infeasible = !(ll > kNegInf);
    if (table.infeasible) {
        table.log_likelihood = kNegInf;
        return table;
    }

    // beta[t][s] excludes the emission at frame t, so alpha + beta sums to
    // the log-likelihood at every frame.
    auto& lb = table.log_beta;
    lb.at(T - 1, S - 1) = 0.0;
    if (S > 1) lb.at(T - 1, S - 2) = 0.0;
    for (std::size_t t = T - 1; t-- > 0;) {
        for (std::size_t s = 0; s < S; ++s) {
            double acc = lb.at(t + 1, s) + frame_log_probs.at(t + 1, ext[s]);
            if (s + 1 < S)
                acc = log_add(acc, lb.at(t + 1, s + 1) +
                                       frame_log_probs.at(t + 1, ext[s + 1]));
            if (s + 2 < S && ext[s + 2] != blank && ext[s + 2] != ext[s])
                acc = log_add(acc, lb.at(t + 1, s + 2) +
                                       frame_log_probs.at(t + 1, ext[s + 2]));
            lb.at(t, s) = acc;
        }
    }
    return table;
}

Tensor ctc_grad(const Tensor& frame_log_probs, const Transcript& transcript,
                const CtcTable& table) {
    if (table.infeasible)
        throw StateError("ctc_grad: infeasible table");
    std::size_t T = frame_log_probs.rows();
    std::size_t C = frame_log_probs.cols();
    std::size_t blank = blank_id(C);
    std::vector<std::size_t> ext = expand_target(transcript, blank);
    std::size_t S = ext.size();

    Tensor grad({T, C});
    std::vector<double> log_gamma(C);
    for (std::size_t t = 0; t < T; ++t) {
        std::fill(log_gamma.begin(), log_gamma.end(), kNegInf);
        for (std::size_t s = 0; s < S; ++s) {
            double v = table.log_alpha.at(t, s) + table.log_beta.at(t, s);
            log_gamma[ext[s]] = log_add(log_gamma[ext[s]], v);
        }
        for (std::size_t k = 0; k < C; ++k) {
            double gamma = log_gamma[k] == kNegInf
                               ? 0.0
                               : std::exp(log_gamma[k] - table.log_likelihood);
            grad.at(t, k) = std::exp(frame_log_probs.at(t, k)) - gamma;
        }
    }
    return grad;
}

double ctc_brute_force(const Tensor& frame_log_probs,
                       const Transcript& transcript) {
    std::size_t T = frame_log_probs.rows();
    std::size_t C = frame_log_probs.cols();
    double count = std::pow(static_cast<double>(C), static_cast<double>(T));
    if (count > 1e7) throw SizeError("ctc_brute_force: instance too large");
    std::size_t blank = blank_id(C);

    std::vector<std::size_t> alignment(T, 0);
    double total = 0.0;
    while (true) {
        if (collapse(alignment, blank) == transcript) {
            double p = 1.0;
            for (std::size_t t = 0; t < T; ++t)
                p *= std::exp(frame_log_probs.at(t, alignment[t]));
            total += p;
        }
        // odometer over alignments
        std::size_t i = 0;
        while (i < T && ++alignment[i] == C) {
            alignment[i] = 0;
            ++i;
        }
        if (i == T) break;
    }
    return total;
}

Transcript collapse(const std::vector<std::size_t>& alignment, std::size_t blank) {
    Transcript out;
    std::size_t prev = blank + 1;  // sentinel unequal to anything emitted
    bool first = true;
    for (std::size_t a : alignment) {
        if (!first && a == prev) continue;
        first = false;
        prev = a;
        if (a != blank) out.push_back(a);
    }
    return out;
}

Transcript greedy_decode(const Tensor& frame_logits) {
    std::size_t T = frame_logits.rows();
    std::size_t C = frame_logits.cols();
    std::vector<std::size_t> path(T);
    for (std::size_t t = 0; t < T; ++t) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < C; ++k)
            if (frame_logits.at(t, k) > frame_logits.at(t, best)) best = k;
        path[t] = best;
    }
    return collapse(path, blank_id(C));
}

}  // namespace ctcslu::ctc
