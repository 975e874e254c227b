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
#include <stdexcept>
#include <string>
#include <vector>

namespace ctcslu::metrics {

struct EditCounts {
    std::size_t substitutions = 0;
    std::size_t deletions = 0;
    std::size_t insertions = 0;
    std::size_t reference_length = 0;

    std::size_t total() const { return substitutions + deletions + insertions; }
};

/// Minimal unit-cost S+D+I alignment. Among minimal alignments, fewer
/// insertions win, then fewer deletions, so the counts are deterministic.
template <typename Seq>
EditCounts edit_distance(const Seq& reference, const Seq& hypothesis) {
    std::size_t m = reference.size(), n = hypothesis.size();
    struct Cell {
        std::size_t s = 0, d = 0, ins = 0;
        std::size_t total() const { return s + d + ins; }
        bool better(const Cell& o) const {
            if (total() != o.total()) return total() < o.total();
            if (ins != o.ins) return ins < o.ins;
            return d < o.d;
        }
    };
    std::vector<Cell> prev(n + 1), cur(n + 1);
    for (std::size_t j = 1; j <= n; ++j) prev[j].ins = j;
    for (std::size_t i = 1; i <= m; ++i) {
        cur[0] = Cell{0, i, 0};
        for (std::size_t j = 1; j <= n; ++j) {
            Cell sub = prev[j - 1];
            if (!(reference[i - 1] == hypothesis[j - 1])) sub.s += 1;
            Cell del = prev[j];
            del.d += 1;
            Cell ins = cur[j - 1];
            ins.ins += 1;
            Cell best = sub;
            if (del.better(best)) best = del;
            if (ins.better(best)) best = ins;
            cur[j] = best;
        }
        std::swap(prev, cur);
    }
    EditCounts out;
    out.substitutions = prev[n].s;
    out.deletions = prev[n].d;
    out.insertions = prev[n].ins;
    out.reference_length = m;
    return out;
}

/// Pooled over the corpus: (sum S + D + I) / (sum reference lengths).
double error_rate(const std::vector<EditCounts>& counts);

template <typename Seq>
double wer(const std::vector<std::pair<Seq, Seq>>& pairs) {
    std::vector<EditCounts> counts;
    counts.reserve(pairs.size());
    for (const auto& [ref, hyp] : pairs) counts.push_back(edit_distance(ref, hyp));
    return error_rate(counts);
}

/// Character-level rate over space-joined token strings.
double cer(const std::vector<std::pair<std::vector<std::string>,
                                       std::vector<std::string>>>& pairs);

std::string join_tokens(const std::vector<std::string>& tokens);

template <typename T>
double accuracy(const std::vector<T>& predictions, const std::vector<T>& labels) {
    if (predictions.empty() || predictions.size() != labels.size())
        throw std::invalid_argument("accuracy: empty or mismatched inputs");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

}  // namespace ctcslu::metrics
