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

#include "ctcslu/metrics.hpp"

namespace ctcslu::metrics {

double error_rate(const std::vector<EditCounts>& counts) {
    std::size_t errors = 0, ref_len = 0;
    for (const auto& c : counts) {
        errors += c.total();
        ref_len += c.reference_length;
    }
    if (ref_len == 0)
        throw std::invalid_argument("error_rate: zero total reference length");
    return static_cast<double>(errors) / static_cast<double>(ref_len);
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

double cer(const std::vector<std::pair<std::vector<std::string>,
                                       std::vector<std::string>>>& pairs) {
    std::vector<EditCounts> counts;
    counts.reserve(pairs.size());
    for (const auto& [ref, hyp] : pairs)
        counts.push_back(edit_distance(join_tokens(ref), join_tokens(hyp)));
    return error_rate(counts);
}

}  // namespace ctcslu::metrics
