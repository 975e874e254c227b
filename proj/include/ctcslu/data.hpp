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
#include <string>
#include <vector>

#include "ctcslu/checkpoint.hpp"  // DataError
#include "ctcslu/ctc.hpp"
#include "ctcslu/tensor.hpp"

namespace ctcslu {

// Synthetic corpus: token sequences rendered to noisy prototype frames.
// The intent label is an exact function of the transcript: the action group
// of the first token combined with the scenario group of the last token.
// Sampling keeps those roles separable: first tokens come from an
// action-word pool, last tokens from a scenario-word pool, interior tokens
// from the remaining filler words.
struct CorpusConfig {
    std::size_t vocab_size = 20;
    std::size_t feature_dim = 16;
    std::size_t utt_min_tokens = 2;
    std::size_t utt_max_tokens = 8;
    std::size_t frames_min = 4;
    std::size_t frames_max = 8;
    // High enough that intent classification genuinely needs the
    // CTC-supervised trunk; label-only training degrades visibly here.
    double noise_sigma = 0.45;
    std::size_t num_actions = 3;
    std::size_t num_scenarios = 3;
    std::size_t action_pool = 6;    // tokens [0, action_pool) may start
    std::size_t scenario_pool = 6;  // tokens [action_pool, action_pool+scenario_pool) may end
    bool silence_gaps = false;      // blank-prototype frames between tokens
    std::size_t train_size = 2000;
    std::size_t valid_size = 200;
    std::size_t test_size = 500;
    std::uint64_t seed = 1234;

    std::size_t num_intents() const { return num_actions * num_scenarios; }
    std::size_t action_group(std::size_t token) const { return token % num_actions; }
    std::size_t scenario_group(std::size_t token) const { return token % num_scenarios; }

    std::string token_name(std::size_t id) const;
    std::string intent_name(std::size_t id) const;

    void validate() const;  // throws ConfigError
};

struct Utterance {
    std::string id;
    Tensor frames;  // [T x d]
    Transcript transcript;
    std::size_t label = 0;
};

/// intent = action_group(first) * num_scenarios + scenario_group(last)
std::size_t label_of(const Transcript& transcript, const CorpusConfig& cfg);

/// Fixed random unit vector per token (id vocab_size = blank when gaps are on).
std::vector<double> token_prototype(std::size_t token, const CorpusConfig& cfg);

Tensor render_utterance(const Transcript& transcript, const CorpusConfig& cfg,
                        std::uint64_t utterance_seed);

/// Draws one transcript + frames for the given (split, index) slot.
Utterance make_utterance(const CorpusConfig& cfg, const std::string& split,
                         std::size_t index);

struct SplitFiles {
    std::string train, valid, test, vocab, labels, manifest;
};

SplitFiles corpus_paths(const std::string& dir);

/// Writes train/valid/test JSONL splits plus vocab, label map and manifest.
/// Byte-identical for identical configs.
void generate_corpus(const CorpusConfig& cfg, const std::string& dir);

std::vector<Utterance> read_split(const std::string& path, const CorpusConfig& cfg);

/// Reads the corpus config echoed into the manifest.
CorpusConfig read_manifest_config(const std::string& dir);

}  // namespace ctcslu
