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

#include "ctcslu/serde.hpp"

namespace ctcslu {

namespace {
template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}
}  // namespace

void to_json(nlohmann::json& j, const CorpusConfig& c) {
    j = nlohmann::json{{"vocab_size", c.vocab_size},
                       {"feature_dim", c.feature_dim},
                       {"utt_min_tokens", c.utt_min_tokens},
                       {"utt_max_tokens", c.utt_max_tokens},
                       {"frames_min", c.frames_min},
                       {"frames_max", c.frames_max},
                       {"noise_sigma", c.noise_sigma},
                       {"num_actions", c.num_actions},
                       {"num_scenarios", c.num_scenarios},
                       {"action_pool", c.action_pool},
                       {"scenario_pool", c.scenario_pool},
                       {"silence_gaps", c.silence_gaps},
                       {"train_size", c.train_size},
                       {"valid_size", c.valid_size},
                       {"test_size", c.test_size},
                       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, CorpusConfig& c) {
    maybe(j, "vocab_size", c.vocab_size);
    maybe(j, "feature_dim", c.feature_dim);
    maybe(j, "utt_min_tokens", c.utt_min_tokens);
    maybe(j, "utt_max_tokens", c.utt_max_tokens);
    maybe(j, "frames_min", c.frames_min);
    maybe(j, "frames_max", c.frames_max);
    maybe(j, "noise_sigma", c.noise_sigma);
    maybe(j, "num_actions", c.num_actions);
    maybe(j, "num_scenarios", c.num_scenarios);
    maybe(j, "action_pool", c.action_pool);
    maybe(j, "scenario_pool", c.scenario_pool);
    maybe(j, "silence_gaps", c.silence_gaps);
    maybe(j, "train_size", c.train_size);
    maybe(j, "valid_size", c.valid_size);
    maybe(j, "test_size", c.test_size);
    maybe(j, "seed", c.seed);
}

void to_json(nlohmann::json& j, const ConvLayerSpec& c) {
    j = nlohmann::json{{"kernel", c.kernel},
                       {"stride", c.stride},
                       {"out_channels", c.out_channels}};
}

void from_json(const nlohmann::json& j, ConvLayerSpec& c) {
    maybe(j, "kernel", c.kernel);
    maybe(j, "stride", c.stride);
    maybe(j, "out_channels", c.out_channels);
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = nlohmann::json{{"feature_dim", c.feature_dim},
                       {"conv_layers", c.conv_layers},
                       {"vocab_size", c.vocab_size},
                       {"utt_hidden", c.utt_hidden},
                       {"num_labels", c.num_labels},
                       {"tap", to_string(c.tap)},
                       {"tap_detach", c.tap_detach},
                       {"cnn_utterance_encoder", c.cnn_utterance_encoder},
                       {"cnn_channels", c.cnn_channels}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
    maybe(j, "feature_dim", c.feature_dim);
    maybe(j, "conv_layers", c.conv_layers);
    maybe(j, "vocab_size", c.vocab_size);
    maybe(j, "utt_hidden", c.utt_hidden);
    maybe(j, "num_labels", c.num_labels);
    if (j.contains("tap"))
        c.tap = tap_mode_from_string(j.at("tap").get<std::string>());
    maybe(j, "tap_detach", c.tap_detach);
    maybe(j, "cnn_utterance_encoder", c.cnn_utterance_encoder);
    maybe(j, "cnn_channels", c.cnn_channels);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"learning_rate", c.learning_rate},
                       {"batch_size", c.batch_size},
                       {"alpha_ctc", c.alpha_ctc},
                       {"alpha_slu", c.alpha_slu},
                       {"asr_patience", c.asr_patience},
                       {"asr_max_epochs", c.asr_max_epochs},
                       {"joint_epochs", c.joint_epochs},
                       {"grad_clip_norm", c.grad_clip_norm},
                       {"seed", c.seed},
                       {"tap", c.tap},
                       {"tap_detach", c.tap_detach},
                       {"ablation", c.ablation},
                       {"lr_schedule", c.lr_schedule}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    maybe(j, "learning_rate", c.learning_rate);
    maybe(j, "batch_size", c.batch_size);
    maybe(j, "alpha_ctc", c.alpha_ctc);
    maybe(j, "alpha_slu", c.alpha_slu);
    maybe(j, "asr_patience", c.asr_patience);
    maybe(j, "asr_max_epochs", c.asr_max_epochs);
    maybe(j, "joint_epochs", c.joint_epochs);
    maybe(j, "grad_clip_norm", c.grad_clip_norm);
    maybe(j, "seed", c.seed);
    maybe(j, "tap", c.tap);
    maybe(j, "tap_detach", c.tap_detach);
    maybe(j, "ablation", c.ablation);
    maybe(j, "lr_schedule", c.lr_schedule);
}

}  // namespace ctcslu
