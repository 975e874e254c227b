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

#include "ctcslu/ctc.hpp"
#include "ctcslu/nn.hpp"
#include "ctcslu/tensor.hpp"

namespace ctcslu {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class TapMode { kHidden, kLogits, kProbabilities };

TapMode tap_mode_from_string(const std::string& s);
std::string to_string(TapMode mode);

struct ConvLayerSpec {
    std::size_t kernel = 3;
    std::size_t stride = 1;
    std::size_t out_channels = 32;
};

struct ModelConfig {
    std::size_t feature_dim = 16;
    std::vector<ConvLayerSpec> conv_layers = {{3, 1, 64}, {3, 2, 64}, {3, 1, 64}};
    std::size_t vocab_size = 20;
    std::size_t utt_hidden = 128;
    std::size_t num_labels = 9;
    TapMode tap = TapMode::kLogits;
    bool tap_detach = false;
    // Alternative utterance encoder: two temporal convs over the tap before
    // the maxpool + FC stack.
    bool cnn_utterance_encoder = false;
    std::size_t cnn_channels = 32;

    std::size_t num_classes() const { return vocab_size + 1; }  // + blank
    std::size_t encoder_hidden() const {
        return conv_layers.empty() ? feature_dim : conv_layers.back().out_channels;
    }
    std::size_t subsample_factor() const {
        std::size_t f = 1;
        for (const auto& l : conv_layers) f *= l.stride;
        return f;
    }
    std::size_t tap_dim() const {
        return tap == TapMode::kHidden ? encoder_hidden() : num_classes();
    }
    /// Output length after the conv stack for an input of length T.
    std::size_t output_length(std::size_t T) const;

    std::uint64_t arch_hash() const;
};

struct ForwardTrace {
    // Acoustic encoder intermediates, one per conv layer.
    std::vector<Tensor> conv_pre;   // pre-activation [T_l x C_l]
    std::vector<Tensor> conv_act;   // gelu(pre)
    Tensor H;                       // alias of last conv_act, [T' x h]
    Tensor frame_logits;            // [T' x (V+1)]
    Tensor tap_probs;               // filled only for the probabilities tap
    Tensor tap_input;               // H^u, [T' x d_u]
    // CNN utterance encoder intermediates (empty otherwise).
    std::vector<Tensor> utt_conv_pre;
    std::vector<Tensor> utt_conv_act;
    nn::MaxpoolResult pool;
    Tensor fc1_pre, fc1_act;
    Tensor fc2_pre, fc2_act;  // fc2_act is h^utt
    std::vector<double> label_logits;  // [K]
};

struct LossWeights {
    double alpha_ctc = 0.5;
    double alpha_slu = 1.0;
};

struct BatchItem {
    const Tensor* frames = nullptr;  // [T x d]
    Transcript transcript;
    std::size_t label = 0;
};

struct BatchLossResult {
    double total = 0.0;
    double ctc_mean = 0.0;
    double slu_mean = 0.0;
    std::size_t ctc_skipped = 0;  // infeasible items excluded from the CTC mean
};

class SluModel {
public:
    SluModel(ModelConfig cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    ForwardTrace forward(const Tensor& frames) const;

    /// Backward from upstream gradients on the label logits and (additively)
    /// on the frame logits. Accumulates into the store's gradients and
    /// returns the gradient w.r.t. the input frames.
    Tensor backward(const Tensor& frames, const ForwardTrace& trace,
                    const std::vector<double>& d_label_logits,
                    const Tensor& d_frame_logits_extra);

    /// Joint loss over a batch; accumulates gradients when requested.
    /// CTC-infeasible items are skipped and counted. Throws StateError if
    /// every item is infeasible while alpha_slu == 0.
    BatchLossResult joint_loss(const std::vector<BatchItem>& batch,
                               const LossWeights& weights, bool accumulate_grads);

    /// Parameter count of the utterance-encoder + label-classifier head.
    std::size_t head_param_count() const;

private:
    Tensor conv_forward(const Tensor& input, const std::string& name,
                        const ConvLayerSpec& spec, Tensor& pre) const;
    Tensor conv_backward(const Tensor& input, const Tensor& pre,
                         const std::string& name, const ConvLayerSpec& spec,
                         const Tensor& dact);

    ModelConfig cfg_;
    ParamStore params_;
};

}  // namespace ctcslu
