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

#include "ctcslu/model.hpp"

#include <cmath>
#include <sstream>

#include "ctcslu/rng.hpp"

namespace ctcslu {

TapMode tap_mode_from_string(const std::string& s) {
    if (s == "hidden") return TapMode::kHidden;
    if (s == "logits") return TapMode::kLogits;
    if (s == "probabilities") return TapMode::kProbabilities;
    throw ConfigError("unknown tap mode: " + s);
}

std::string to_string(TapMode mode) {
    switch (mode) {
        case TapMode::kHidden: return "hidden";
        case TapMode::kLogits: return "logits";
        case TapMode::kProbabilities: return "probabilities";
    }
    throw ConfigError("invalid tap mode value");
}

std::size_t ModelConfig::output_length(std::size_t T) const {
    std::size_t len = T;
    for (const auto& l : conv_layers) len = (len + l.stride - 1) / l.stride;
    return len;
}

std::uint64_t ModelConfig::arch_hash() const {
    std::ostringstream os;
    os << feature_dim << '|' << vocab_size << '|' << utt_hidden << '|'
       << num_labels << '|' << to_string(tap) << '|' << tap_detach << '|'
       << cnn_utterance_encoder << '|' << cnn_channels;
    for (const auto& l : conv_layers)
        os << '|' << l.kernel << ',' << l.stride << ',' << l.out_channels;
    return fnv1a64(os.str());
}

SluModel::SluModel(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    if (cfg_.feature_dim == 0 || cfg_.vocab_size == 0 || cfg_.num_labels == 0 ||
        cfg_.utt_hidden == 0)
        throw ConfigError("model dimensions must be positive");
    for (const auto& l : cfg_.conv_layers)
        if (l.stride < 1 || l.kernel < 1 || l.out_channels < 1)
            throw ConfigError("conv layer spec must be positive");

    std::vector<nn::LinearSpec> specs;
    std::size_t in_ch = cfg_.feature_dim;
    for (std::size_t l = 0; l < cfg_.conv_layers.size(); ++l) {
        const auto& c = cfg_.conv_layers[l];
        specs.push_back({"enc.conv" + std::to_string(l), c.out_channels,
                         in_ch * c.kernel, {c.out_channels, in_ch, c.kernel}});
        in_ch = c.out_channels;
    }
    specs.push_back({"frame", cfg_.num_classes(), cfg_.encoder_hidden(), {}});

    std::size_t pool_dim = cfg_.tap_dim();
    if (cfg_.cnn_utterance_encoder) {
        specs.push_back({"utt.conv0", cfg_.cnn_channels, cfg_.tap_dim() * 3,
                         {cfg_.cnn_channels, cfg_.tap_dim(), 3}});
        specs.push_back({"utt.conv1", cfg_.cnn_channels, cfg_.cnn_channels * 3,
                         {cfg_.cnn_channels, cfg_.cnn_channels, 3}});
        pool_dim = cfg_.cnn_channels;
    }
    specs.push_back({"utt.fc1", cfg_.utt_hidden, pool_dim, {}});
    specs.push_back({"utt.fc2", cfg_.utt_hidden, cfg_.utt_hidden, {}});
    specs.push_back({"cls", cfg_.num_labels, cfg_.utt_hidden, {}});

    nn::init_params(params_, specs, seed);
}

Tensor SluModel::conv_forward(const Tensor& input, const std::string& name,
                              const ConvLayerSpec& spec, Tensor& pre) const {
    std::size_t T_in = input.rows();
    std::size_t C_in = input.cols();
    std::size_t T_out = (T_in + spec.stride - 1) / spec.stride;
    const Tensor& w = params_.value(name + ".weight");
    const Tensor& b = params_.value(name + ".bias");
    pre = Tensor({T_out, spec.out_channels});
    // Right zero-padding of kernel-1 frames, so T_out depends only on T_in
    // and the stride.
    for (std::size_t t = 0; t < T_out; ++t) {
        std::size_t start = t * spec.stride;
        for (std::size_t oc = 0; oc < spec.out_channels; ++oc) {
            double acc = b[oc];
            for (std::size_t j = 0; j < spec.kernel; ++j) {
                std::size_t ti = start + j;
                if (ti >= T_in) break;
                for (std::size_t ic = 0; ic < C_in; ++ic)
                    acc += w.at(oc, ic, j) * input.at(ti, ic);
            }
            pre.at(t, oc) = acc;
        }
    }
    return nn::gelu(pre);
}

Tensor SluModel::conv_backward(const Tensor& input, const Tensor& pre,
                               const std::string& name, const ConvLayerSpec& spec,
                               const Tensor& dact) {
    std::size_t T_in = input.rows();
    std::size_t C_in = input.cols();
    std::size_t T_out = pre.rows();
    const Tensor& w = params_.value(name + ".weight");
    Tensor& dw = params_.grad(name + ".weight");
    Tensor& db = params_.grad(name + ".bias");
    Tensor dpre = nn::gelu_backward(pre, dact);
    Tensor din({T_in, C_in});
    for (std::size_t t = 0; t < T_out; ++t) {
        std::size_t start = t * spec.stride;
        for (std::size_t oc = 0; oc < spec.out_channels; ++oc) {
            double g = dpre.at(t, oc);
            db[oc] += g;
            for (std::size_t j = 0; j < spec.kernel; ++j) {
                std::size_t ti = start + j;
                if (ti >= T_in) break;
                for (std::size_t ic = 0; ic < C_in; ++ic) {
                    dw.at(oc, ic, j) += g * input.at(ti, ic);
                    din.at(ti, ic) += g * w.at(oc, ic, j);
                }
            }
        }
    }
    return din;
}

ForwardTrace SluModel::forward(const Tensor& frames) const {
    if (frames.rank() != 2 || frames.cols() != cfg_.feature_dim)
        throw ShapeError("forward: frame matrix does not match feature_dim");
    if (frames.rows() == 0 || cfg_.output_length(frames.rows()) == 0)
        throw ShapeError("forward: utterance too short after subsampling");

    ForwardTrace tr;
    const Tensor* cur = &frames;
    for (std::size_t l = 0; l < cfg_.conv_layers.size(); ++l) {
        Tensor pre;
        Tensor act = conv_forward(*cur, "enc.conv" + std::to_string(l),
                                  cfg_.conv_layers[l], pre);
        tr.conv_pre.push_back(std::move(pre));
        tr.conv_act.push_back(std::move(act));
        cur = &tr.conv_act.back();
    }
    tr.H = *cur;

    std::size_t Tp = tr.H.rows();
    std::size_t C = cfg_.num_classes();
    const Tensor& wf = params_.value("frame.weight");
    const Tensor& bf = params_.value("frame.bias");
    tr.frame_logits = Tensor({Tp, C});
    for (std::size_t t = 0; t < Tp; ++t) {
        for (std::size_t k = 0; k < C; ++k) {
            double acc = bf[k];
            for (std::size_t i = 0; i < tr.H.cols(); ++i)
                acc += wf.at(k, i) * tr.H.at(t, i);
            tr.frame_logits.at(t, k) = acc;
        }
    }

    switch (cfg_.tap) {
        case TapMode::kHidden:
            tr.tap_input = tr.H;
            break;
        case TapMode::kLogits:
            tr.tap_input = tr.frame_logits;
            break;
        case TapMode::kProbabilities: {
            tr.tap_probs = Tensor({Tp, C});
            for (std::size_t t = 0; t < Tp; ++t) {
                auto p = nn::softmax(tr.frame_logits.row(t));
                for (std::size_t k = 0; k < C; ++k) tr.tap_probs.at(t, k) = p[k];
            }
            tr.tap_input = tr.tap_probs;
            break;
        }
    }

    const Tensor* seq = &tr.tap_input;
    if (cfg_.cnn_utterance_encoder) {
        for (int l = 0; l < 2; ++l) {
            Tensor pre;
            ConvLayerSpec spec{3, 1, cfg_.cnn_channels};
            Tensor act = conv_forward(*seq, "utt.conv" + std::to_string(l), spec, pre);
            tr.utt_conv_pre.push_back(std::move(pre));
            tr.utt_conv_act.push_back(std::move(act));
            seq = &tr.utt_conv_act.back();
        }
    }

    tr.pool = nn::maxpool_time(*seq);
    tr.fc1_pre = nn::linear_forward(tr.pool.pooled, params_.value("utt.fc1.weight"),
                                    params_.value("utt.fc1.bias"));
    tr.fc1_act = nn::gelu(tr.fc1_pre);
    tr.fc2_pre = nn::linear_forward(tr.fc1_act, params_.value("utt.fc2.weight"),
                                    params_.value("utt.fc2.bias"));
    tr.fc2_act = nn::gelu(tr.fc2_pre);
    Tensor logits = nn::linear_forward(tr.fc2_act, params_.value("cls.weight"),
                                       params_.value("cls.bias"));
    tr.label_logits = logits.values();
    return tr;
}

Tensor SluModel::backward(const Tensor& frames, const ForwardTrace& trace,
                          const std::vector<double>& d_label_logits,
                          const Tensor& d_frame_logits_extra) {
    std::size_t Tp = trace.H.rows();
    std::size_t C = cfg_.num_classes();

    // Label classifier and FC stack.
    Tensor d_fc2_act = nn::linear_backward(
        trace.fc2_act, params_.value("cls.weight"),
        Tensor::vector(d_label_logits), params_.grad("cls.weight"),
        params_.grad("cls.bias"));
    Tensor d_fc2_pre = nn::gelu_backward(trace.fc2_pre, d_fc2_act);
    Tensor d_fc1_act = nn::linear_backward(
        trace.fc1_act, params_.value("utt.fc2.weight"), d_fc2_pre,
        params_.grad("utt.fc2.weight"), params_.grad("utt.fc2.bias"));
    Tensor d_fc1_pre = nn::gelu_backward(trace.fc1_pre, d_fc1_act);
    Tensor d_pool = nn::linear_backward(
        trace.pool.pooled, params_.value("utt.fc1.weight"), d_fc1_pre,
        params_.grad("utt.fc1.weight"), params_.grad("utt.fc1.bias"));

    // Route through the pooled sequence.
    const Tensor& pooled_seq = cfg_.cnn_utterance_encoder
                                   ? trace.utt_conv_act.back()
                                   : trace.tap_input;
    Tensor d_seq({pooled_seq.rows(), pooled_seq.cols()});
    nn::maxpool_time_backward(trace.pool, d_pool, d_seq);

    Tensor d_tap;
    if (cfg_.cnn_utterance_encoder) {
        Tensor d = std::move(d_seq);
        for (int l = 1; l >= 0; --l) {
            const Tensor& in = l == 0 ? trace.tap_input : trace.utt_conv_act[0];
            ConvLayerSpec spec{3, 1, cfg_.cnn_channels};
            d = conv_backward(in, trace.utt_conv_pre[l],
                              "utt.conv" + std::to_string(l), spec, d);
        }
        d_tap = std::move(d);
    } else {
        d_tap = std::move(d_seq);
    }

    Tensor d_frame_logits = d_frame_logits_extra;
    if (d_frame_logits.numel() == 0) d_frame_logits = Tensor({Tp, C});
    Tensor dH({Tp, trace.H.cols()});

    switch (cfg_.tap) {
        case TapMode::kHidden:
            for (std::size_t i = 0; i < dH.numel(); ++i) dH[i] += d_tap[i];
            break;
        case TapMode::kLogits:
            for (std::size_t i = 0; i < d_frame_logits.numel(); ++i)
                d_frame_logits[i] += d_tap[i];
            break;
        case TapMode::kProbabilities:
            if (!cfg_.tap_detach) {
                for (std::size_t t = 0; t < Tp; ++t) {
                    auto d = nn::softmax_backward_row(trace.tap_probs.row(t),
                                                      d_tap.row(t));
                    for (std::size_t k = 0; k < C; ++k)
                        d_frame_logits.at(t, k) += d[k];
                }
            }
            break;
    }

    // Shared frame classifier.
    const Tensor& wf = params_.value("frame.weight");
    Tensor& dwf = params_.grad("frame.weight");
    Tensor& dbf = params_.grad("frame.bias");
    std::size_t h = trace.H.cols();
    for (std::size_t t = 0; t < Tp; ++t) {
        for (std::size_t k = 0; k < C; ++k) {
            double g = d_frame_logits.at(t, k);
            if (g == 0.0) continue;
            dbf[k] += g;
            for (std::size_t i = 0; i < h; ++i) {
                dwf.at(k, i) += g * trace.H.at(t, i);
                dH.at(t, i) += g * wf.at(k, i);
            }
        }
    }

    // Acoustic encoder stack.
    Tensor d = std::move(dH);
    for (std::size_t l = cfg_.conv_layers.size(); l-- > 0;) {
        const Tensor& in = l == 0 ? frames : trace.conv_act[l - 1];
        d = conv_backward(in, trace.conv_pre[l], "enc.conv" + std::to_string(l),
                          cfg_.conv_layers[l], d);
    }
    return d;
}

BatchLossResult SluModel::joint_loss(const std::vector<BatchItem>& batch,
                                     const LossWeights& weights,
                                     bool accumulate_grads) {
    if (batch.empty()) throw std::invalid_argument("joint_loss: empty batch");

    // Feasibility is a pure function of lengths, so the CTC denominator is
    // known before any forward pass.
    std::size_t feasible = 0;
    std::vector<bool> ok(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        std::size_t Tp = cfg_.output_length(batch[i].frames->rows());
        std::size_t repeats = 0;
        const Transcript& w = batch[i].transcript;
        for (std::size_t j = 1; j < w.size(); ++j)
            if (w[j] == w[j - 1]) ++repeats;
        ok[i] = Tp >= w.size() + repeats;
        if (ok[i]) ++feasible;
    }
    if (feasible == 0 && weights.alpha_slu == 0.0)
        throw StateError("joint_loss: degenerate batch, all items CTC-infeasible");

    BatchLossResult res;
    res.ctc_skipped = batch.size() - feasible;
    double B = static_cast<double>(batch.size());
    double F = static_cast<double>(feasible);

    for (std::size_t i = 0; i < batch.size(); ++i) {
        const BatchItem& item = batch[i];
        ForwardTrace tr = forward(*item.frames);

        auto ce = nn::cross_entropy(tr.label_logits, item.label);
        res.slu_mean += ce.loss / B;

        Tensor d_frame;
        if (ok[i]) {
            std::size_t Tp = tr.frame_logits.rows();
            std::size_t C = cfg_.num_classes();
            Tensor lp({Tp, C});
            for (std::size_t t = 0; t < Tp; ++t) {
                auto row = nn::log_softmax(tr.frame_logits.row(t));
                for (std::size_t k = 0; k < C; ++k) lp.at(t, k) = row[k];
            }
            auto table = ctc::ctc_log_likelihood(lp, item.transcript);
            res.ctc_mean += -table.log_likelihood / F;
            if (accumulate_grads && weights.alpha_ctc != 0.0) {
                d_frame = ctc::ctc_grad(lp, item.transcript, table);
                double s = weights.alpha_ctc / F;
                for (double& v : d_frame.values()) v *= s;
            }
        }

        if (accumulate_grads) {
            std::vector<double> d_label = ce.dlogits;
            double s = weights.alpha_slu / B;
            for (double& v : d_label) v *= s;
            backward(*item.frames, tr, d_label, d_frame);
        }
    }
    res.total = weights.alpha_ctc * res.ctc_mean + weights.alpha_slu * res.slu_mean;
    return res;
}

std::size_t SluModel::head_param_count() const {
    std::size_t n = 0;
    for (const auto& e : params_.entries())
        if (e.name.rfind("utt.", 0) == 0 || e.name.rfind("cls.", 0) == 0)
            n += e.value.numel();
    return n;
}

}  // namespace ctcslu
