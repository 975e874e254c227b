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

#include "ctcslu/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ctcslu/rng.hpp"

namespace ctcslu {

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string format_fixed(double v, int digits) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

}  // namespace

AblationMode ablation_from_string(const std::string& s) {
    if (s == "full") return AblationMode::kFull;
    if (s == "no_ctc") return AblationMode::kNoCtc;
    if (s == "frozen_encoder") return AblationMode::kFrozenEncoder;
    if (s == "prob_tap") return AblationMode::kProbTap;
    if (s == "hidden_tap") return AblationMode::kHiddenTap;
    if (s == "cnn_encoder") return AblationMode::kCnnEncoder;
    if (s == "cascade") return AblationMode::kCascade;
    throw ConfigError("unknown ablation mode: " + s);
}

std::string to_string(AblationMode m) {
    switch (m) {
        case AblationMode::kFull: return "full";
        case AblationMode::kNoCtc: return "no_ctc";
        case AblationMode::kFrozenEncoder: return "frozen_encoder";
        case AblationMode::kProbTap: return "prob_tap";
        case AblationMode::kHiddenTap: return "hidden_tap";
        case AblationMode::kCnnEncoder: return "cnn_encoder";
        case AblationMode::kCascade: return "cascade";
    }
    throw ConfigError("invalid ablation mode value");
}

const std::vector<AblationMode>& all_ablation_modes() {
    static const std::vector<AblationMode> modes = {
        AblationMode::kCascade,     AblationMode::kNoCtc,
        AblationMode::kFrozenEncoder, AblationMode::kProbTap,
        AblationMode::kCnnEncoder,  AblationMode::kHiddenTap,
        AblationMode::kFull,
    };
    return modes;
}

void TrainConfig::validate() const {
    if (asr_patience < 1) throw ConfigError("train: asr_patience must be >= 1");
    if (joint_epochs < 1) throw ConfigError("train: joint_epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (learning_rate <= 0) throw ConfigError("train: learning_rate must be > 0");
    if (alpha_ctc < 0 || alpha_slu < 0)
        throw ConfigError("train: loss weights must be >= 0");
    if (lr_schedule != "constant")
        throw ConfigError("train: only the constant lr_schedule is supported");
    ablation_from_string(ablation);
    tap_mode_from_string(tap);
}

std::string TrainLog::to_csv() const {
    std::ostringstream os;
    os << "epoch,phase,ctc_loss,slu_loss,valid_acc,valid_wer,seconds\n";
    for (const auto& r : records) {
        os << r.epoch << ',' << r.phase << ',' << format_fixed(r.ctc_loss, 6)
           << ',' << format_fixed(r.slu_loss, 6) << ','
           << format_fixed(r.valid_acc, 6) << ',' << format_fixed(r.valid_wer, 6)
           << ',' << format_fixed(r.seconds, 3) << '\n';
    }
    return os.str();
}

void TrainLog::write_csv(const std::string& path) const {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot write train log: " + path);
    os << to_csv();
}

Dataset load_dataset(const std::string& dir) {
    Dataset data;
    data.corpus = read_manifest_config(dir);
    SplitFiles paths = corpus_paths(dir);
    data.train = read_split(paths.train, data.corpus);
    data.valid = read_split(paths.valid, data.corpus);
    data.test = read_split(paths.test, data.corpus);
    return data;
}

Trainer::Trainer(const Dataset& data, TrainConfig cfg)
    : data_(data), cfg_(std::move(cfg)) {
    cfg_.validate();
    if (data_.train.empty() || data_.valid.empty())
        throw DataError("trainer: train and valid splits must be nonempty");
}

double Trainer::run_epoch(SluModel& model, const LossWeights& weights,
                          std::size_t epoch_index, const std::string& phase_tag,
                          double& ctc_out, double& slu_out, std::size_t& skipped) {
    std::vector<std::size_t> order(data_.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix_seed(cfg_.seed, "epoch-" + phase_tag, epoch_index));
    rng.shuffle(order);

    AdamWConfig opt;
    opt.lr = cfg_.learning_rate;

    double ctc_sum = 0.0, slu_sum = 0.0;
    std::size_t ctc_items = 0, slu_items = 0;
    skipped = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
        std::size_t end = std::min(order.size(), start + cfg_.batch_size);
        std::vector<BatchItem> batch;
        batch.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
            const Utterance& u = data_.train[order[i]];
            batch.push_back({&u.frames, u.transcript, u.label});
        }
        model.params().zero_grad();
        BatchLossResult res = model.joint_loss(batch, weights, true);
        nn::clip_grad_norm(model.params(), cfg_.grad_clip_norm);
        nn::adamw_step(model.params(), opt);

        std::size_t feasible = batch.size() - res.ctc_skipped;
        ctc_sum += res.ctc_mean * static_cast<double>(feasible);
        ctc_items += feasible;
        slu_sum += res.slu_mean * static_cast<double>(batch.size());
        slu_items += batch.size();
        skipped += res.ctc_skipped;
    }
    ctc_out = ctc_items ? ctc_sum / static_cast<double>(ctc_items) : 0.0;
    slu_out = slu_items ? slu_sum / static_cast<double>(slu_items) : 0.0;
    return weights.alpha_ctc * ctc_out + weights.alpha_slu * slu_out;
}

double Trainer::validation_ctc_loss(SluModel& model) const {
    std::vector<BatchItem> batch;
    batch.reserve(data_.valid.size());
    for (const Utterance& u : data_.valid)
        batch.push_back({&u.frames, u.transcript, u.label});
    BatchLossResult res = model.joint_loss(batch, {1.0, 0.0}, false);
    return res.ctc_mean;
}

double Trainer::validation_wer(SluModel& model) const {
    std::vector<metrics::EditCounts> counts;
    counts.reserve(data_.valid.size());
    for (const Utterance& u : data_.valid) {
        ForwardTrace tr = model.forward(u.frames);
        Transcript decoded = ctc::greedy_decode(tr.frame_logits);
        counts.push_back(metrics::edit_distance(u.transcript, decoded));
    }
    return metrics::error_rate(counts);
}

EvalReport Trainer::evaluate(SluModel& model,
                             const std::vector<Utterance>& split) const {
    if (split.empty()) throw DataError("evaluate: empty split");
    std::size_t K = model.config().num_labels;
    EvalReport rep;
    rep.confusion.assign(K, std::vector<std::size_t>(K, 0));
    std::vector<metrics::EditCounts> word_counts;
    std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>
        char_pairs;
    std::size_t hits = 0, err_hits = 0;

    auto names = [&](const Transcript& t) {
        std::vector<std::string> out;
        out.reserve(t.size());
        for (std::size_t id : t) out.push_back(data_.corpus.token_name(id));
        return out;
    };

    for (const Utterance& u : split) {
        ForwardTrace tr = model.forward(u.frames);
        std::size_t pred = 0;
        for (std::size_t k = 1; k < K; ++k)
            if (tr.label_logits[k] > tr.label_logits[pred]) pred = k;
        rep.confusion[u.label][pred] += 1;
        bool correct = pred == u.label;
        if (correct) ++hits;

        Transcript decoded = ctc::greedy_decode(tr.frame_logits);
        word_counts.push_back(metrics::edit_distance(u.transcript, decoded));
        char_pairs.emplace_back(names(u.transcript), names(decoded));
        if (decoded != u.transcript) {
            ++rep.asr_error_utterances;
            if (correct) ++err_hits;
        }
    }
    rep.accuracy = static_cast<double>(hits) / static_cast<double>(split.size());
    rep.wer = metrics::error_rate(word_counts);
    rep.cer = metrics::cer(char_pairs);
    if (rep.asr_error_utterances > 0)
        rep.accuracy_on_asr_errors = static_cast<double>(err_hits) /
                                     static_cast<double>(rep.asr_error_utterances);
    return rep;
}

TrainLog Trainer::train_asr_phase(SluModel& model) {
    TrainLog log;
    LossWeights weights{1.0, 0.0};
    double best_loss = std::numeric_limits<double>::infinity();
    std::vector<Tensor> best_snap = model.params().snapshot();
    std::size_t bad_epochs = 0;

    for (std::size_t epoch = 1; epoch <= cfg_.asr_max_epochs; ++epoch) {
        double t0 = now_seconds();
        EpochRecord rec;
        rec.epoch = epoch;
        rec.phase = "asr";
        std::size_t skipped = 0;
        run_epoch(model, weights, epoch, "asr", rec.ctc_loss, rec.slu_loss, skipped);
        log.ctc_skipped_total += skipped;
        double vloss = validation_ctc_loss(model);
        EvalReport valid_rep = evaluate(model, data_.valid);
        rec.valid_acc = valid_rep.accuracy;
        rec.valid_wer = valid_rep.wer;
        rec.seconds = now_seconds() - t0;
        log.records.push_back(rec);

        if (vloss < best_loss - 1e-6) {
            best_loss = vloss;
            best_snap = model.params().snapshot();
            log.best_epoch = log.records.size() - 1;
            bad_epochs = 0;
        } else {
            ++bad_epochs;
            if (bad_epochs >= cfg_.asr_patience) break;
        }
    }
    model.params().restore(best_snap);
    return log;
}

TrainLog Trainer::train_joint_phase(
    SluModel& model, const LossWeights& weights,
    const std::vector<std::string>& trainable_prefixes) {
    TrainLog log;
    if (!trainable_prefixes.empty())
        model.params().set_trainable_prefixes(trainable_prefixes);

    double best_acc = -1.0;
    std::vector<Tensor> best_snap = model.params().snapshot();

    for (std::size_t epoch = 1; epoch <= cfg_.joint_epochs; ++epoch) {
        double t0 = now_seconds();
        EpochRecord rec;
        rec.epoch = epoch;
        rec.phase = "joint";
        std::size_t skipped = 0;
        run_epoch(model, weights, epoch, "joint", rec.ctc_loss, rec.slu_loss,
                  skipped);
        log.ctc_skipped_total += skipped;
        EvalReport valid_rep = evaluate(model, data_.valid);
        rec.valid_acc = valid_rep.accuracy;
        rec.valid_wer = valid_rep.wer;
        rec.seconds = now_seconds() - t0;
        log.records.push_back(rec);

        if (valid_rep.accuracy > best_acc) {  // strict: earliest epoch on ties
            best_acc = valid_rep.accuracy;
            best_snap = model.params().snapshot();
            log.best_epoch = log.records.size() - 1;
        }
    }
    model.params().restore(best_snap);
    model.params().set_trainable_all(true);
    return log;
}

std::vector<double> CascadeClassifier::logits(const Transcript& decoded) const {
    Tensor counts({vocab_size});
    for (std::size_t tok : decoded)
        if (tok < vocab_size) counts[tok] += 1.0;
    Tensor out = nn::linear_forward(counts, params.value("cls.weight"),
                                    params.value("cls.bias"));
    return out.values();
}

std::size_t CascadeClassifier::predict(const Transcript& decoded) const {
    std::vector<double> l = logits(decoded);
    std::size_t best = 0;
    for (std::size_t k = 1; k < l.size(); ++k)
        if (l[k] > l[best]) best = k;
    return best;
}

CascadeClassifier train_cascade_classifier(
    const std::vector<std::pair<Transcript, std::size_t>>& train_items,
    const std::vector<std::pair<Transcript, std::size_t>>& valid_items,
    std::size_t vocab_size, std::size_t num_labels, const TrainConfig& cfg) {
    CascadeClassifier clf;
    clf.vocab_size = vocab_size;
    clf.num_labels = num_labels;
    nn::init_params(clf.params, {{"cls", num_labels, vocab_size, {}}},
                    mix_seed(cfg.seed, "cascade-init", 0));

    AdamWConfig opt;
    opt.lr = cfg.learning_rate;

    double best_acc = -1.0;
    std::vector<Tensor> best_snap = clf.params.snapshot();
    for (std::size_t epoch = 1; epoch <= cfg.joint_epochs; ++epoch) {
        std::vector<std::size_t> order(train_items.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng(mix_seed(cfg.seed, "cascade-epoch", epoch));
        rng.shuffle(order);

        for (std::size_t start = 0; start < order.size();
             start += cfg.batch_size) {
            std::size_t end = std::min(order.size(), start + cfg.batch_size);
            clf.params.zero_grad();
            double scale = 1.0 / static_cast<double>(end - start);
            for (std::size_t i = start; i < end; ++i) {
                const auto& [decoded, label] = train_items[order[i]];
                Tensor counts({vocab_size});
                for (std::size_t tok : decoded)
                    if (tok < vocab_size) counts[tok] += 1.0;
                Tensor logits = nn::linear_forward(counts,
                                                   clf.params.value("cls.weight"),
                                                   clf.params.value("cls.bias"));
                auto ce = nn::cross_entropy(logits.values(), label);
                Tensor dout = Tensor::vector(ce.dlogits);
                for (double& v : dout.values()) v *= scale;
                nn::linear_backward(counts, clf.params.value("cls.weight"), dout,
                                    clf.params.grad("cls.weight"),
                                    clf.params.grad("cls.bias"));
            }
            nn::clip_grad_norm(clf.params, cfg.grad_clip_norm);
            nn::adamw_step(clf.params, opt);
        }

        std::size_t hits = 0;
        for (const auto& [decoded, label] : valid_items)
            if (clf.predict(decoded) == label) ++hits;
        double acc = static_cast<double>(hits) /
                     static_cast<double>(valid_items.size());
        if (acc > best_acc) {
            best_acc = acc;
            best_snap = clf.params.snapshot();
        }
    }
    clf.params.restore(best_snap);
    return clf;
}

AblationResult run_ablation(AblationMode mode, const Dataset& data,
                            const TrainConfig& base_cfg,
                            const ModelConfig& base_model_cfg) {
    TrainConfig cfg = base_cfg;
    cfg.ablation = to_string(mode);
    ModelConfig mcfg = base_model_cfg;
    mcfg.cnn_utterance_encoder = false;

    switch (mode) {
        case AblationMode::kFull:
            break;  // tap as configured (logits by default)
        case AblationMode::kFrozenEncoder:
        case AblationMode::kCascade:
            mcfg.tap = TapMode::kLogits;
            break;
        case AblationMode::kHiddenTap:
        case AblationMode::kNoCtc:
            mcfg.tap = TapMode::kHidden;
            break;
        case AblationMode::kProbTap:
            mcfg.tap = TapMode::kProbabilities;
            break;
        case AblationMode::kCnnEncoder:
            mcfg.tap = TapMode::kLogits;
            mcfg.cnn_utterance_encoder = true;
            break;
    }

    AblationResult result;
    result.mode = mode;
    result.model = std::make_unique<SluModel>(mcfg, cfg.seed);
    SluModel& model = *result.model;
    Trainer trainer(data, cfg);

    TrainLog asr_log, joint_log;
    if (mode != AblationMode::kNoCtc) asr_log = trainer.train_asr_phase(model);
    result.asr_phase_params = model.params().snapshot();
    double pre_wer = trainer.validation_wer(model);

    LossWeights weights{cfg.alpha_ctc, cfg.alpha_slu};
    switch (mode) {
        case AblationMode::kNoCtc:
            joint_log = trainer.train_joint_phase(model, {0.0, cfg.alpha_slu});
            break;
        case AblationMode::kFrozenEncoder:
            joint_log = trainer.train_joint_phase(model, weights, {"utt.", "cls."});
            break;
        case AblationMode::kCascade:
            break;  // no joint phase; a separate NLU is trained below
        default:
            joint_log = trainer.train_joint_phase(model, weights);
            break;
    }
    double post_wer = trainer.validation_wer(model);

    TrainLog& log = result.log;
    log.records = asr_log.records;
    std::size_t asr_n = log.records.size();
    for (const auto& r : joint_log.records) log.records.push_back(r);
    log.best_epoch = joint_log.records.empty()
                         ? asr_log.best_epoch
                         : asr_n + joint_log.best_epoch;
    log.ctc_skipped_total = asr_log.ctc_skipped_total + joint_log.ctc_skipped_total;
    log.pre_joint_valid_wer = pre_wer;
    log.post_joint_valid_wer = post_wer;

    result.param_count = model.params().num_params();
    result.head_param_count = model.head_param_count();

    if (mode == AblationMode::kCascade) {
        auto decode_split = [&](const std::vector<Utterance>& split) {
            std::vector<std::pair<Transcript, std::size_t>> out;
            out.reserve(split.size());
            for (const Utterance& u : split) {
                ForwardTrace tr = model.forward(u.frames);
                out.emplace_back(ctc::greedy_decode(tr.frame_logits), u.label);
            }
            return out;
        };
        auto dec_train = decode_split(data.train);
        auto dec_valid = decode_split(data.valid);
        CascadeClassifier clf = train_cascade_classifier(
            dec_train, dec_valid, data.corpus.vocab_size,
            mcfg.num_labels, cfg);

        EvalReport rep = trainer.evaluate(model, data.test);  // WER/CER from ASR
        rep.confusion.assign(mcfg.num_labels,
                             std::vector<std::size_t>(mcfg.num_labels, 0));
        std::size_t hits = 0, err_hits = 0, err_utts = 0;
        for (const Utterance& u : data.test) {
            ForwardTrace tr = model.forward(u.frames);
            Transcript decoded = ctc::greedy_decode(tr.frame_logits);
            std::size_t pred = clf.predict(decoded);
            rep.confusion[u.label][pred] += 1;
            bool correct = pred == u.label;
            if (correct) ++hits;
            if (decoded != u.transcript) {
                ++err_utts;
                if (correct) ++err_hits;
            }
        }
        rep.accuracy = static_cast<double>(hits) /
                       static_cast<double>(data.test.size());
        rep.asr_error_utterances = err_utts;
        rep.accuracy_on_asr_errors =
            err_utts ? std::optional<double>(static_cast<double>(err_hits) /
                                             static_cast<double>(err_utts))
                     : std::nullopt;
        result.test_report = rep;
        result.head_param_count = clf.params.num_params();
        result.param_count = model.params().num_params() + clf.params.num_params();
    } else {
        result.test_report = trainer.evaluate(model, data.test);
    }
    return result;
}

}  // namespace ctcslu
