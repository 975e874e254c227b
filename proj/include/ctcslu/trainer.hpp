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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ctcslu/data.hpp"
#include "ctcslu/metrics.hpp"
#include "ctcslu/model.hpp"

namespace ctcslu {

enum class AblationMode {
    kFull,
    kNoCtc,
    kFrozenEncoder,
    kProbTap,
    kHiddenTap,
    kCnnEncoder,
    kCascade,
};

AblationMode ablation_from_string(const std::string& s);
std::string to_string(AblationMode m);

/// Fixed presentation order of the ablation table.
const std::vector<AblationMode>& all_ablation_modes();

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 16;
    double alpha_ctc = 0.5;
    double alpha_slu = 1.0;
    std::size_t asr_patience = 5;       // epochs without validation CTC improvement
    std::size_t asr_max_epochs = 60;    // safety cap on the warm phase
    std::size_t joint_epochs = 50;
    double grad_clip_norm = 5.0;
    std::uint64_t seed = 1234;
    std::string tap = "logits";
    bool tap_detach = false;
    std::string ablation = "full";
    std::string lr_schedule = "constant";  // the only supported shape

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    std::string phase;  // "asr" or "joint"
    double ctc_loss = 0.0;
    double slu_loss = 0.0;
    double valid_acc = 0.0;
    double valid_wer = 0.0;
    double seconds = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> records;
    std::size_t best_epoch = 0;  // earliest epoch with the best metric
    double pre_joint_valid_wer = 0.0;
    double post_joint_valid_wer = 0.0;
    std::size_t ctc_skipped_total = 0;

    /// CSV with header epoch,phase,ctc_loss,slu_loss,valid_acc,valid_wer,seconds
    std::string to_csv() const;
    void write_csv(const std::string& path) const;
};

struct EvalReport {
    double accuracy = 0.0;
    double wer = 0.0;
    double cer = 0.0;
    std::vector<std::vector<std::size_t>> confusion;  // [true][pred]
    std::size_t asr_error_utterances = 0;
    std::optional<double> accuracy_on_asr_errors;  // absent when ASR is perfect
};

struct Dataset {
    std::vector<Utterance> train, valid, test;
    CorpusConfig corpus;
};

Dataset load_dataset(const std::string& dir);

class Trainer {
public:
    Trainer(const Dataset& data, TrainConfig cfg);

    /// Warm phase: alpha_ctc = 1, alpha_slu = 0, early stopping on the
    /// validation CTC loss (strict improvement > 1e-6, `asr_patience`
    /// epochs), best-validation weights restored at the end.
    TrainLog train_asr_phase(SluModel& model);

    /// Fixed-length joint phase; restores the parameters of the epoch with
    /// the best validation intent accuracy (earliest on ties).
    TrainLog train_joint_phase(SluModel& model, const LossWeights& weights,
                               const std::vector<std::string>& trainable_prefixes = {});

    EvalReport evaluate(SluModel& model, const std::vector<Utterance>& split) const;

    double validation_ctc_loss(SluModel& model) const;
    double validation_wer(SluModel& model) const;

    const TrainConfig& config() const { return cfg_; }

private:
    double run_epoch(SluModel& model, const LossWeights& weights,
                     std::size_t epoch_index, const std::string& phase_tag,
                     double& ctc_out, double& slu_out, std::size_t& skipped);

    const Dataset& data_;
    TrainConfig cfg_;
};

struct AblationResult {
    AblationMode mode;
    TrainLog log;
    EvalReport test_report;
    std::size_t param_count = 0;       // full model parameters
    std::size_t head_param_count = 0;  // utterance encoder + classifier
    std::unique_ptr<SluModel> model;   // final (best-epoch) parameters
    std::vector<Tensor> asr_phase_params;  // snapshot after the warm phase
};

/// Runs one ablation end to end: schedule, tap and freezing per mode.
/// The cascade mode trains a bag-of-token-counts linear classifier on
/// greedy-decoded transcripts after the ASR phase.
AblationResult run_ablation(AblationMode mode, const Dataset& data,
                            const TrainConfig& base_cfg,
                            const ModelConfig& base_model_cfg);

/// Linear classifier over decoded-token count vectors (the cascade NLU).
struct CascadeClassifier {
    ParamStore params;
    std::size_t vocab_size = 0;
    std::size_t num_labels = 0;

    std::vector<double> logits(const Transcript& decoded) const;
    std::size_t predict(const Transcript& decoded) const;
};

CascadeClassifier train_cascade_classifier(
    const std::vector<std::pair<Transcript, std::size_t>>& train_items,
    const std::vector<std::pair<Transcript, std::size_t>>& valid_items,
    std::size_t vocab_size, std::size_t num_labels, const TrainConfig& cfg);

}  // namespace ctcslu
