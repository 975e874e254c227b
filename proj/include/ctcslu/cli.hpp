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

#include <ostream>
#include <string>

#include "ctcslu/data.hpp"
#include "ctcslu/model.hpp"
#include "ctcslu/trainer.hpp"

namespace ctcslu::cli {

// Exit codes shared by the binary and the command layer.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDataError = 3;
inline constexpr int kExitVerifyFailure = 4;

struct RunConfig {
    CorpusConfig corpus;
    ModelConfig model;
    TrainConfig train;
    std::string data_dir = "data/default";
    std::string out_dir = "runs/default";

    std::string to_json_string() const;
    /// Merge a partial JSON config (sections corpus/model/train/data/out).
    void merge_json_file(const std::string& path);
    /// Lowest-precedence override: CTC_SLU_SEED sets both seeds.
    void apply_env_seed();
};

/// Writes the dataset splits plus vocab/labels/manifest under data_dir.
void cmd_gen(const RunConfig& cfg);

struct TrainOutputs {
    std::string checkpoint;      // best parameters after the full schedule
    std::string asr_checkpoint;  // parameters at the end of the warm phase
    std::string trainlog;
    std::string summary;
};

/// Full schedule (or the ablation-mode schedule) on the dataset in data_dir;
/// writes checkpoint, sidecar, train log, summary and the resolved config.
TrainOutputs cmd_train(const RunConfig& cfg, std::ostream& out);

/// Loads a checkpoint (with its sidecar architecture check) and reports
/// accuracy, WER, CER, error-subset accuracy and the confusion counts.
/// A second checkpoint, when given, adds the before-joint WER to the report.
void cmd_eval(const RunConfig& cfg, const std::string& checkpoint,
              const std::string& split, const std::string& asr_checkpoint,
              std::ostream& out);

/// Greedy-decodes a split to "<id>\t<tokens>" lines ordered by id.
void cmd_decode(const RunConfig& cfg, const std::string& checkpoint,
                const std::string& split, std::ostream& out);

/// Runs every ablation mode with the shared seed and corpus; writes and
/// prints one table row per mode plus the expected orderings.
void cmd_ablate(const RunConfig& cfg, std::ostream& out);

/// Self-contained oracle suites; returns true if every suite passes.
bool cmd_verify(std::ostream& out);

/// Restores a model from checkpoint + sidecar, rejecting architecture
/// mismatches via the sidecar hash.
SluModel load_model_checkpoint(const std::string& checkpoint_path);

std::vector<Utterance>& select_split(Dataset& data, const std::string& split);

}  // namespace ctcslu::cli
