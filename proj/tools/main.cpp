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

#include <CLI11.hpp>
#include <iostream>

#include "ctcslu/cli.hpp"

using namespace ctcslu;

int main(int argc, char** argv) {
    CLI::App app{"CTC-based spoken language understanding at desk scale"};
    app.require_subcommand(1);
    app.fallthrough();  // let --config appear after the subcommand too

    std::string config_file;
    app.add_option("--config", config_file,
                   "JSON config file (sections corpus/model/train/data/out)");

    // Flag values are applied only when given, so the precedence is
    // flags > config file > CTC_SLU_SEED > defaults.
    std::string data_dir, out_dir, tap, ablation;
    std::uint64_t seed = 0;
    double lr = 0, alpha_ctc = 0, alpha_slu = 0, sigma = 0;
    std::size_t batch = 0, joint_epochs = 0, asr_max_epochs = 0, patience = 0;
    std::size_t train_size = 0, valid_size = 0, test_size = 0;
    bool tap_detach = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--data", data_dir, "dataset directory");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "master seed (corpus and training)");
    };
    auto add_train_flags = [&](CLI::App* cmd) {
        cmd->add_option("--ablation", ablation,
                        "full|no_ctc|frozen_encoder|prob_tap|hidden_tap|"
                        "cnn_encoder|cascade");
        cmd->add_option("--lr", lr, "learning rate");
        cmd->add_option("--batch-size", batch, "mini-batch size");
        cmd->add_option("--alpha-ctc", alpha_ctc, "CTC loss weight");
        cmd->add_option("--alpha-slu", alpha_slu, "SLU loss weight");
        cmd->add_option("--epochs", joint_epochs, "joint-phase epochs");
        cmd->add_option("--asr-max-epochs", asr_max_epochs,
                        "cap on warm-phase epochs");
        cmd->add_option("--patience", patience, "warm-phase early stop patience");
        cmd->add_option("--tap", tap, "hidden|logits|probabilities");
        cmd->add_flag("--tap-detach", tap_detach,
                      "stop gradients at the probability tap");
    };

    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic corpus");
    add_common(gen);
    gen->add_option("--sigma", sigma, "frame noise standard deviation");
    gen->add_option("--train-size", train_size, "train split size");
    gen->add_option("--valid-size", valid_size, "valid split size");
    gen->add_option("--test-size", test_size, "test split size");

    CLI::App* train = app.add_subcommand("train", "run the training schedule");
    add_common(train);
    add_train_flags(train);

    std::string checkpoint, asr_checkpoint, split = "test";
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(eval);
    eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    eval->add_option("--asr-checkpoint", asr_checkpoint,
                     "pre-joint checkpoint for the before/after WER pair");
    eval->add_option("--split", split, "train|valid|test");

    CLI::App* decode = app.add_subcommand("decode", "greedy-decode a split");
    add_common(decode);
    decode->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    decode->add_option("--split", split, "train|valid|test");

    CLI::App* ablate = app.add_subcommand("ablate", "run the ablation table");
    add_common(ablate);
    add_train_flags(ablate);

    CLI::App* verify = app.add_subcommand("verify", "run the built-in oracle suites");

    CLI11_PARSE(app, argc, argv);

    try {
        cli::RunConfig cfg;
        cfg.apply_env_seed();
        if (!config_file.empty()) cfg.merge_json_file(config_file);

        auto count = [&](CLI::App* cmd, const char* name) {
            return cmd->count(name) > 0;
        };
        CLI::App* sub = app.get_subcommands().front();
        if (sub != verify) {
            if (count(sub, "--data")) cfg.data_dir = data_dir;
            if (count(sub, "--out")) cfg.out_dir = out_dir;
            if (count(sub, "--seed")) {
                cfg.corpus.seed = seed;
                cfg.train.seed = seed;
            }
        }
        if (sub == gen) {
            if (count(sub, "--sigma")) cfg.corpus.noise_sigma = sigma;
            if (count(sub, "--train-size")) cfg.corpus.train_size = train_size;
            if (count(sub, "--valid-size")) cfg.corpus.valid_size = valid_size;
            if (count(sub, "--test-size")) cfg.corpus.test_size = test_size;
        }
        if (sub == train || sub == ablate) {
            if (count(sub, "--ablation")) cfg.train.ablation = ablation;
            if (count(sub, "--lr")) cfg.train.learning_rate = lr;
            if (count(sub, "--batch-size")) cfg.train.batch_size = batch;
            if (count(sub, "--alpha-ctc")) cfg.train.alpha_ctc = alpha_ctc;
            if (count(sub, "--alpha-slu")) cfg.train.alpha_slu = alpha_slu;
            if (count(sub, "--epochs")) cfg.train.joint_epochs = joint_epochs;
            if (count(sub, "--asr-max-epochs"))
                cfg.train.asr_max_epochs = asr_max_epochs;
            if (count(sub, "--patience")) cfg.train.asr_patience = patience;
            if (count(sub, "--tap")) cfg.train.tap = tap;
            if (count(sub, "--tap-detach")) cfg.train.tap_detach = true;
        }

        if (sub == gen) {
            cli::cmd_gen(cfg);
        } else if (sub == train) {
            cli::cmd_train(cfg, std::cout);
        } else if (sub == eval) {
            cli::cmd_eval(cfg, checkpoint, split, asr_checkpoint, std::cout);
        } else if (sub == decode) {
            cli::cmd_decode(cfg, checkpoint, split, std::cout);
        } else if (sub == ablate) {
            cli::cmd_ablate(cfg, std::cout);
        } else {  // verify
            return cli::cmd_verify(std::cout) ? cli::kExitOk
                                              : cli::kExitVerifyFailure;
        }
        return cli::kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::kExitConfigError;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return cli::kExitDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kExitDataError;
    }
}
