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

// Acceptance suite. Each criterion prints exactly one PASS/FAIL line; the
// doctest assertions keep the binary red when a criterion fails.

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "ctcslu/cli.hpp"
#include "ctcslu/ctc.hpp"
#include "ctcslu/metrics.hpp"
#include "ctcslu/model.hpp"
#include "ctcslu/nn.hpp"
#include "ctcslu/rng.hpp"
#include "ctcslu/trainer.hpp"

using namespace ctcslu;
using ctc::kNegInf;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

void report(int criterion, bool ok, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion,
                detail.c_str());
    std::fflush(stdout);
    CHECK_MESSAGE(ok, "criterion " << criterion << ": " << detail);
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

Tensor random_log_probs(std::size_t T, std::size_t C, Rng& rng) {
    Tensor lp({T, C});
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> logits(C);
        for (double& v : logits) v = rng.uniform(-3, 3);
        auto row = nn::log_softmax(logits);
        for (std::size_t k = 0; k < C; ++k) lp.at(t, k) = row[k];
    }
    return lp;
}

// Shared results of the random CTC instance sweep (criteria 1 and 3).
struct SweepResult {
    std::size_t compared = 0;
    double max_oracle_err = 0.0;
    double max_lattice_err = 0.0;
    double seconds = 0.0;
};

SweepResult run_oracle_sweep() {
    SweepResult out;
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(20260824);
    for (std::size_t T = 1; T <= 6; ++T)
        for (std::size_t V = 1; V <= 3; ++V)
            for (std::size_t U = 0; U <= 3; ++U)
                for (int rep = 0; rep < 6; ++rep) {
                    Tensor lp = random_log_probs(T, V + 1, rng);
                    Transcript w(U);
                    for (auto& tok : w) tok = rng.uniform_int(V);
                    auto table = ctc::ctc_log_likelihood(lp, w);
                    double oracle = ctc::ctc_brute_force(lp, w);
                    if (table.infeasible) {
                        // The enumerator must find no valid alignment either.
                        if (oracle != 0.0) out.max_oracle_err = 1.0;
                        continue;
                    }
                    ++out.compared;
                    out.max_oracle_err =
                        std::max(out.max_oracle_err,
                                 std::abs(table.log_likelihood - std::log(oracle)));
                    std::size_t S = table.log_alpha.dims()[1];
                    for (std::size_t t = 0; t < T; ++t) {
                        double acc = kNegInf;
                        for (std::size_t s = 0; s < S; ++s)
                            acc = ctc::log_add(acc, table.log_alpha.at(t, s) +
                                                        table.log_beta.at(t, s));
                        out.max_lattice_err = std::max(
                            out.max_lattice_err, std::abs(acc - table.log_likelihood));
                    }
                }
    out.seconds = seconds_since(t0);
    return out;
}

const SweepResult& oracle_sweep() {
    static SweepResult result = run_oracle_sweep();
    return result;
}

// Memoization-free reference edit distance: plain recursive minimal-cost
// alignment count with a small DP cache, written independently of the
// production streaming implementation.
std::size_t reference_edit_total(const std::vector<int>& a,
                                 const std::vector<int>& b) {
    std::vector<std::vector<std::size_t>> dp(a.size() + 1,
                                             std::vector<std::size_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) dp[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) dp[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t sub = dp[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            dp[i][j] = std::min({sub, dp[i - 1][j] + 1, dp[i][j - 1] + 1});
        }
    return dp[a.size()][b.size()];
}

// Everything criteria 4/5/6/9 share: one default corpus, one set of ablation
// runs with the shared default TrainConfig and seed.
struct LearningRuns {
    AblationResult full, no_ctc, frozen, hidden;
    double full_seconds = 0.0;
};

Dataset default_dataset() {
    CorpusConfig cfg;  // library defaults: the default synthetic corpus
    cfg.validate();
    Dataset data;
    data.corpus = cfg;
    for (std::size_t i = 0; i < cfg.train_size; ++i)
        data.train.push_back(make_utterance(cfg, "train", i));
    for (std::size_t i = 0; i < cfg.valid_size; ++i)
        data.valid.push_back(make_utterance(cfg, "valid", i));
    for (std::size_t i = 0; i < cfg.test_size; ++i)
        data.test.push_back(make_utterance(cfg, "test", i));
    return data;
}

const LearningRuns& learning_runs() {
    static std::unique_ptr<LearningRuns> runs = [] {
        Dataset data = default_dataset();
        TrainConfig tcfg;  // shared defaults and seed across every mode
        ModelConfig mcfg;
        mcfg.feature_dim = data.corpus.feature_dim;
        mcfg.vocab_size = data.corpus.vocab_size;
        mcfg.num_labels = data.corpus.num_intents();

        auto runs_out = std::make_unique<LearningRuns>();
        auto t0 = std::chrono::steady_clock::now();
        runs_out->full = run_ablation(AblationMode::kFull, data, tcfg, mcfg);
        runs_out->full_seconds = seconds_since(t0);
        runs_out->no_ctc = run_ablation(AblationMode::kNoCtc, data, tcfg, mcfg);
        runs_out->frozen =
            run_ablation(AblationMode::kFrozenEncoder, data, tcfg, mcfg);
        runs_out->hidden = run_ablation(AblationMode::kHiddenTap, data, tcfg, mcfg);
        return runs_out;
    }();
    return *runs;
}

std::string strip_seconds_column(const std::string& csv) {
    std::istringstream is(csv);
    std::ostringstream os;
    std::string line;
    while (std::getline(is, line)) os << line.substr(0, line.rfind(',')) << '\n';
    return os.str();
}

std::string read_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("criterion 1: CTC oracle equivalence") {
    const SweepResult& s = oracle_sweep();
    bool ok = s.compared >= 200 && s.max_oracle_err < 1e-9 && s.seconds < 30.0;
    report(1, ok,
           fmt("ctc_log_likelihood vs brute force on %zu instances "
               "(T'<=6, V<=3, U<=3), max |log diff| = %.3g, %.1fs",
               s.compared, s.max_oracle_err, s.seconds));
}

TEST_CASE("criterion 2: gradient fidelity") {
    auto t0 = std::chrono::steady_clock::now();
    const double h = 1e-5;

    // (a) standalone CTC loss as a function of pre-softmax frame logits.
    std::size_t T = 12, V = 5;
    Rng rng(77);
    Tensor logits({T, V + 1});
    for (double& v : logits.values()) v = rng.uniform(-2, 2);
    Transcript w = {0, 1, 1, 4};
    ParamStore ctc_store;
    ctc_store.add("logits", logits);
    auto ctc_loss = [&](ParamStore& s) {
        const Tensor& L = s.value("logits");
        Tensor lp(L.dims());
        for (std::size_t t = 0; t < T; ++t) {
            std::vector<double> row(V + 1);
            for (std::size_t k = 0; k <= V; ++k) row[k] = L.at(t, k);
            auto lsm = nn::log_softmax(row);
            for (std::size_t k = 0; k <= V; ++k) lp.at(t, k) = lsm[k];
        }
        return -ctc::ctc_log_likelihood(lp, w).log_likelihood;
    };
    {
        const Tensor& L = ctc_store.value("logits");
        Tensor lp(L.dims());
        for (std::size_t t = 0; t < T; ++t) {
            std::vector<double> row(V + 1);
            for (std::size_t k = 0; k <= V; ++k) row[k] = L.at(t, k);
            auto lsm = nn::log_softmax(row);
            for (std::size_t k = 0; k <= V; ++k) lp.at(t, k) = lsm[k];
        }
        auto table = ctc::ctc_log_likelihood(lp, w);
        ctc_store.grad("logits") = ctc::ctc_grad(lp, w, table);
    }
    double err_ctc =
        nn::finite_diff_check(ctc_loss, ctc_store, h, T * (V + 1), 7001);

    // (b) the full joint model: T=12, d=8, V=5, K=6, batch of 2.
    ModelConfig mcfg;
    mcfg.feature_dim = 8;
    mcfg.conv_layers = {{3, 1, 12}, {3, 2, 12}};
    mcfg.vocab_size = 5;
    mcfg.utt_hidden = 16;
    mcfg.num_labels = 6;
    SluModel model(mcfg, 4321);
    Tensor xa({12, 8}), xb({12, 8});
    for (double& v : xa.values()) v = rng.gaussian();
    for (double& v : xb.values()) v = rng.gaussian();
    std::vector<BatchItem> batch = {{&xa, {0, 2, 4}, 1}, {&xb, {3, 3}, 5}};
    LossWeights weights{0.5, 1.0};
    model.params().zero_grad();
    model.joint_loss(batch, weights, true);
    auto joint_loss = [&](ParamStore&) {
        return model.joint_loss(batch, weights, false).total;
    };
    double err_model =
        nn::finite_diff_check(joint_loss, model.params(), h, 250, 7002);

    double secs = seconds_since(t0);
    bool ok = err_ctc < 1e-4 && err_model < 1e-4 && secs < 60.0;
    report(2, ok,
           fmt("finite differences at h=1e-5: standalone CTC max rel err = "
               "%.3g, full model = %.3g, %.1fs",
               err_ctc, err_model, secs));
}

TEST_CASE("criterion 3: forward-backward consistency") {
    const SweepResult& s = oracle_sweep();
    bool ok = s.compared >= 200 && s.max_lattice_err < 1e-9;
    report(3, ok,
           fmt("max frame-wise |logsumexp(alpha+beta) - loglik| = %.3g over "
               "%zu instances",
               s.max_lattice_err, s.compared));
}

TEST_CASE("criteria 4-6: learning, ablation ordering, tap equivalence") {
    const LearningRuns& r = learning_runs();

    double acc = r.full.test_report.accuracy;
    double wer = r.full.test_report.wer;
    bool ok4 = acc >= 0.95 && wer <= 0.05 && r.full_seconds < 600.0;
    report(4, ok4,
           fmt("full config: test accuracy = %.3f (>= 0.95), WER = %.4f "
               "(<= 0.05), %.0fs (< 600)",
               acc, wer, r.full_seconds));

    double d_noctc = acc - r.no_ctc.test_report.accuracy;
    double d_frozen = acc - r.frozen.test_report.accuracy;
    bool ok5 = d_noctc >= 0.02 && d_frozen >= 0.05;
    report(5, ok5,
           fmt("full %.3f vs no_ctc %.3f (+%.1f pts, need >= 2) and "
               "frozen_encoder %.3f (+%.1f pts, need >= 5)",
               acc, r.no_ctc.test_report.accuracy, 100 * d_noctc,
               r.frozen.test_report.accuracy, 100 * d_frozen));

    double d_tap = std::abs(acc - r.hidden.test_report.accuracy);
    bool ok6 = d_tap <= 0.01 + 1e-12;
    report(6, ok6,
           fmt("logits tap %.3f vs hidden tap %.3f (|diff| = %.1f pts, "
               "within 1.0)",
               acc, r.hidden.test_report.accuracy, 100 * d_tap));
}

TEST_CASE("criterion 7: edit-distance oracle") {
    // All pairs of sequences of length <= 6 over a 3-symbol alphabet.
    std::vector<std::vector<int>> seqs = {{}};
    for (std::size_t len = 1, begin = 0; len <= 6; ++len) {
        std::size_t end = seqs.size();
        for (std::size_t i = begin; i < end; ++i)
            for (int sym = 0; sym < 3; ++sym) {
                auto s = seqs[i];
                s.push_back(sym);
                seqs.push_back(std::move(s));
            }
        begin = end;
    }
    std::size_t mismatches = 0, pairs = 0;
    for (const auto& a : seqs)
        for (const auto& b : seqs) {
            ++pairs;
            if (metrics::edit_distance(a, b).total() != reference_edit_total(a, b))
                ++mismatches;
        }
    auto ks = metrics::edit_distance(std::string("kitten"), std::string("sitting"));
    bool ok = mismatches == 0 && ks.total() == 3;
    report(7, ok,
           fmt("%zu sequence pairs vs DP oracle, %zu mismatches; "
               "kitten/sitting = %zu (expect 3)",
               pairs, mismatches, ks.total()));
}

TEST_CASE("criterion 8: byte-identical reruns") {
    namespace fs = std::filesystem;
    fs::path root = fs::temp_directory_path() / "ctcslu_acceptance_det";
    fs::remove_all(root);
    fs::create_directories(root);

    cli::RunConfig cfg;
    cfg.corpus.train_size = 200;
    cfg.corpus.valid_size = 40;
    cfg.corpus.test_size = 40;
    cfg.corpus.seed = 99;
    cfg.train.seed = 99;
    cfg.train.asr_max_epochs = 3;
    cfg.train.joint_epochs = 3;
    cfg.data_dir = (root / "data").string();
    cli::cmd_gen(cfg);

    std::ostringstream sink;
    cfg.out_dir = (root / "run_a").string();
    cli::TrainOutputs a = cli::cmd_train(cfg, sink);
    cfg.out_dir = (root / "run_b").string();
    cli::TrainOutputs b = cli::cmd_train(cfg, sink);

    bool ckpt_same = read_bytes(a.checkpoint) == read_bytes(b.checkpoint) &&
                     read_bytes(a.asr_checkpoint) == read_bytes(b.asr_checkpoint);
    bool log_same = strip_seconds_column(read_bytes(a.trainlog)) ==
                    strip_seconds_column(read_bytes(b.trainlog));
    report(8, ckpt_same && log_same,
           fmt("repeated `train --ablation full`: checkpoints %s, train logs "
               "(wall-time column excluded) %s",
               ckpt_same ? "byte-identical" : "DIFFER",
               log_same ? "identical" : "DIFFER"));
    fs::remove_all(root);
}

TEST_CASE("criterion 9: joint training does not degrade ASR") {
    const LearningRuns& r = learning_runs();
    double pre = r.full.log.pre_joint_valid_wer;
    double post = r.full.log.post_joint_valid_wer;
    report(9, post <= pre + 0.02,
           fmt("validation WER pre-joint %.4f -> post-joint %.4f "
               "(allowed +0.02)",
               pre, post));
}
