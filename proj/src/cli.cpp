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

#include "ctcslu/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "ctcslu/checkpoint.hpp"
#include "ctcslu/metrics.hpp"
#include "ctcslu/rng.hpp"
#include "ctcslu/serde.hpp"

namespace fs = std::filesystem;

namespace ctcslu::cli {

namespace {

void write_text(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot write: " + path);
    os << content;
}

std::string read_text(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot read: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

void echo_config(const RunConfig& cfg, const std::string& dir) {
    fs::create_directories(dir);
    write_text(dir + "/config.json", cfg.to_json_string());
}

/// Model dims are not free: they follow the corpus.
ModelConfig resolved_model_config(const RunConfig& cfg) {
    ModelConfig m = cfg.model;
    m.feature_dim = cfg.corpus.feature_dim;
    m.vocab_size = cfg.corpus.vocab_size;
    m.num_labels = cfg.corpus.num_intents();
    m.tap = tap_mode_from_string(cfg.train.tap);
    m.tap_detach = cfg.train.tap_detach;
    return m;
}

void save_model(const SluModel& model, const std::string& path) {
    save_checkpoint(model.params(), path);
    nlohmann::json sidecar;
    sidecar["model"] = model.config();
    std::ostringstream hash;
    hash << std::hex << model.config().arch_hash();
    sidecar["arch_hash"] = hash.str();
    write_text(path + ".json", sidecar.dump(2) + "\n");
}

std::string json_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

nlohmann::json report_to_json(const EvalReport& rep) {
    nlohmann::json j;
    j["accuracy"] = rep.accuracy;
    j["wer"] = rep.wer;
    j["cer"] = rep.cer;
    j["asr_error_utterances"] = rep.asr_error_utterances;
    if (rep.accuracy_on_asr_errors)
        j["accuracy_on_asr_errors"] = *rep.accuracy_on_asr_errors;
    else
        j["accuracy_on_asr_errors"] = "not-applicable";
    j["confusion"] = rep.confusion;
    return j;
}

}  // namespace

std::string RunConfig::to_json_string() const {
    nlohmann::json j;
    j["corpus"] = corpus;
    j["model"] = model;
    j["train"] = train;
    j["data"] = data_dir;
    j["out"] = out_dir;
    return j.dump(2) + "\n";
}

void RunConfig::merge_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad config file " + path + ": " + e.what());
    }
    if (j.contains("corpus")) from_json(j.at("corpus"), corpus);
    if (j.contains("model")) from_json(j.at("model"), model);
    if (j.contains("train")) from_json(j.at("train"), train);
    if (j.contains("data")) data_dir = j.at("data").get<std::string>();
    if (j.contains("out")) out_dir = j.at("out").get<std::string>();
}

void RunConfig::apply_env_seed() {
    const char* env = std::getenv("CTC_SLU_SEED");
    if (!env) return;
    try {
        std::uint64_t seed = std::stoull(env);
        corpus.seed = seed;
        train.seed = seed;
    } catch (const std::exception&) {
        throw ConfigError("CTC_SLU_SEED is not an integer");
    }
}

void cmd_gen(const RunConfig& cfg) {
    cfg.corpus.validate();
    generate_corpus(cfg.corpus, cfg.data_dir);
    echo_config(cfg, cfg.data_dir);
}

TrainOutputs cmd_train(const RunConfig& cfg, std::ostream& out) {
    cfg.train.validate();
    Dataset data = load_dataset(cfg.data_dir);
    ModelConfig mcfg = resolved_model_config(cfg);
    AblationMode mode = ablation_from_string(cfg.train.ablation);

    AblationResult result = run_ablation(mode, data, cfg.train, mcfg);

    fs::create_directories(cfg.out_dir);
    echo_config(cfg, cfg.out_dir);

    TrainOutputs paths;
    paths.checkpoint = cfg.out_dir + "/checkpoint.bin";
    paths.asr_checkpoint = cfg.out_dir + "/checkpoint_asr.bin";
    paths.trainlog = cfg.out_dir + "/trainlog.csv";
    paths.summary = cfg.out_dir + "/summary.json";

    save_model(*result.model, paths.checkpoint);
    {
        SluModel asr_model = *result.model;
        asr_model.params().restore(result.asr_phase_params);
        save_model(asr_model, paths.asr_checkpoint);
    }
    result.log.write_csv(paths.trainlog);

    nlohmann::json summary;
    summary["mode"] = to_string(result.mode);
    summary["test"] = report_to_json(result.test_report);
    summary["param_count"] = result.param_count;
    summary["head_param_count"] = result.head_param_count;
    summary["pre_joint_valid_wer"] = result.log.pre_joint_valid_wer;
    summary["post_joint_valid_wer"] = result.log.post_joint_valid_wer;
    summary["best_epoch_index"] = result.log.best_epoch;
    summary["ctc_infeasible_skipped"] = result.log.ctc_skipped_total;
    write_text(paths.summary, summary.dump(2) + "\n");

    out << "mode=" << to_string(result.mode)
        << " test_acc=" << json_double(result.test_report.accuracy)
        << " test_wer=" << json_double(result.test_report.wer)
        << " pre_joint_valid_wer=" << json_double(result.log.pre_joint_valid_wer)
        << " post_joint_valid_wer=" << json_double(result.log.post_joint_valid_wer)
        << "\n";
    if (result.log.post_joint_valid_wer >
        result.log.pre_joint_valid_wer + 0.02) {
        out << "warning: joint phase degraded validation WER from "
            << json_double(result.log.pre_joint_valid_wer) << " to "
            << json_double(result.log.post_joint_valid_wer) << "\n";
    }
    return paths;
}

SluModel load_model_checkpoint(const std::string& checkpoint_path) {
    nlohmann::json sidecar;
    try {
        sidecar = nlohmann::json::parse(read_text(checkpoint_path + ".json"));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad checkpoint sidecar for " + checkpoint_path + ": " +
                        e.what());
    }
    ModelConfig mcfg = sidecar.at("model").get<ModelConfig>();
    std::ostringstream hash;
    hash << std::hex << mcfg.arch_hash();
    if (sidecar.at("arch_hash").get<std::string>() != hash.str())
        throw DataError("checkpoint architecture hash mismatch: " +
                        checkpoint_path);
    SluModel model(mcfg, 0);
    load_checkpoint(model.params(), checkpoint_path);
    return model;
}

std::vector<Utterance>& select_split(Dataset& data, const std::string& split) {
    if (split == "train") return data.train;
    if (split == "valid") return data.valid;
    if (split == "test") return data.test;
    throw ConfigError("unknown split: " + split);
}

void cmd_eval(const RunConfig& cfg, const std::string& checkpoint,
              const std::string& split, const std::string& asr_checkpoint,
              std::ostream& out) {
    Dataset data = load_dataset(cfg.data_dir);
    SluModel model = load_model_checkpoint(checkpoint);
    if (model.config().feature_dim != data.corpus.feature_dim ||
        model.config().vocab_size != data.corpus.vocab_size ||
        model.config().num_labels != data.corpus.num_intents())
        throw DataError("checkpoint does not match the dataset layout");

    Trainer trainer(data, cfg.train);
    const std::vector<Utterance>& items = select_split(data, split);
    EvalReport rep = trainer.evaluate(model, items);

    nlohmann::json j = report_to_json(rep);
    j["split"] = split;
    if (!asr_checkpoint.empty()) {
        SluModel asr_model = load_model_checkpoint(asr_checkpoint);
        std::vector<metrics::EditCounts> counts;
        for (const Utterance& u : items) {
            ForwardTrace tr = asr_model.forward(u.frames);
            counts.push_back(
                metrics::edit_distance(u.transcript, ctc::greedy_decode(tr.frame_logits)));
        }
        j["wer_before_joint"] = metrics::error_rate(counts);
        j["wer_after_joint"] = rep.wer;
    }

    fs::create_directories(cfg.out_dir);
    echo_config(cfg, cfg.out_dir);
    write_text(cfg.out_dir + "/eval_" + split + ".json", j.dump(2) + "\n");
    out << j.dump(2) << "\n";
}

void cmd_decode(const RunConfig& cfg, const std::string& checkpoint,
                const std::string& split, std::ostream& out) {
    Dataset data = load_dataset(cfg.data_dir);
    SluModel model = load_model_checkpoint(checkpoint);
    std::vector<Utterance>& items = select_split(data, split);
    std::sort(items.begin(), items.end(),
              [](const Utterance& a, const Utterance& b) { return a.id < b.id; });

    std::ostringstream body;
    for (const Utterance& u : items) {
        ForwardTrace tr = model.forward(u.frames);
        Transcript decoded = ctc::greedy_decode(tr.frame_logits);
        std::vector<std::string> toks;
        toks.reserve(decoded.size());
        for (std::size_t id : decoded) toks.push_back(data.corpus.token_name(id));
        body << u.id << '\t' << metrics::join_tokens(toks) << '\n';
    }
    fs::create_directories(cfg.out_dir);
    echo_config(cfg, cfg.out_dir);
    std::string path = cfg.out_dir + "/decoded_" + split + ".tsv";
    write_text(path, body.str());
    out << "wrote " << path << "\n";
}

void cmd_ablate(const RunConfig& cfg, std::ostream& out) {
    cfg.train.validate();
    Dataset data = load_dataset(cfg.data_dir);
    ModelConfig mcfg = resolved_model_config(cfg);

    fs::create_directories(cfg.out_dir);
    echo_config(cfg, cfg.out_dir);

    std::map<std::string, AblationResult> results;
    std::ostringstream table;
    table << "mode,test_acc,test_wer,test_cer,param_count,head_param_count\n";
    out << "mode,test_acc,test_wer,test_cer,param_count,head_param_count\n";
    for (AblationMode mode : all_ablation_modes()) {
        std::string row;
        try {
            AblationResult res = run_ablation(mode, data, cfg.train, mcfg);
            std::ostringstream os;
            os << to_string(mode) << ',' << json_double(res.test_report.accuracy)
               << ',' << json_double(res.test_report.wer) << ','
               << json_double(res.test_report.cer) << ',' << res.param_count
               << ',' << res.head_param_count;
            row = os.str();
            results.emplace(to_string(mode), std::move(res));
        } catch (const std::exception& e) {
            row = to_string(mode) + ",failed: " + e.what();
        }
        table << row << '\n';
        out << row << '\n';
    }
    write_text(cfg.out_dir + "/ablation.csv", table.str());

    auto acc = [&](const char* mode) {
        return results.at(mode).test_report.accuracy;
    };
    if (results.count("full") && results.count("no_ctc") &&
        results.count("frozen_encoder") && results.count("prob_tap")) {
        out << "ordering full>no_ctc: "
            << (acc("full") > acc("no_ctc") ? "ok" : "violated") << "\n";
        out << "ordering full>frozen_encoder: "
            << (acc("full") > acc("frozen_encoder") ? "ok" : "violated") << "\n";
        // Allow half a point of slack, mirroring how close the logits and
        // probability taps run.
        out << "ordering full>=prob_tap-0.005: "
            << (acc("full") >= acc("prob_tap") - 0.005 ? "ok" : "violated")
            << "\n";
    }
}

// ---------------------------------------------------------------------------
// verify: self-contained oracle suites
// ---------------------------------------------------------------------------

namespace {

Tensor random_log_probs(std::size_t T, std::size_t C, Rng& rng) {
    Tensor lp({T, C});
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> logits(C);
        for (double& v : logits) v = rng.uniform(-2.0, 2.0);
        auto row = nn::log_softmax(logits);
        for (std::size_t k = 0; k < C; ++k) lp.at(t, k) = row[k];
    }
    return lp;
}

struct SuiteResult {
    std::string name;
    bool passed = false;
    double max_error = 0.0;
    std::string note;
};

SuiteResult verify_ctc_oracle() {
    SuiteResult res{"ctc-brute-force-equivalence"};
    double max_err = 0.0;
    std::size_t instances = 0;
    for (std::size_t T = 1; T <= 5; ++T) {
        for (std::size_t V = 1; V <= 3; ++V) {
            for (std::size_t U = 0; U <= 3; ++U) {
                for (std::uint64_t s = 0; s < 3; ++s) {
                    Rng rng(mix_seed(97, "verify-ctc", T * 1000 + V * 100 + U * 10 + s));
                    Tensor lp = random_log_probs(T, V + 1, rng);
                    Transcript w(U);
                    for (auto& tok : w) tok = rng.uniform_int(V);
                    double bf = ctc::ctc_brute_force(lp, w);
                    auto table = ctc::ctc_log_likelihood(lp, w);
                    ++instances;
                    if (bf == 0.0) {
                        if (!table.infeasible) {
                            res.note = "dp feasible where enumeration found nothing";
                            return res;
                        }
                        continue;
                    }
                    max_err = std::max(max_err,
                                       std::abs(table.log_likelihood - std::log(bf)));
                    // lattice cross-check at every frame
                    std::size_t S = table.log_alpha.cols();
                    for (std::size_t t = 0; t < T; ++t) {
                        double acc = ctc::kNegInf;
                        for (std::size_t st = 0; st < S; ++st)
                            acc = ctc::log_add(acc, table.log_alpha.at(t, st) +
                                                        table.log_beta.at(t, st));
                        max_err = std::max(max_err,
                                           std::abs(acc - table.log_likelihood));
                    }
                }
            }
        }
    }
    res.max_error = max_err;
    res.passed = max_err < 1e-9 && instances >= 180;
    return res;
}

SuiteResult verify_gradients() {
    SuiteResult res{"finite-difference-gradients"};
    ModelConfig mcfg;
    mcfg.feature_dim = 8;
    mcfg.conv_layers = {{3, 1, 12}, {3, 2, 12}};
    mcfg.vocab_size = 5;
    mcfg.utt_hidden = 16;
    mcfg.num_labels = 6;
    mcfg.tap = TapMode::kLogits;
    SluModel model(mcfg, 11);

    Rng rng(mix_seed(97, "verify-grad", 0));
    std::vector<Tensor> frames;
    std::vector<BatchItem> batch;
    for (int i = 0; i < 2; ++i) {
        Tensor X({12, 8});
        for (double& v : X.values()) v = rng.uniform(-1.0, 1.0);
        frames.push_back(std::move(X));
    }
    for (int i = 0; i < 2; ++i) {
        BatchItem item;
        item.frames = &frames[i];
        item.transcript = {rng.uniform_int(5), rng.uniform_int(5)};
        item.label = rng.uniform_int(6);
        batch.push_back(item);
    }
    LossWeights w{0.5, 1.0};
    model.params().zero_grad();
    model.joint_loss(batch, w, true);
    auto loss_fn = [&](ParamStore&) {
        return model.joint_loss(batch, w, false).total;
    };
    res.max_error = nn::finite_diff_check(loss_fn, model.params(), 1e-5, 200, 7);
    res.passed = res.max_error < 1e-4;
    return res;
}

std::size_t memo_edit_distance(const std::vector<int>& a, const std::vector<int>& b) {
    // top-down memoized recursion, independent of the production DP
    std::vector<std::vector<std::size_t>> memo(
        a.size() + 1, std::vector<std::size_t>(b.size() + 1, SIZE_MAX));
    std::function<std::size_t(std::size_t, std::size_t)> go =
        [&](std::size_t i, std::size_t j) -> std::size_t {
        if (i == a.size()) return b.size() - j;
        if (j == b.size()) return a.size() - i;
        if (memo[i][j] != SIZE_MAX) return memo[i][j];
        std::size_t best = go(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
        best = std::min(best, go(i + 1, j) + 1);
        best = std::min(best, go(i, j + 1) + 1);
        return memo[i][j] = best;
    };
    return go(0, 0);
}

SuiteResult verify_metrics() {
    SuiteResult res{"edit-distance-oracle"};
    std::string kitten = "kitten", sitting = "sitting";
    auto counts = metrics::edit_distance(kitten, sitting);
    if (counts.total() != 3) {
        res.note = "kitten/sitting distance != 3";
        return res;
    }
    Rng rng(mix_seed(97, "verify-metrics", 0));
    for (int n = 0; n < 3000; ++n) {
        std::vector<int> a(rng.uniform_int(7)), b(rng.uniform_int(7));
        for (int& v : a) v = static_cast<int>(rng.uniform_int(3));
        for (int& v : b) v = static_cast<int>(rng.uniform_int(3));
        auto c = metrics::edit_distance(a, b);
        if (c.total() != memo_edit_distance(a, b)) {
            res.note = "dp/oracle disagreement";
            return res;
        }
    }
    res.passed = true;
    return res;
}

SuiteResult verify_determinism() {
    SuiteResult res{"determinism"};
    CorpusConfig cc;
    cc.train_size = 64;
    cc.valid_size = 8;
    cc.test_size = 8;
    cc.seed = 4242;
    fs::path base = fs::temp_directory_path() / "ctcslu_verify";
    fs::remove_all(base);
    std::string dir_a = (base / "gen_a").string();
    std::string dir_b = (base / "gen_b").string();
    generate_corpus(cc, dir_a);
    generate_corpus(cc, dir_b);
    for (const char* f : {"train.jsonl", "valid.jsonl", "test.jsonl",
                          "vocab.txt", "labels.txt"}) {
        if (read_text(dir_a + "/" + f) != read_text(dir_b + "/" + f)) {
            res.note = std::string("corpus file differs: ") + f;
            return res;
        }
    }

    Dataset data = load_dataset(dir_a);
    TrainConfig tc;
    tc.asr_max_epochs = 2;
    tc.asr_patience = 1;
    tc.joint_epochs = 2;
    tc.batch_size = 8;
    ModelConfig mc;
    mc.feature_dim = cc.feature_dim;
    mc.vocab_size = cc.vocab_size;
    mc.num_labels = cc.num_intents();
    std::string ck_a = (base / "ck_a.bin").string();
    std::string ck_b = (base / "ck_b.bin").string();
    {
        AblationResult r = run_ablation(AblationMode::kFull, data, tc, mc);
        save_checkpoint(r.model->params(), ck_a);
    }
    {
        AblationResult r = run_ablation(AblationMode::kFull, data, tc, mc);
        save_checkpoint(r.model->params(), ck_b);
    }
    if (read_text(ck_a) != read_text(ck_b)) {
        res.note = "repeated training produced different checkpoints";
        return res;
    }
    fs::remove_all(base);
    res.passed = true;
    return res;
}

}  // namespace

bool cmd_verify(std::ostream& out) {
    bool all_ok = true;
    auto guarded = [](SuiteResult (*fn)()) {
        try {
            return fn();
        } catch (const std::exception& e) {
            SuiteResult r{"suite"};
            r.note = std::string("exception: ") + e.what();
            return r;
        }
    };
    for (auto& suite :
         {guarded(verify_ctc_oracle), guarded(verify_gradients),
          guarded(verify_metrics), guarded(verify_determinism)}) {
        out << (suite.passed ? "PASS" : "FAIL") << ' ' << suite.name
            << " max_error=" << json_double(suite.max_error);
        if (!suite.note.empty()) out << " (" << suite.note << ")";
        out << "\n";
        all_ok = all_ok && suite.passed;
    }
    return all_ok;
}

}  // namespace ctcslu::cli
