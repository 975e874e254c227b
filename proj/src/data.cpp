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

#include "ctcslu/data.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ctcslu/model.hpp"  // ConfigError
#include "ctcslu/rng.hpp"
#include "ctcslu/serde.hpp"

namespace fs = std::filesystem;

namespace ctcslu {

std::string CorpusConfig::token_name(std::size_t id) const {
    std::ostringstream os;
    os << 'w';
    if (id < 10) os << '0';
    os << id;
    return os.str();
}

std::string CorpusConfig::intent_name(std::size_t id) const {
    std::ostringstream os;
    os << "act" << id / num_scenarios << "_scn" << id % num_scenarios;
    return os.str();
}

void CorpusConfig::validate() const {
    if (vocab_size == 0 || feature_dim == 0)
        throw ConfigError("corpus: vocab_size and feature_dim must be positive");
    if (utt_min_tokens < 2)
        throw ConfigError("corpus: utt_min_tokens must be >= 2 (first/last token "
                          "roles require two tokens)");
    if (utt_min_tokens > utt_max_tokens)
        throw ConfigError("corpus: utt_min_tokens > utt_max_tokens");
    if (frames_min < 3)
        throw ConfigError("corpus: frames_min must be >= 3 for CTC feasibility "
                          "under subsampling");
    if (frames_min > frames_max)
        throw ConfigError("corpus: frames_min > frames_max");
    if (num_actions == 0 || num_scenarios == 0)
        throw ConfigError("corpus: group counts must be positive");
    if (action_pool + scenario_pool > vocab_size)
        throw ConfigError("corpus: action_pool + scenario_pool exceeds vocab_size");
    if (action_pool + scenario_pool == vocab_size && utt_max_tokens > 2)
        throw ConfigError("corpus: no filler tokens left for interior positions");
    if (utt_max_tokens > 3 && vocab_size - action_pool - scenario_pool < 2)
        throw ConfigError("corpus: need at least two filler tokens to avoid "
                          "adjacent repeats");

    // Every intent must be reachable from the first/last pools.
    std::set<std::size_t> actions, scenarios;
    for (std::size_t t = 0; t < action_pool; ++t) actions.insert(action_group(t));
    for (std::size_t t = action_pool; t < action_pool + scenario_pool; ++t)
        scenarios.insert(scenario_group(t));
    for (std::size_t a = 0; a < num_actions; ++a)
        for (std::size_t s = 0; s < num_scenarios; ++s)
            if (!actions.count(a) || !scenarios.count(s))
                throw ConfigError("corpus: intent class " +
                                  intent_name(a * num_scenarios + s) +
                                  " is unreachable with these pools");
}

std::size_t label_of(const Transcript& transcript, const CorpusConfig& cfg) {
    if (transcript.empty())
        throw std::invalid_argument("label_of: empty transcript");
    return cfg.action_group(transcript.front()) * cfg.num_scenarios +
           cfg.scenario_group(transcript.back());
}

std::vector<double> token_prototype(std::size_t token, const CorpusConfig& cfg) {
    Rng rng(mix_seed(cfg.seed, "proto", token));
    std::vector<double> v(cfg.feature_dim);
    double norm2 = 0.0;
    for (double& x : v) {
        x = rng.gaussian();
        norm2 += x * x;
    }
    double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
    return v;
}

Tensor render_utterance(const Transcript& transcript, const CorpusConfig& cfg,
                        std::uint64_t utterance_seed) {
    Rng rng(mix_seed(cfg.seed, "render", utterance_seed));
    std::vector<std::vector<double>> rows;
    auto emit_run = [&](std::size_t token) {
        std::size_t n = cfg.frames_min +
                        rng.uniform_int(cfg.frames_max - cfg.frames_min + 1);
        std::vector<double> proto = token_prototype(token, cfg);
        for (std::size_t f = 0; f < n; ++f) {
            std::vector<double> frame(cfg.feature_dim);
            for (std::size_t k = 0; k < cfg.feature_dim; ++k)
                frame[k] = proto[k] + cfg.noise_sigma * rng.gaussian();
            rows.push_back(std::move(frame));
        }
    };
    for (std::size_t i = 0; i < transcript.size(); ++i) {
        if (cfg.silence_gaps && i > 0) emit_run(cfg.vocab_size);  // blank gap
        emit_run(transcript[i]);
    }
    return Tensor::from_rows(rows);
}

Utterance make_utterance(const CorpusConfig& cfg, const std::string& split,
                         std::size_t index) {
    std::uint64_t useed = mix_seed(cfg.seed, split, index);
    Rng rng(mix_seed(cfg.seed, "transcript-" + split, index));
    std::size_t u = cfg.utt_min_tokens +
                    rng.uniform_int(cfg.utt_max_tokens - cfg.utt_min_tokens + 1);
    Transcript w(u);
    w.front() = rng.uniform_int(cfg.action_pool);
    w.back() = cfg.action_pool + rng.uniform_int(cfg.scenario_pool);
    std::size_t filler_lo = cfg.action_pool + cfg.scenario_pool;
    std::size_t filler_n = cfg.vocab_size - filler_lo;
    for (std::size_t i = 1; i + 1 < u; ++i) {
        std::size_t tok = filler_lo + rng.uniform_int(filler_n);
        // adjacent repeats would shrink after CTC collapse; resample
        while (tok == w[i - 1])
            tok = filler_lo + rng.uniform_int(filler_n);
        w[i] = tok;
    }

    Utterance utt;
    std::ostringstream id;
    id << split << '-';
    std::string num = std::to_string(index);
    id << std::string(num.size() >= 6 ? 0 : 6 - num.size(), '0') << num;
    utt.id = id.str();
    utt.transcript = std::move(w);
    utt.label = label_of(utt.transcript, cfg);
    utt.frames = render_utterance(utt.transcript, cfg, useed);
    return utt;
}

SplitFiles corpus_paths(const std::string& dir) {
    SplitFiles f;
    f.train = dir + "/train.jsonl";
    f.valid = dir + "/valid.jsonl";
    f.test = dir + "/test.jsonl";
    f.vocab = dir + "/vocab.txt";
    f.labels = dir + "/labels.txt";
    f.manifest = dir + "/manifest.json";
    return f;
}

namespace {

std::string utterance_to_line(const Utterance& utt, const CorpusConfig& cfg) {
    nlohmann::json j;
    j["id"] = utt.id;
    nlohmann::json toks = nlohmann::json::array();
    for (std::size_t t : utt.transcript) toks.push_back(cfg.token_name(t));
    j["transcript"] = std::move(toks);
    j["label"] = cfg.intent_name(utt.label);
    nlohmann::json frames = nlohmann::json::array();
    for (std::size_t t = 0; t < utt.frames.rows(); ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t k = 0; k < utt.frames.cols(); ++k)
            row.push_back(utt.frames.at(t, k));
        frames.push_back(std::move(row));
    }
    j["frames"] = std::move(frames);
    return j.dump();
}

std::string hash_file_hex(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream buf;
    buf << is.rdbuf();
    std::string content = buf.str();
    std::uint64_t h = fnv1a64(content.data(), content.size());
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

}  // namespace

void generate_corpus(const CorpusConfig& cfg, const std::string& dir) {
    cfg.validate();
    fs::create_directories(dir);
    SplitFiles paths = corpus_paths(dir);

    struct Split {
        const char* name;
        std::size_t size;
        const std::string* path;
    };
    std::vector<Split> splits = {{"train", cfg.train_size, &paths.train},
                                 {"valid", cfg.valid_size, &paths.valid},
                                 {"test", cfg.test_size, &paths.test}};

    std::vector<std::size_t> train_label_counts(cfg.num_intents(), 0);
    for (const auto& split : splits) {
        std::ofstream os(*split.path, std::ios::trunc);
        if (!os) throw DataError("cannot write split file: " + *split.path);
        for (std::size_t i = 0; i < split.size; ++i) {
            Utterance utt = make_utterance(cfg, split.name, i);
            if (std::string(split.name) == "train")
                ++train_label_counts[utt.label];
            os << utterance_to_line(utt, cfg) << '\n';
        }
    }
    for (std::size_t c = 0; c < train_label_counts.size(); ++c)
        if (train_label_counts[c] == 0)
            throw DataError("generated train split is missing intent class " +
                            cfg.intent_name(c));

    {
        std::ofstream os(paths.vocab, std::ios::trunc);
        for (std::size_t t = 0; t < cfg.vocab_size; ++t)
            os << cfg.token_name(t) << '\n';
    }
    {
        std::ofstream os(paths.labels, std::ios::trunc);
        for (std::size_t c = 0; c < cfg.num_intents(); ++c)
            os << cfg.intent_name(c) << '\n';
    }
    {
        nlohmann::json manifest;
        manifest["corpus"] = cfg;
        nlohmann::json hashes;
        hashes["train.jsonl"] = hash_file_hex(paths.train);
        hashes["valid.jsonl"] = hash_file_hex(paths.valid);
        hashes["test.jsonl"] = hash_file_hex(paths.test);
        hashes["vocab.txt"] = hash_file_hex(paths.vocab);
        hashes["labels.txt"] = hash_file_hex(paths.labels);
        manifest["hashes"] = std::move(hashes);
        std::ofstream os(paths.manifest, std::ios::trunc);
        os << manifest.dump(2) << '\n';
    }
}

std::vector<Utterance> read_split(const std::string& path,
                                  const CorpusConfig& cfg) {
    std::ifstream is(path);
    if (!is) throw DataError("missing split file: " + path);

    std::map<std::string, std::size_t> token_ids, label_ids;
    for (std::size_t t = 0; t < cfg.vocab_size; ++t)
        token_ids[cfg.token_name(t)] = t;
    for (std::size_t c = 0; c < cfg.num_intents(); ++c)
        label_ids[cfg.intent_name(c)] = c;

    std::vector<Utterance> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        Utterance utt;
        utt.id = j.at("id").get<std::string>();
        for (const auto& tok : j.at("transcript")) {
            auto it = token_ids.find(tok.get<std::string>());
            if (it == token_ids.end())
                throw DataError("unknown token in " + path + ": " +
                                tok.get<std::string>());
            utt.transcript.push_back(it->second);
        }
        auto lit = label_ids.find(j.at("label").get<std::string>());
        if (lit == label_ids.end())
            throw DataError("unknown label in " + path);
        utt.label = lit->second;
        const auto& frames = j.at("frames");
        std::vector<std::vector<double>> rows;
        rows.reserve(frames.size());
        for (const auto& row : frames)
            rows.push_back(row.get<std::vector<double>>());
        utt.frames = Tensor::from_rows(rows);
        if (utt.frames.cols() != cfg.feature_dim)
            throw DataError("frame width mismatch in " + path);
        out.push_back(std::move(utt));
    }
    return out;
}

CorpusConfig read_manifest_config(const std::string& dir) {
    std::string path = corpus_paths(dir).manifest;
    std::ifstream is(path);
    if (!is) throw DataError("missing manifest: " + path);
    nlohmann::json j = nlohmann::json::parse(is);
    return j.at("corpus").get<CorpusConfig>();
}

}  // namespace ctcslu
