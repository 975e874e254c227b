#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "ctcslu/cli.hpp"
#include "ctcslu/serde.hpp"

using namespace ctcslu;
namespace fs = std::filesystem;

namespace {

std::string read_text(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const char* sub = nullptr) const {
        return sub ? (path / sub).string() : path.string();
    }
};

cli::RunConfig tiny_run(const TempDir& dir, std::uint64_t seed = 5050) {
    cli::RunConfig cfg;
    cfg.corpus.train_size = 64;
    cfg.corpus.valid_size = 16;
    cfg.corpus.test_size = 16;
    cfg.corpus.seed = seed;
    cfg.train.seed = seed;
    cfg.train.batch_size = 8;
    cfg.train.asr_max_epochs = 2;
    cfg.train.asr_patience = 1;
    cfg.train.joint_epochs = 2;
    cfg.data_dir = dir.str("data");
    cfg.out_dir = dir.str("out");
    return cfg;
}

int run_binary(const std::string& args) {
    std::string cmd = std::string(CTC_SLU_BIN) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("run config JSON round trip and partial merge") {
    cli::RunConfig cfg;
    cfg.corpus.noise_sigma = 0.11;
    cfg.train.joint_epochs = 7;
    nlohmann::json j = nlohmann::json::parse(cfg.to_json_string());
    CHECK(j.at("corpus").at("noise_sigma").get<double>() == 0.11);
    CHECK(j.at("train").at("joint_epochs").get<std::size_t>() == 7);
    CHECK(j.contains("model"));
    CHECK(j.contains("data"));
    CHECK(j.contains("out"));

    TempDir dir("ctcslu_cli_cfg");
    {
        std::ofstream os(dir.str("partial.json"));
        os << R"({"train": {"learning_rate": 0.5}, "out": "elsewhere"})";
    }
    cli::RunConfig merged;
    merged.merge_json_file(dir.str("partial.json"));
    CHECK(merged.train.learning_rate == 0.5);
    CHECK(merged.out_dir == "elsewhere");
    CHECK(merged.train.joint_epochs == 50);        // untouched default
    CHECK(merged.corpus.train_size == 2000);       // untouched section

    {
        std::ofstream os(dir.str("broken.json"));
        os << "{not json";
    }
    cli::RunConfig broken;
    CHECK_THROWS_AS(broken.merge_json_file(dir.str("broken.json")), ConfigError);
    CHECK_THROWS_AS(broken.merge_json_file(dir.str("missing.json")), ConfigError);
}

TEST_CASE("environment seed is applied to both corpus and trainer") {
    setenv("CTC_SLU_SEED", "9099", 1);
    cli::RunConfig cfg;
    cfg.apply_env_seed();
    CHECK(cfg.corpus.seed == 9099);
    CHECK(cfg.train.seed == 9099);
    setenv("CTC_SLU_SEED", "not-a-number", 1);
    CHECK_THROWS_AS(cfg.apply_env_seed(), ConfigError);
    unsetenv("CTC_SLU_SEED");
    cli::RunConfig plain;
    plain.apply_env_seed();
    CHECK(plain.corpus.seed == 1234);
}

TEST_CASE("gen writes the corpus and echoes the config; rerun is identical") {
    TempDir dir("ctcslu_cli_gen");
    cli::RunConfig cfg = tiny_run(dir);
    cli::cmd_gen(cfg);
    SplitFiles paths = corpus_paths(cfg.data_dir);
    for (const std::string* p : {&paths.train, &paths.valid, &paths.test,
                                 &paths.vocab, &paths.labels, &paths.manifest})
        CHECK(fs::exists(*p));
    CHECK(fs::exists(cfg.data_dir + "/config.json"));

    std::string manifest = read_text(paths.manifest);
    cli::cmd_gen(cfg);
    CHECK(read_text(paths.manifest) == manifest);

    cfg.corpus.utt_min_tokens = 1;
    CHECK_THROWS_AS(cli::cmd_gen(cfg), ConfigError);
}

TEST_CASE("train writes every artifact and is reproducible from its echo") {
    TempDir dir("ctcslu_cli_train");
    cli::RunConfig cfg = tiny_run(dir);
    cli::cmd_gen(cfg);

    std::ostringstream out;
    cli::TrainOutputs paths = cli::cmd_train(cfg, out);
    for (const std::string* p : {&paths.checkpoint, &paths.asr_checkpoint,
                                 &paths.trainlog, &paths.summary})
        CHECK(fs::exists(*p));
    CHECK(fs::exists(paths.checkpoint + ".json"));
    CHECK(out.str().find("mode=full") != std::string::npos);

    std::string log = read_text(paths.trainlog);
    CHECK(log.rfind("epoch,phase,ctc_loss,slu_loss,valid_acc,valid_wer,seconds\n",
                    0) == 0);

    nlohmann::json summary = nlohmann::json::parse(read_text(paths.summary));
    CHECK(summary.at("mode") == "full");
    CHECK(summary.contains("test"));
    CHECK(summary.contains("pre_joint_valid_wer"));
    CHECK(summary.contains("post_joint_valid_wer"));

    // Rerun from the echoed config into a fresh directory: byte-identical
    // checkpoints.
    cli::RunConfig echoed;
    echoed.merge_json_file(cfg.out_dir + "/config.json");
    echoed.out_dir = dir.str("out2");
    std::ostringstream out2;
    cli::TrainOutputs paths2 = cli::cmd_train(echoed, out2);
    CHECK(read_text(paths2.checkpoint) == read_text(paths.checkpoint));
    CHECK(read_text(paths2.asr_checkpoint) == read_text(paths.asr_checkpoint));
    CHECK(read_text(paths2.summary) == read_text(paths.summary));
}

TEST_CASE("checkpoint loading verifies the architecture sidecar") {
    TempDir dir("ctcslu_cli_ckpt");
    cli::RunConfig cfg = tiny_run(dir);
    cli::cmd_gen(cfg);
    std::ostringstream out;
    cli::TrainOutputs paths = cli::cmd_train(cfg, out);

    SluModel model = cli::load_model_checkpoint(paths.checkpoint);
    CHECK(model.config().vocab_size == cfg.corpus.vocab_size);
    CHECK(model.config().num_labels == cfg.corpus.num_intents());

    // Tamper with the recorded hash: the checkpoint must be rejected.
    nlohmann::json sidecar =
        nlohmann::json::parse(read_text(paths.checkpoint + ".json"));
    sidecar["arch_hash"] = "deadbeef";
    {
        std::ofstream os(paths.checkpoint + ".json", std::ios::trunc);
        os << sidecar.dump(2) << "\n";
    }
    CHECK_THROWS_AS(cli::load_model_checkpoint(paths.checkpoint), DataError);
    CHECK_THROWS_AS(cli::load_model_checkpoint(dir.str("nope.bin")), DataError);
}

TEST_CASE("eval reports metrics and the before/after WER pair") {
    TempDir dir("ctcslu_cli_eval");
    cli::RunConfig cfg = tiny_run(dir);
    cli::cmd_gen(cfg);
    std::ostringstream tout;
    cli::TrainOutputs paths = cli::cmd_train(cfg, tout);

    std::ostringstream out;
    cli::cmd_eval(cfg, paths.checkpoint, "test", paths.asr_checkpoint, out);
    nlohmann::json j = nlohmann::json::parse(out.str());
    CHECK(j.at("split") == "test");
    CHECK(j.contains("accuracy"));
    CHECK(j.contains("wer"));
    CHECK(j.contains("cer"));
    CHECK(j.contains("confusion"));
    CHECK(j.contains("accuracy_on_asr_errors"));
    CHECK(j.contains("wer_before_joint"));
    CHECK(j.contains("wer_after_joint"));
    CHECK(fs::exists(cfg.out_dir + "/eval_test.json"));

    std::ostringstream out2;
    cli::cmd_eval(cfg, paths.checkpoint, "valid", "", out2);
    nlohmann::json j2 = nlohmann::json::parse(out2.str());
    CHECK(!j2.contains("wer_before_joint"));
}

TEST_CASE("decode emits sorted id<TAB>tokens lines, byte-stable across reruns") {
    TempDir dir("ctcslu_cli_dec");
    cli::RunConfig cfg = tiny_run(dir);
    cli::cmd_gen(cfg);
    std::ostringstream tout;
    cli::TrainOutputs paths = cli::cmd_train(cfg, tout);

    std::ostringstream out;
    cli::cmd_decode(cfg, paths.checkpoint, "valid", out);
    std::string tsv_path = cfg.out_dir + "/decoded_valid.tsv";
    REQUIRE(fs::exists(tsv_path));
    std::string tsv = read_text(tsv_path);

    std::istringstream lines(tsv);
    std::string line, prev_id;
    std::size_t n = 0;
    while (std::getline(lines, line)) {
        auto tab = line.find('\t');
        REQUIRE(tab != std::string::npos);
        std::string id = line.substr(0, tab);
        CHECK(prev_id < id);  // strictly increasing ids
        prev_id = id;
        ++n;
    }
    CHECK(n == cfg.corpus.valid_size);

    cli::cmd_decode(cfg, paths.checkpoint, "valid", out);
    CHECK(read_text(tsv_path) == tsv);
}

TEST_CASE("select_split rejects unknown names") {
    Dataset data;
    CHECK_THROWS_AS(cli::select_split(data, "dev"), ConfigError);
}

TEST_CASE("binary exit codes") {
    TempDir dir("ctcslu_cli_bin");
    // No subcommand: usage error.
    CHECK(run_binary("") != 0);
    // Invalid corpus config via file: config error.
    {
        std::ofstream os(dir.str("bad.json"));
        os << R"({"corpus": {"utt_min_tokens": 1}})";
    }
    CHECK(run_binary("gen --config " + dir.str("bad.json") + " --data " +
                     dir.str("d")) == cli::kExitConfigError);
    // Missing dataset: data error.
    CHECK(run_binary("train --data " + dir.str("nowhere") + " --out " +
                     dir.str("o")) == cli::kExitDataError);
    // Unknown ablation flag value: config error.
    {
        std::ofstream os(dir.str("gen.json"));
        os << R"({"corpus": {"train_size": 64, "valid_size": 8, "test_size": 8, "seed": 6060}})";
    }
    CHECK(run_binary("gen --config " + dir.str("gen.json") + " --data " +
                     dir.str("d2")) == cli::kExitOk);
    CHECK(run_binary("train --data " + dir.str("d2") + " --out " + dir.str("o2") +
                     " --ablation bogus") == cli::kExitConfigError);
}
