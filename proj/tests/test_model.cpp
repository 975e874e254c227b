#include <doctest.h>

#include <cmath>
#include <vector>

#include "ctcslu/model.hpp"
#include "ctcslu/rng.hpp"

using namespace ctcslu;

namespace {

Tensor random_frames(std::size_t T, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    Tensor x({T, d});
    for (double& v : x.values()) v = rng.uniform(-1, 1);
    return x;
}

ModelConfig small_config() {
    ModelConfig cfg;
    cfg.feature_dim = 8;
    cfg.conv_layers = {{3, 1, 12}, {3, 2, 12}};
    cfg.vocab_size = 5;
    cfg.utt_hidden = 16;
    cfg.num_labels = 6;
    return cfg;
}

// Max relative error of the store's gradients vs central differences on the
// joint loss over the given batch.
double joint_loss_fd(SluModel& model, const std::vector<BatchItem>& batch,
                     const LossWeights& w, std::size_t subsample,
                     std::uint64_t seed) {
    model.params().zero_grad();
    model.joint_loss(batch, w, true);
    auto loss_fn = [&](ParamStore&) {
        return model.joint_loss(batch, w, false).total;
    };
    return nn::finite_diff_check(loss_fn, model.params(), 1e-5, subsample, seed);
}

}  // namespace

TEST_CASE("output_length follows the ceil-divide stride arithmetic") {
    ModelConfig cfg;  // strides 1, 2
    CHECK(cfg.output_length(10) == 5);
    CHECK(cfg.output_length(9) == 5);
    CHECK(cfg.output_length(1) == 1);
    CHECK(cfg.subsample_factor() == 2);

    ModelConfig deep;
    deep.conv_layers = {{3, 2, 8}, {3, 2, 8}};
    CHECK(deep.output_length(10) == 3);  // 10 -> 5 -> 3
    CHECK(deep.subsample_factor() == 4);

    ModelConfig flat;
    flat.conv_layers = {};
    CHECK(flat.output_length(7) == 7);
}

TEST_CASE("arch_hash distinguishes configurations") {
    ModelConfig a, b;
    CHECK(a.arch_hash() == b.arch_hash());
    b.vocab_size += 1;
    CHECK(a.arch_hash() != b.arch_hash());
    b = a;
    b.tap = TapMode::kHidden;
    CHECK(a.arch_hash() != b.arch_hash());
    b = a;
    b.conv_layers[1].stride = 1;
    CHECK(a.arch_hash() != b.arch_hash());
}

TEST_CASE("constructor validates the configuration") {
    ModelConfig cfg = small_config();
    cfg.num_labels = 0;
    CHECK_THROWS_AS(SluModel(cfg, 1), ConfigError);
    cfg = small_config();
    cfg.conv_layers[0].stride = 0;
    CHECK_THROWS_AS(SluModel(cfg, 1), ConfigError);
    CHECK_THROWS_AS(tap_mode_from_string("nope"), ConfigError);
}

TEST_CASE("identity conv layer reduces the encoder to gelu(X)") {
    ModelConfig cfg;
    cfg.feature_dim = 4;
    cfg.conv_layers = {{1, 1, 4}};
    cfg.vocab_size = 3;
    cfg.utt_hidden = 8;
    cfg.num_labels = 2;
    SluModel model(cfg, 7);
    Tensor& w = model.params().value("enc.conv0.weight");
    w.fill(0.0);
    for (std::size_t i = 0; i < 4; ++i) w.at(i, i, 0) = 1.0;
    model.params().value("enc.conv0.bias").fill(0.0);

    Tensor x = random_frames(6, 4, 11);
    ForwardTrace tr = model.forward(x);
    Tensor expect = nn::gelu(x);
    REQUIRE(tr.H.dims() == expect.dims());
    for (std::size_t i = 0; i < expect.numel(); ++i)
        CHECK(tr.H[i] == doctest::Approx(expect[i]).epsilon(1e-15));
}

TEST_CASE("stride-2 encoder halves the sequence length") {
    SluModel model(small_config(), 3);
    ForwardTrace tr = model.forward(random_frames(10, 8, 5));
    CHECK(tr.H.rows() == 5);
    CHECK(tr.frame_logits.rows() == 5);
    CHECK(tr.frame_logits.cols() == 6);  // V+1
    CHECK(tr.label_logits.size() == 6);
}

TEST_CASE("forward rejects malformed inputs") {
    SluModel model(small_config(), 3);
    CHECK_THROWS_AS(model.forward(random_frames(10, 5, 1)), ShapeError);
    CHECK_THROWS_AS(model.forward(Tensor({0, 8})), ShapeError);
}

TEST_CASE("frame classifier equals a per-frame linear oracle") {
    SluModel model(small_config(), 13);
    Tensor x = random_frames(7, 8, 17);
    ForwardTrace tr = model.forward(x);
    const Tensor& w = model.params().value("frame.weight");
    const Tensor& b = model.params().value("frame.bias");
    for (std::size_t t = 0; t < tr.H.rows(); ++t) {
        Tensor row({tr.H.cols()});
        for (std::size_t i = 0; i < tr.H.cols(); ++i) row[i] = tr.H.at(t, i);
        Tensor y = nn::linear_forward(row, w, b);
        for (std::size_t k = 0; k < 6; ++k)
            CHECK(tr.frame_logits.at(t, k) == doctest::Approx(y[k]).epsilon(1e-14));
    }
}

TEST_CASE("zeroed frame classifier emits its bias everywhere") {
    SluModel model(small_config(), 13);
    model.params().value("frame.weight").fill(0.0);
    Tensor& b = model.params().value("frame.bias");
    for (std::size_t k = 0; k < 6; ++k) b[k] = 0.1 * static_cast<double>(k);
    ForwardTrace tr = model.forward(random_frames(9, 8, 19));
    for (std::size_t t = 0; t < tr.frame_logits.rows(); ++t)
        for (std::size_t k = 0; k < 6; ++k)
            CHECK(tr.frame_logits.at(t, k) == b[k]);
}

TEST_CASE("tap modes: hidden aliases H, probabilities are row-softmaxed logits") {
    ModelConfig cfg = small_config();
    Tensor x = random_frames(10, 8, 23);

    cfg.tap = TapMode::kHidden;
    SluModel hid(cfg, 5);
    ForwardTrace trh = hid.forward(x);
    CHECK(trh.tap_input.values() == trh.H.values());

    cfg.tap = TapMode::kProbabilities;
    SluModel prob(cfg, 5);
    ForwardTrace trp = prob.forward(x);
    for (std::size_t t = 0; t < trp.tap_input.rows(); ++t) {
        double sum = 0.0;
        for (std::size_t k = 0; k < 6; ++k) sum += trp.tap_input.at(t, k);
        CHECK(std::abs(sum - 1.0) < 1e-12);
        auto sm = nn::softmax(trp.frame_logits.row(t));
        for (std::size_t k = 0; k < 6; ++k)
            CHECK(trp.tap_input.at(t, k) == doctest::Approx(sm[k]).epsilon(1e-12));
    }

    cfg.tap = TapMode::kLogits;
    SluModel log(cfg, 5);
    ForwardTrace trl = log.forward(x);
    CHECK(trl.tap_input.values() == trl.frame_logits.values());
    // logits and probabilities share the frame classifier, so the same seed
    // gives identical frame logits and softmax(logits tap) == prob tap.
    for (std::size_t i = 0; i < trl.frame_logits.numel(); ++i)
        CHECK(trl.frame_logits[i] == trp.frame_logits[i]);
}

TEST_CASE("constant-over-time tap pools to the single frame value") {
    ModelConfig cfg = small_config();
    cfg.conv_layers = {};  // tap over raw-feature hidden states
    cfg.tap = TapMode::kHidden;
    SluModel model(cfg, 31);
    Tensor x({4, 8});
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t i = 0; i < 8; ++i) x.at(t, i) = 0.1 * static_cast<double>(i);
    ForwardTrace tr = model.forward(x);
    for (std::size_t i = 0; i < 8; ++i)
        CHECK(tr.pool.pooled[i] == doctest::Approx(tr.tap_input.at(0, i)).epsilon(1e-15));
}

TEST_CASE("joint loss arithmetic and linearity in the weights") {
    SluModel model(small_config(), 41);
    Tensor x0 = random_frames(12, 8, 43);
    Tensor x1 = random_frames(9, 8, 47);
    std::vector<BatchItem> batch = {{&x0, {1, 2}, 3}, {&x1, {0, 4, 0}, 1}};

    LossWeights w{0.5, 1.0};
    auto res = model.joint_loss(batch, w, false);
    CHECK(res.ctc_skipped == 0);
    CHECK(res.total ==
          doctest::Approx(0.5 * res.ctc_mean + 1.0 * res.slu_mean).epsilon(1e-15));

    LossWeights dbl{1.0, 2.0};
    auto res2 = model.joint_loss(batch, dbl, false);
    CHECK(res2.total == doctest::Approx(2.0 * res.total).epsilon(1e-12));
    CHECK(res2.ctc_mean == doctest::Approx(res.ctc_mean).epsilon(1e-15));

    LossWeights asr{0.5, 0.0};
    auto res3 = model.joint_loss(batch, asr, false);
    CHECK(res3.total == doctest::Approx(0.5 * res3.ctc_mean).epsilon(1e-15));
}

TEST_CASE("infeasible items are skipped and counted") {
    SluModel model(small_config(), 53);
    Tensor good = random_frames(12, 8, 59);
    Tensor tiny = random_frames(2, 8, 61);  // T'=1, transcript of 3 impossible
    std::vector<BatchItem> batch = {{&good, {1, 2}, 0}, {&tiny, {0, 1, 2}, 1}};
    LossWeights w{0.5, 1.0};
    auto res = model.joint_loss(batch, w, false);
    CHECK(res.ctc_skipped == 1);
    CHECK(std::isfinite(res.ctc_mean));
    CHECK(std::isfinite(res.total));

    // CTC mean averages over the feasible item only.
    std::vector<BatchItem> solo = {{&good, {1, 2}, 0}};
    auto ref = model.joint_loss(solo, w, false);
    CHECK(res.ctc_mean == doctest::Approx(ref.ctc_mean).epsilon(1e-12));

    std::vector<BatchItem> all_bad = {{&tiny, {0, 1, 2}, 1}};
    CHECK_THROWS_AS(model.joint_loss(all_bad, LossWeights{1.0, 0.0}, true),
                    StateError);
}

TEST_CASE("alpha_slu=0 leaves utterance-head gradients exactly zero") {
    SluModel model(small_config(), 67);
    Tensor x = random_frames(12, 8, 71);
    std::vector<BatchItem> batch = {{&x, {1, 2, 3}, 2}};
    model.params().zero_grad();
    model.joint_loss(batch, LossWeights{0.5, 0.0}, true);
    bool encoder_touched = false;
    for (const auto& e : model.params().entries()) {
        bool head = e.name.rfind("utt.", 0) == 0 || e.name.rfind("cls.", 0) == 0;
        for (double g : e.grad.values()) {
            if (head) CHECK(g == 0.0);
            else if (g != 0.0) encoder_touched = true;
        }
    }
    CHECK(encoder_touched);
}

TEST_CASE("head_param_count covers the utterance encoder and label classifier") {
    ModelConfig cfg = small_config();
    SluModel model(cfg, 73);
    // utt.fc1 (16x6 + 16) + utt.fc2 (16x16 + 16) + cls (6x16 + 6)
    std::size_t expect = (16 * 6 + 16) + (16 * 16 + 16) + (6 * 16 + 6);
    CHECK(model.head_param_count() == expect);
    CHECK(model.params().num_params() > expect);
}

TEST_CASE("end-to-end gradients match finite differences") {
    Tensor x0 = random_frames(12, 8, 101);
    Tensor x1 = random_frames(10, 8, 103);
    std::vector<BatchItem> batch = {{&x0, {1, 2}, 3}, {&x1, {0, 4}, 5}};
    LossWeights w{0.5, 1.0};

    SUBCASE("logits tap") {
        SluModel model(small_config(), 107);
        CHECK(joint_loss_fd(model, batch, w, 200, 1) < 1e-4);
    }
    SUBCASE("hidden tap") {
        ModelConfig cfg = small_config();
        cfg.tap = TapMode::kHidden;
        SluModel model(cfg, 109);
        CHECK(joint_loss_fd(model, batch, w, 200, 2) < 1e-4);
    }
    SUBCASE("probabilities tap") {
        ModelConfig cfg = small_config();
        cfg.tap = TapMode::kProbabilities;
        SluModel model(cfg, 113);
        CHECK(joint_loss_fd(model, batch, w, 200, 3) < 1e-4);
    }
    SUBCASE("cnn utterance encoder") {
        ModelConfig cfg = small_config();
        cfg.cnn_utterance_encoder = true;
        cfg.cnn_channels = 10;
        SluModel model(cfg, 127);
        CHECK(joint_loss_fd(model, batch, w, 200, 4) < 1e-4);
    }
}

TEST_CASE("tap_detach blocks trunk gradients from the classifier branch") {
    ModelConfig cfg = small_config();
    cfg.tap = TapMode::kProbabilities;
    cfg.tap_detach = true;
    SluModel model(cfg, 131);
    Tensor x = random_frames(12, 8, 137);
    std::vector<BatchItem> batch = {{&x, {1, 2}, 3}};
    model.params().zero_grad();
    // SLU-only loss: with the tap detached nothing reaches the encoder.
    model.joint_loss(batch, LossWeights{0.0, 1.0}, true);
    for (const auto& e : model.params().entries()) {
        if (e.name.rfind("enc.", 0) == 0 || e.name.rfind("frame", 0) == 0)
            for (double g : e.grad.values()) CHECK(g == 0.0);
    }
}
