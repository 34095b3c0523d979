#include <doctest.h>

#include <cmath>
#include <sstream>

#include "kge/checkpoint.hpp"
#include "kge/train.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace kge;

namespace {

TrainConfig family_config() {
    TrainConfig cfg;
    cfg.model = {ModelKind::ComplEx, 8};
    cfg.loss = LossKind::KvsAllBce;
    cfg.optimizer = OptimizerKind::Adam;
    cfg.lr = 0.05;
    cfg.batch_size = 128;
    cfg.epochs = 10;
    cfg.seed = 7;
    return cfg;
}

}  // namespace

TEST_CASE("bce examples and stability") {
    const std::vector<double> zero{0.0};
    CHECK(bce_loss(zero, std::vector<double>{1.0}) == doctest::Approx(std::log(2.0)));
    CHECK(bce_loss(zero, std::vector<double>{0.0}) == doctest::Approx(std::log(2.0)));

    // Extreme logits stay finite in the stable form.
    CHECK(std::isfinite(bce_term(1000.0, 0.0)));
    CHECK(std::isfinite(bce_term(-1000.0, 1.0)));

    RngState rng = RngState::from_seed(2);
    std::vector<double> logits, labels;
    for (int i = 0; i < 64; ++i) {
        logits.push_back((rng.uniform_real() - 0.5) * 20.0);
        labels.push_back(rng.coin() ? 0.9 : 0.1);
    }
    const double got = bce_loss(logits, labels);
    const double want = oracle::naive_bce(logits, labels);
    CHECK(std::fabs(got - want) / std::fabs(want) < 1e-6);
}

TEST_CASE("negative_sample determinism and distribution") {
    RngState a = RngState::from_seed(5);
    RngState b = RngState::from_seed(5);
    const Triple t{3, 1, 7};
    CHECK(negative_sample(t, 10, 10, a) == negative_sample(t, 10, 10, b));

    // Sentinel head/tail outside the replacement range make every corruption
    // attributable to one slot.
    const Triple sentinel{100, 1, 200};
    RngState rng = RngState::from_seed(6);
    std::vector<std::uint64_t> counts(10, 0);
    std::uint64_t head_corruptions = 0;
    const std::uint32_t k = 1000;
    for (const auto& c : negative_sample(sentinel, k, 10, rng)) {
        CHECK(c.relation == sentinel.relation);
        if (c.head != sentinel.head) {
            ++head_corruptions;
            ++counts[c.head];
            CHECK(c.tail == sentinel.tail);
        } else {
            ++counts[c.tail];
        }
    }
    for (std::uint64_t e = 0; e < 10; ++e) {
        const double freq = static_cast<double>(counts[e]) / k;
        CHECK(freq > 0.07);  // 0.1 +- 0.03
        CHECK(freq < 0.13);
    }
    const double head_ratio = static_cast<double>(head_corruptions) / k;
    CHECK(head_ratio > 0.45);  // 0.5 +- 0.05
    CHECK(head_ratio < 0.55);
}

TEST_CASE("sgd step by hand") {
    TrainConfig cfg;
    cfg.model = {ModelKind::DistMult, 2};
    cfg.optimizer = OptimizerKind::Sgd;
    cfg.lr = 0.1;

    EmbeddingStore store;
    store.entity = Matrix(2, 2);
    store.relation = Matrix(1, 2);
    store.entity.row(0)[0] = 1.0f;
    store.entity.row(0)[1] = 1.0f;
    store.entity.row(1)[0] = 5.0f;

    OptimizerState opt;
    SparseGradients grads;
    grads.entity[0] = {1.0, 2.0};
    apply_gradients(store, opt, grads, cfg);

    CHECK(store.entity.row(0)[0] == doctest::Approx(0.9));
    CHECK(store.entity.row(0)[1] == doctest::Approx(0.8));
    CHECK(store.entity.row(1)[0] == 5.0f);  // untouched row bit-identical
}

TEST_CASE("adam first step matches the closed form") {
    TrainConfig cfg;
    cfg.model = {ModelKind::DistMult, 1};
    cfg.optimizer = OptimizerKind::Adam;
    cfg.lr = 0.01;

    EmbeddingStore store;
    store.entity = Matrix(1, 1);
    store.relation = Matrix(1, 1);
    store.entity.row(0)[0] = 1.0f;
    OptimizerState opt = OptimizerState::create(1, 1, 1, OptimizerKind::Adam);

    SparseGradients grads;
    grads.entity[0] = {1.0};
    apply_gradients(store, opt, grads, cfg);

    // mhat = vhat = 1 after one unit-gradient step: update = -lr/(1+eps').
    CHECK(store.entity.row(0)[0] == doctest::Approx(1.0 - 0.00999999).epsilon(1e-6));
    CHECK(opt.step == 1);
}

TEST_CASE("zero gradient leaves rows unchanged") {
    TrainConfig cfg;
    cfg.model = {ModelKind::DistMult, 2};
    cfg.optimizer = OptimizerKind::Adam;
    cfg.lr = 0.5;

    EmbeddingStore store = init_embeddings(cfg.model, 3, 1, 1);
    const EmbeddingStore before = store;
    OptimizerState opt = OptimizerState::create(3, 1, 2, OptimizerKind::Adam);

    SparseGradients grads;
    grads.entity[1] = {0.0, 0.0};
    apply_gradients(store, opt, grads, cfg);
    // Zero gradient, zero moments: mhat = 0, update = 0 exactly.
    CHECK(store == before);

    SparseGradients bad;
    bad.entity[0] = {std::numeric_limits<double>::infinity(), 0.0};
    CHECK_THROWS_AS(apply_gradients(store, opt, bad, cfg), NonFiniteGradient);
    CHECK_THROWS_AS(([&] {
                        SparseGradients oob;
                        oob.entity[9] = {0.0, 0.0};
                        apply_gradients(store, opt, oob, cfg);
                    }()),
                    IndexOutOfRange);
}

TEST_CASE("20-step adam trajectory matches a 64-bit reference within 1e-6") {
    TrainConfig cfg;
    cfg.model = {ModelKind::DistMult, 4};
    cfg.optimizer = OptimizerKind::Adam;
    cfg.lr = 0.05;

    EmbeddingStore store;
    store.entity = Matrix(1, 4);
    store.relation = Matrix(1, 4);
    const std::vector<double> start{1.0, -2.0, 0.5, 3.0};
    const std::vector<double> quad{0.8, 1.2, 2.0, 0.4};  // f(x) = 0.5*sum a_i x_i^2
    for (int i = 0; i < 4; ++i) store.entity.row(0)[i] = static_cast<float>(start[i]);
    OptimizerState opt = OptimizerState::create(1, 1, 4, OptimizerKind::Adam);

    std::vector<double> ref = start;
    oracle::ReferenceAdam reference(4, cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon);

    for (int step = 0; step < 20; ++step) {
        SparseGradients grads;
        std::vector<double> g(4);
        for (int i = 0; i < 4; ++i) g[i] = quad[i] * static_cast<double>(store.entity.row(0)[i]);
        grads.entity[0] = g;
        apply_gradients(store, opt, grads, cfg);

        std::vector<double> g_ref(4);
        for (int i = 0; i < 4; ++i) g_ref[i] = quad[i] * ref[i];
        reference.update(ref, g_ref);

        for (int i = 0; i < 4; ++i) {
            const double got = store.entity.row(0)[i];
            CHECK(std::fabs(got - ref[i]) / std::max(std::fabs(ref[i]), 1e-12) < 1e-6);
        }
    }
}

TEST_CASE("train_epoch batching and determinism") {
    const auto dataset = testutil::family_dataset();
    TrainConfig cfg = family_config();

    auto run = [&](TrainConfig c, int epochs) {
        auto store = init_embeddings(c.model, dataset.vocab.entity_count(),
                                     dataset.vocab.relation_count(), c.seed);
        auto opt = OptimizerState::create(dataset.vocab.entity_count(),
                                          dataset.vocab.relation_count(), c.model.dim,
                                          c.optimizer);
        Trainer trainer(dataset, store, opt, c, RngState::from_seed(c.seed), 0, nullptr, 2);
        std::vector<double> losses;
        for (int e = 0; e < epochs; ++e) losses.push_back(trainer.train_epoch());
        return std::pair{losses, store};
    };

    const auto [l1, s1] = run(cfg, 5);
    const auto [l2, s2] = run(cfg, 5);
    CHECK(l1 == l2);  // bit-identical loss sequences
    CHECK(s1 == s2);

    // batch_size >= queries -> one batch per epoch -> one progress record.
    std::ostringstream sink;
    ProgressLogger progress(&sink);
    auto store = init_embeddings(cfg.model, dataset.vocab.entity_count(),
                                 dataset.vocab.relation_count(), cfg.seed);
    auto opt = OptimizerState::create(dataset.vocab.entity_count(),
                                      dataset.vocab.relation_count(), cfg.model.dim,
                                      cfg.optimizer);
    Trainer trainer(dataset, store, opt, cfg, RngState::from_seed(cfg.seed), 0, &progress, 1);
    trainer.train_epoch();
    std::vector<std::string> lines;
    for (std::string line; std::getline(sink, line);) lines.push_back(line);
    REQUIRE(lines.size() == 1);
    const auto record = nlohmann::json::parse(lines[0]);
    CHECK(record.at("epoch") == 1);
    CHECK(record.at("batch") == 1);
    CHECK(record.at("loss").is_number());
    CHECK(record.at("tps").is_number());
}

TEST_CASE("loss decreases on the family KG") {
    const auto dataset = testutil::family_dataset();
    TrainConfig cfg = family_config();
    cfg.model = {ModelKind::DistMult, 8};

    auto store = init_embeddings(cfg.model, dataset.vocab.entity_count(),
                                 dataset.vocab.relation_count(), cfg.seed);
    auto opt = OptimizerState::create(dataset.vocab.entity_count(),
                                      dataset.vocab.relation_count(), cfg.model.dim,
                                      cfg.optimizer);
    Trainer trainer(dataset, store, opt, cfg, RngState::from_seed(cfg.seed), 0, nullptr, 2);
    const double first = trainer.train_epoch();
    double last = first;
    for (int e = 1; e < 200; ++e) last = trainer.train_epoch();
    CHECK(last < first);
}

TEST_CASE("negative-sampling training runs and learns") {
    const auto dataset = testutil::family_dataset();
    TrainConfig cfg = family_config();
    cfg.loss = LossKind::NegSampleBce;
    cfg.negatives = 4;
    cfg.batch_size = 4;

    auto store = init_embeddings(cfg.model, dataset.vocab.entity_count(),
                                 dataset.vocab.relation_count(), cfg.seed);
    auto opt = OptimizerState::create(dataset.vocab.entity_count(),
                                      dataset.vocab.relation_count(), cfg.model.dim,
                                      cfg.optimizer);
    Trainer trainer(dataset, store, opt, cfg, RngState::from_seed(cfg.seed), 0, nullptr, 2);
    const double first = trainer.train_epoch();
    double last = first;
    for (int e = 1; e < 60; ++e) last = trainer.train_epoch();
    CHECK(last < first);
}

TEST_CASE("thread count does not change training results") {
    const auto dataset = testutil::family_dataset();
    const TrainConfig cfg = family_config();

    auto run = [&](unsigned threads) {
        auto store = init_embeddings(cfg.model, dataset.vocab.entity_count(),
                                     dataset.vocab.relation_count(), cfg.seed);
        auto opt = OptimizerState::create(dataset.vocab.entity_count(),
                                          dataset.vocab.relation_count(), cfg.model.dim,
                                          cfg.optimizer);
        Trainer trainer(dataset, store, opt, cfg, RngState::from_seed(cfg.seed), 0, nullptr,
                        threads);
        std::vector<double> losses;
        for (int e = 0; e < 3; ++e) losses.push_back(trainer.train_epoch());
        return std::pair{losses, store};
    };

    const auto [l1, s1] = run(1);
    const auto [l4, s4] = run(4);
    CHECK(l1 == l4);
    CHECK(s1 == s4);
}

TEST_CASE("config validation") {
    TrainConfig cfg = family_config();
    cfg.lr = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = family_config();
    cfg.label_smoothing = 0.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = family_config();
    cfg.loss = LossKind::NegSampleBce;
    cfg.negatives = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
