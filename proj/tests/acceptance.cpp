// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Time budgets are checked with wall clocks around the relevant work.

#include <httplib.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "kge/binio.hpp"
#include "kge/checkpoint.hpp"
#include "kge/eval.hpp"
#include "kge/ingest.hpp"
#include "kge/serve.hpp"
#include "kge/shard.hpp"
#include "kge/train.hpp"
#include "kge/vocab.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace kge;

namespace {

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << (detail.str().empty() ? "" : "; ") << what;
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1. parser determinism across chunk counts --------------------------

bool criterion_parser_determinism(Check& c) {
    testutil::TempDir tmp;
    std::string content;
    RngState rng = RngState::from_seed(101);
    for (int i = 0; i < 10000; ++i) {
        content += "<http://example.org/e" + std::to_string(rng.uniform_index(2000)) +
                   "> <http://example.org/r" + std::to_string(rng.uniform_index(40)) +
                   "> <http://example.org/e" + std::to_string(rng.uniform_index(2000)) +
                   "> .\n";
    }
    const auto path = tmp.path("synthetic.nt");
    testutil::write_text(path, content);

    const auto t0 = std::chrono::steady_clock::now();
    const auto base = parse_file(path, TripleFormat::NTriples, 1, 1);
    c.expect(base.triples.size() == 10000, "expected 10000 triples");
    for (std::uint64_t n : {2, 4, 8, 16}) {
        const auto run = parse_file(path, TripleFormat::NTriples, n, 4);
        c.expect(run.triples == base.triples,
                 "triple sequence differs at n_chunks=" + std::to_string(n));
        c.expect(run.errors.empty(), "unexpected parse errors");
    }
    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 5.0, "took " + std::to_string(elapsed) + "s (budget 5s)");
    return c.ok;
}

// ---- 2. gradient suite ---------------------------------------------------

bool criterion_gradients(Check& c) {
    const struct {
        ModelKind kind;
        oracle::ScoreFn fn;
    } cases[] = {{ModelKind::DistMult, oracle::distmult},
                 {ModelKind::ComplEx, oracle::complex_score},
                 {ModelKind::QMult, oracle::qmult}};

    const auto t0 = std::chrono::steady_clock::now();
    RngState rng = RngState::from_seed(202);
    for (const auto& m : cases) {
        for (std::size_t d : {4, 8}) {
            for (int trial = 0; trial < 50; ++trial) {
                const auto h = testutil::random_row(rng, d, 1.0);
                const auto r = testutil::random_row(rng, d, 1.0);
                const auto t = testutil::random_row(rng, d, 1.0);
                const auto got = score_gradient({m.kind, d}, h, r, t);
                const auto want = oracle::finite_diff(m.fn, testutil::widen(h),
                                                      testutil::widen(r), testutil::widen(t));
                for (std::size_t i = 0; i < d; ++i) {
                    const bool fine =
                        oracle::rel_error(got.d_head[i], want.d_head[i]) < 1e-4 &&
                        oracle::rel_error(got.d_rel[i], want.d_rel[i]) < 1e-4 &&
                        oracle::rel_error(got.d_tail[i], want.d_tail[i]) < 1e-4;
                    c.expect(fine, std::string("gradient mismatch for ") +
                                       model_kind_name(m.kind) + " d=" + std::to_string(d));
                    if (!fine) return c.ok;
                }
            }
        }
    }
    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 1.0, "took " + std::to_string(elapsed) + "s (budget 1s)");
    return c.ok;
}

// ---- 3. reduction equivalences -------------------------------------------

bool criterion_reductions(Check& c) {
    RngState rng = RngState::from_seed(303);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t half = 4;
        auto h = testutil::random_row(rng, 2 * half, 1.0);
        auto r = testutil::random_row(rng, 2 * half, 1.0);
        auto t = testutil::random_row(rng, 2 * half, 1.0);
        for (std::size_t i = half; i < 2 * half; ++i) h[i] = r[i] = t[i] = 0.0f;
        const std::vector<float> hh(h.begin(), h.begin() + half);
        const std::vector<float> rh(r.begin(), r.begin() + half);
        const std::vector<float> th(t.begin(), t.begin() + half);
        c.expect(score_complex(h, r, t) == score_distmult(hh, rh, th),
                 "imag-free complex != distmult");

        const std::size_t quarter = 2;
        auto hq = testutil::random_row(rng, 4 * quarter, 1.0);
        auto rq = testutil::random_row(rng, 4 * quarter, 1.0);
        auto tq = testutil::random_row(rng, 4 * quarter, 1.0);
        for (std::size_t i = quarter; i < 4 * quarter; ++i) hq[i] = rq[i] = tq[i] = 0.0f;
        const std::vector<float> ha(hq.begin(), hq.begin() + quarter);
        const std::vector<float> ra(rq.begin(), rq.begin() + quarter);
        const std::vector<float> ta(tq.begin(), tq.begin() + quarter);
        c.expect(score_qmult(hq, rq, tq) == score_distmult(ha, ra, ta),
                 "real-only qmult != distmult");
    }
    return c.ok;
}

// ---- 4. sharding transparency --------------------------------------------

bool criterion_sharding(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelSpec spec{ModelKind::ComplEx, 8};
    const auto store = init_embeddings(spec, 10, 3, 404);
    for (std::uint64_t n : {1, 2, 3, 4}) {
        const auto sharded = shard_parameters(store, n);
        for (std::uint64_t h = 0; h < 10; ++h)
            for (std::uint64_t r = 0; r < 3; ++r)
                c.expect(sharded_kvsall(spec, sharded, h, r) == score_kvsall(spec, store, h, r),
                         "sharded/unsharded mismatch at shards=" + std::to_string(n));
    }
    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 1.0, "took " + std::to_string(elapsed) + "s (budget 1s)");
    return c.ok;
}

// ---- 5. end-to-end learning on the family KG ------------------------------

Checkpoint train_family(std::uint64_t epochs, std::uint64_t total_target,
                        std::vector<double>* losses = nullptr, unsigned threads = 4) {
    const auto dataset = testutil::family_dataset();
    Checkpoint ckpt;
    ckpt.config.model = {ModelKind::ComplEx, 16};
    ckpt.config.loss = LossKind::KvsAllBce;
    ckpt.config.optimizer = OptimizerKind::Adam;
    ckpt.config.lr = 0.05;
    ckpt.config.seed = 7;
    ckpt.config.epochs = total_target;
    ckpt.vocab = dataset.vocab;
    ckpt.store = init_embeddings(ckpt.config.model, ckpt.vocab.entity_count(),
                                 ckpt.vocab.relation_count(), ckpt.config.seed);
    ckpt.opt = OptimizerState::create(ckpt.vocab.entity_count(), ckpt.vocab.relation_count(),
                                      ckpt.config.model.dim, ckpt.config.optimizer);
    ckpt.rng = RngState::from_seed(ckpt.config.seed);

    Trainer trainer(dataset, ckpt.store, ckpt.opt, ckpt.config, ckpt.rng,
                    ckpt.completed_epochs, nullptr, threads);
    for (std::uint64_t e = 0; e < epochs; ++e) {
        const double loss = trainer.train_epoch();
        if (losses) losses->push_back(loss);
    }
    ckpt.completed_epochs = trainer.completed_epochs();
    ckpt.rng = trainer.rng_state();
    return ckpt;
}

bool criterion_end_to_end(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> losses;
    const auto ckpt = train_family(300, 300, &losses);
    const auto dataset = testutil::family_dataset();

    c.expect(losses.back() < 0.5 * losses.front(),
             "loss ratio " + std::to_string(losses.back() / losses.front()) + " >= 0.5");

    const auto report = evaluate(dataset.triples, dataset.triples, ckpt.config.model,
                                 ckpt.store, 4);
    c.expect(report.mrr >= 0.95, "train MRR " + std::to_string(report.mrr) + " < 0.95");

    // Every observed triple must outscore its reversal, except when the
    // reversal is itself an observed fact (symmetric relations).
    std::uint64_t compared = 0;
    for (const auto& t : dataset.triples) {
        const Triple reversed{t.tail, t.relation, t.head};
        bool reversed_is_fact = false;
        for (const auto& k : dataset.triples) reversed_is_fact |= k == reversed;
        if (reversed_is_fact) continue;
        ++compared;
        const double straight = score_triple(ckpt.config.model, ckpt.store.entity_row(t.head),
                                             ckpt.store.relation_row(t.relation),
                                             ckpt.store.entity_row(t.tail));
        const double inverted = score_triple(ckpt.config.model,
                                             ckpt.store.entity_row(reversed.head),
                                             ckpt.store.relation_row(reversed.relation),
                                             ckpt.store.entity_row(reversed.tail));
        c.expect(straight > inverted,
                 decode_triple(t, dataset.vocab).head + " " +
                     decode_triple(t, dataset.vocab).relation + " does not beat its reversal");
    }
    c.expect(compared >= 10, "too few asymmetric comparisons");

    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 30.0, "took " + std::to_string(elapsed) + "s (budget 30s)");
    return c.ok;
}

// ---- 6. resume equivalence ------------------------------------------------

bool criterion_resume(Check& c) {
    testutil::TempDir tmp;
    const auto straight = train_family(20, 20);

    auto half = train_family(10, 20);
    const auto mid = tmp.path("mid.ckpt");
    save_checkpoint(half, mid);
    auto resumed = load_checkpoint(mid);
    const auto dataset = testutil::family_dataset();
    Trainer trainer(dataset, resumed.store, resumed.opt, resumed.config, resumed.rng,
                    resumed.completed_epochs, nullptr, 4);
    while (trainer.completed_epochs() < 20) trainer.train_epoch();
    resumed.completed_epochs = trainer.completed_epochs();
    resumed.rng = trainer.rng_state();

    c.expect(serialize_checkpoint(straight) == serialize_checkpoint(resumed),
             "straight and resumed checkpoints differ");
    return c.ok;
}

// ---- 7. extension safety --------------------------------------------------

bool criterion_extension(Check& c) {
    const auto ckpt = train_family(30, 30);
    const auto dataset = testutil::family_dataset();

    const std::vector<RawTriple> fresh = {{"xavier", "married", "yolanda"},
                                          {"yolanda", "hasChild", "zane"}};
    const auto extended = extend_vocabulary(ckpt, fresh, 909);
    c.expect(extended.vocab.entity_count() == ckpt.vocab.entity_count() + 3,
             "expected 3 new entities");

    for (std::uint64_t i = 0; i < ckpt.vocab.entity_count(); ++i) {
        const auto before = ckpt.store.entity_row(i);
        const auto after = extended.store.entity_row(i);
        c.expect(std::equal(before.begin(), before.end(), after.begin()),
                 "entity row " + std::to_string(i) + " changed");
    }
    for (std::uint64_t i = 0; i < ckpt.vocab.relation_count(); ++i) {
        const auto before = ckpt.store.relation_row(i);
        const auto after = extended.store.relation_row(i);
        c.expect(std::equal(before.begin(), before.end(), after.begin()),
                 "relation row " + std::to_string(i) + " changed");
    }
    for (const auto& t : dataset.triples) {
        const double before =
            score_triple(ckpt.config.model, ckpt.store.entity_row(t.head),
                         ckpt.store.relation_row(t.relation), ckpt.store.entity_row(t.tail));
        const double after = score_triple(extended.config.model,
                                          extended.store.entity_row(t.head),
                                          extended.store.relation_row(t.relation),
                                          extended.store.entity_row(t.tail));
        c.expect(before == after, "old-triple score changed");
    }
    return c.ok;
}

// ---- 8. metric oracle -----------------------------------------------------

bool criterion_metric_oracle(Check& c) {
    const std::vector<RawTriple> raw = {{"a", "p", "b"}, {"b", "p", "c"}, {"a", "q", "c"}};
    const auto ds = encode_dataset(raw, Vocabulary::build(raw));

    const ModelSpec spec{ModelKind::DistMult, 2};
    EmbeddingStore store;
    store.entity = Matrix(3, 2);
    store.relation = Matrix(2, 2);
    const float evals[3][2] = {{1.0f, 0.5f}, {0.5f, 1.0f}, {1.0f, 1.0f}};
    const float rvals[2][2] = {{1.0f, 1.0f}, {0.0f, 0.0f}};  // zero relation: tie fixture
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) store.entity.row(i)[j] = evals[i][j];
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) store.relation.row(i)[j] = rvals[i][j];

    const auto report = evaluate(ds.triples, ds.triples, spec, store, 2);

    std::vector<std::uint64_t> brute;
    for (const auto& t : ds.triples) {
        std::vector<double> tails(3), heads(3);
        for (std::uint64_t j = 0; j < 3; ++j) {
            tails[j] = score_triple(spec, store.entity_row(t.head),
                                    store.relation_row(t.relation), store.entity_row(j));
            heads[j] = score_triple(spec, store.entity_row(j), store.relation_row(t.relation),
                                    store.entity_row(t.tail));
        }
        std::unordered_set<std::uint64_t> known_tails, known_heads;
        for (const auto& k : ds.triples) {
            if (k.head == t.head && k.relation == t.relation) known_tails.insert(k.tail);
            if (k.tail == t.tail && k.relation == t.relation) known_heads.insert(k.head);
        }
        brute.push_back(oracle::filtered_rank(tails, t.tail, known_tails));
        brute.push_back(oracle::filtered_rank(heads, t.head, known_heads));
    }
    double inv = 0.0;
    std::uint64_t h1 = 0, h3 = 0, h10 = 0;
    for (auto r : brute) {
        inv += 1.0 / static_cast<double>(r);
        h1 += r <= 1;
        h3 += r <= 3;
        h10 += r <= 10;
    }
    const double n = static_cast<double>(brute.size());
    c.expect(report.query_count == brute.size(), "query count mismatch");
    c.expect(report.mrr == inv / n, "mrr mismatch");
    c.expect(report.hits_at.at(1) == h1 / n, "hits@1 mismatch");
    c.expect(report.hits_at.at(3) == h3 / n, "hits@3 mismatch");
    c.expect(report.hits_at.at(10) == h10 / n, "hits@10 mismatch");

    // The tie fixture itself: all-zero scores rank by the mean-tie formula.
    const std::vector<double> tied{0.0, 0.0, 0.0};
    c.expect(filtered_rank(tied, 1, {}) == 2, "tie formula mismatch");
    return c.ok;
}

// ---- 9. index width minimality ---------------------------------------------

bool criterion_index_widths(Check& c) {
    c.expect(select_index_width(255) == IndexWidth::W8, "255 -> 8");
    c.expect(select_index_width(256) == IndexWidth::W8, "256 -> 8");
    c.expect(select_index_width(257) == IndexWidth::W16, "257 -> 16");
    c.expect(select_index_width(65536) == IndexWidth::W16, "65536 -> 16");
    c.expect(select_index_width(65537) == IndexWidth::W32, "65537 -> 32");
    c.expect(select_index_width(70000) == IndexWidth::W32, "70000 -> 32");
    return c.ok;
}

// ---- 10. service contract ---------------------------------------------------

bool criterion_service(Check& c) {
    auto ckpt = train_family(50, 50);
    const std::uint32_t checksum_before = store_checksum(ckpt.store);
    EmbeddingService service(std::move(ckpt));
    const int port = service.start_async("127.0.0.1");
    httplib::Client client("127.0.0.1", port);
    const std::uint64_t n_entities = service.checkpoint().vocab.entity_count();

    const nlohmann::json score_body{
        {"head", "barack"}, {"relation", "hasChild"}, {"tail", "malia"}};
    auto score_res = client.Post("/score", score_body.dump(), "application/json");
    c.expect(score_res && score_res->status == 200, "score fixture failed");
    if (score_res) {
        const auto parsed = nlohmann::json::parse(score_res->body);
        c.expect(std::isfinite(parsed.at("score").get<double>()), "score not finite");
    }

    const nlohmann::json unknown{{"head", "zzz"}, {"relation", "hasChild"}, {"tail", "malia"}};
    auto unknown_res = client.Post("/score", unknown.dump(), "application/json");
    c.expect(unknown_res && unknown_res->status == 404 &&
                 nlohmann::json::parse(unknown_res->body).at("error") == "unknown_entity",
             "unknown entity not reported as 404 unknown_entity");

    auto health_res = client.Get("/health");
    c.expect(health_res && health_res->status == 200, "health failed");
    if (health_res) {
        const auto parsed = nlohmann::json::parse(health_res->body);
        c.expect(parsed.at("entities") == n_entities, "health entity count");
        c.expect(parsed.at("model") == "complex", "health model name");
    }

    // topk prefix property over every k.
    std::vector<nlohmann::json> results;
    for (std::uint64_t k = 1; k <= n_entities; ++k) {
        const nlohmann::json body{{"head", "barack"}, {"relation", "hasChild"}, {"k", k}};
        auto res = client.Post("/topk", body.dump(), "application/json");
        c.expect(res && res->status == 200, "topk failed at k=" + std::to_string(k));
        if (!res || res->status != 200) return c.ok;
        results.push_back(nlohmann::json::parse(res->body));
    }
    for (std::uint64_t k = 1; k < n_entities; ++k)
        for (std::uint64_t i = 0; i < k; ++i)
            c.expect(results[k - 1].at("entities")[i] == results[k].at("entities")[i],
                     "topk(" + std::to_string(k) + ") is not a prefix of topk(" +
                         std::to_string(k + 1) + ")");

    const auto& full = results.back();
    for (std::uint64_t i = 1; i < n_entities; ++i)
        c.expect(full.at("scores")[i - 1].get<double>() >= full.at("scores")[i].get<double>(),
                 "topk scores are not non-increasing");

    c.expect(store_checksum(service.checkpoint().store) == checksum_before,
             "parameter checksum changed while serving");
    service.stop();
    return c.ok;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<bool(Check&)> fn;
    };
    const std::vector<Criterion> criteria = {
        {1, "parser determinism across chunk counts", criterion_parser_determinism},
        {2, "analytic gradients vs central differences", criterion_gradients},
        {3, "reduction equivalences (complex/qmult -> distmult)", criterion_reductions},
        {4, "sharding transparency", criterion_sharding},
        {5, "end-to-end learning on the family KG", criterion_end_to_end},
        {6, "resume equivalence", criterion_resume},
        {7, "extension safety", criterion_extension},
        {8, "metric oracle", criterion_metric_oracle},
        {9, "index width minimality", criterion_index_widths},
        {10, "service contract", criterion_service},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        Check check;
        bool ok = false;
        try {
            ok = criterion.fn(check);
        } catch (const std::exception& e) {
            check.detail << "exception: " << e.what();
            ok = false;
        }
        std::printf("[%s] criterion %2d: %s%s%s\n", ok ? "PASS" : "FAIL", criterion.id,
                    criterion.name, check.detail.str().empty() ? "" : " -- ",
                    check.detail.str().c_str());
        failures += ok ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
                criteria.size());
    return failures == 0 ? 0 : 1;
}
