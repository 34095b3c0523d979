#include <doctest.h>

#include "kge/eval.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace kge;

TEST_CASE("filtered_rank examples") {
    const std::vector<double> scores{3.0, 2.0, 1.0};
    CHECK(filtered_rank(scores, 0, {}) == 1);
    CHECK(filtered_rank(scores, 2, {0}) == 2);

    const std::vector<double> tied{1.0, 1.0, 1.0};
    CHECK(filtered_rank(tied, 1, {}) == 2);  // two ties -> 1 + floor(2/2)

    CHECK_THROWS_AS(filtered_rank(scores, 5, {}), IndexOutOfRange);
}

TEST_CASE("filtering never worsens a rank") {
    RngState rng = RngState::from_seed(15);
    for (int iter = 0; iter < 50; ++iter) {
        std::vector<double> scores;
        for (int j = 0; j < 12; ++j)
            scores.push_back(static_cast<double>(rng.uniform_index(6)));  // force ties
        const std::uint64_t truth = rng.uniform_index(scores.size());
        std::unordered_set<std::uint64_t> known;
        std::uint64_t prev = filtered_rank(scores, truth, known);
        for (int adds = 0; adds < 6; ++adds) {
            known.insert(rng.uniform_index(scores.size()));
            const std::uint64_t now = filtered_rank(scores, truth, known);
            CHECK(now <= prev);
            prev = now;
        }
    }
}

TEST_CASE("metrics from ranks: direct formula") {
    const std::vector<RankResult> ranks{{1, Direction::Tail}, {2, Direction::Tail},
                                        {4, Direction::Head}};
    const auto report = metrics_from_ranks(ranks);
    CHECK(report.mrr == doctest::Approx(0.583333).epsilon(1e-5));
    CHECK(report.hits_at.at(1) == doctest::Approx(1.0 / 3.0));
    CHECK(report.hits_at.at(3) == doctest::Approx(2.0 / 3.0));
    CHECK(report.hits_at.at(10) == doctest::Approx(1.0));
    CHECK(report.query_count == 3);

    const auto perfect = metrics_from_ranks({{1, Direction::Tail}, {1, Direction::Head}});
    CHECK(perfect.mrr == 1.0);
    CHECK(perfect.hits_at.at(1) == 1.0);
}

TEST_CASE("evaluate matches exhaustive brute force on a hand-built store") {
    // 3 entities, 2 relations, d=2, DistMult; values chosen to include a tie.
    const std::vector<RawTriple> raw = {{"a", "p", "b"}, {"b", "p", "c"}, {"a", "q", "c"}};
    const auto vocab = Vocabulary::build(raw);
    auto ds = encode_dataset(raw, vocab);

    const ModelSpec spec{ModelKind::DistMult, 2};
    EmbeddingStore store;
    store.entity = Matrix(3, 2);
    store.relation = Matrix(2, 2);
    const float evals[3][2] = {{1.0f, 0.5f}, {0.5f, 1.0f}, {1.0f, 1.0f}};
    const float rvals[2][2] = {{1.0f, 1.0f}, {0.0f, 0.0f}};  // relation q all-zero: ties
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) store.entity.row(i)[j] = evals[i][j];
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) store.relation.row(i)[j] = rvals[i][j];

    const auto checksum_before = store_checksum(store);
    const auto report = evaluate(ds.triples, ds.triples, spec, store, 2);
    CHECK(store_checksum(store) == checksum_before);  // evaluation is read-only

    // Brute force: every query re-ranked by independent counting.
    std::vector<std::uint64_t> brute_ranks;
    for (const auto& t : ds.triples) {
        std::vector<double> tail_scores(3), head_scores(3);
        for (std::uint64_t j = 0; j < 3; ++j) {
            tail_scores[j] = score_triple(spec, store.entity_row(t.head),
                                          store.relation_row(t.relation), store.entity_row(j));
            head_scores[j] = score_triple(spec, store.entity_row(j),
                                          store.relation_row(t.relation),
                                          store.entity_row(t.tail));
        }
        std::unordered_set<std::uint64_t> known_tails, known_heads;
        for (const auto& k : ds.triples) {
            if (k.head == t.head && k.relation == t.relation) known_tails.insert(k.tail);
            if (k.tail == t.tail && k.relation == t.relation) known_heads.insert(k.head);
        }
        brute_ranks.push_back(oracle::filtered_rank(tail_scores, t.tail, known_tails));
        brute_ranks.push_back(oracle::filtered_rank(head_scores, t.head, known_heads));
    }
    double inv = 0.0;
    std::uint64_t h1 = 0, h3 = 0, h10 = 0;
    for (auto r : brute_ranks) {
        inv += 1.0 / static_cast<double>(r);
        h1 += r <= 1;
        h3 += r <= 3;
        h10 += r <= 10;
    }
    const double n = static_cast<double>(brute_ranks.size());
    CHECK(report.query_count == brute_ranks.size());
    CHECK(report.mrr == inv / n);
    CHECK(report.hits_at.at(1) == h1 / n);
    CHECK(report.hits_at.at(3) == h3 / n);
    CHECK(report.hits_at.at(10) == h10 / n);
}

TEST_CASE("hits ordering and mrr bounds hold on random stores") {
    RngState rng = RngState::from_seed(41);
    const ModelSpec spec{ModelKind::ComplEx, 4};
    for (int iter = 0; iter < 10; ++iter) {
        const auto store = init_embeddings(spec, 12, 3, rng.next());
        std::vector<Triple> test;
        for (int i = 0; i < 8; ++i)
            test.push_back({rng.uniform_index(12), rng.uniform_index(3), rng.uniform_index(12)});
        const auto report = evaluate(test, test, spec, store, 2);
        CHECK(report.hits_at.at(1) <= report.hits_at.at(3));
        CHECK(report.hits_at.at(3) <= report.hits_at.at(10));
        CHECK(report.mrr >= report.hits_at.at(10) / 10.0);
        CHECK(report.mrr >= 1.0 / 12.0);
        CHECK(report.mrr <= 1.0);
    }
}

TEST_CASE("relation prediction ranks over relations") {
    const auto dataset = testutil::family_dataset();
    const ModelSpec spec{ModelKind::DistMult, 4};
    const auto store = init_embeddings(spec, dataset.vocab.entity_count(),
                                       dataset.vocab.relation_count(), 1);
    const auto report =
        evaluate_relations(dataset.triples, dataset.triples, spec, store, 2);
    CHECK(report.query_count == dataset.triples.size());
    CHECK(report.mrr >= 1.0 / static_cast<double>(dataset.vocab.relation_count()));
    CHECK(report.mrr <= 1.0);
}

TEST_CASE("report JSON shape") {
    const auto report = metrics_from_ranks({{2, Direction::Tail}});
    const auto j = report.to_json();
    CHECK(j.at("mrr") == 0.5);
    CHECK(j.at("hits").at("1") == 0.0);
    CHECK(j.at("hits").at("3") == 1.0);
    CHECK(j.at("hits").at("10") == 1.0);
    CHECK(j.at("queries") == 1);
}
