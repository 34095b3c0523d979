#include "kge/eval.hpp"

#include "kge/parallel.hpp"

namespace kge {

nlohmann::json MetricReport::to_json() const {
    nlohmann::json hits = nlohmann::json::object();
    for (const auto& [k, v] : hits_at) hits[std::to_string(k)] = v;
    return {{"mrr", mrr}, {"hits", hits}, {"queries", query_count}};
}

std::uint64_t filtered_rank(std::span<const double> scores, std::uint64_t true_index,
                            const std::unordered_set<std::uint64_t>& known_true) {
    if (true_index >= scores.size()) throw IndexOutOfRange("true index out of range");
    const double truth = scores[true_index];
    std::uint64_t better = 0;
    std::uint64_t tied = 0;
    for (std::uint64_t j = 0; j < scores.size(); ++j) {
        if (j == true_index || known_true.count(j)) continue;
        if (scores[j] > truth)
            ++better;
        else if (scores[j] == truth)
            ++tied;
    }
    return 1 + better + tied / 2;
}

MetricReport metrics_from_ranks(const std::vector<RankResult>& ranks) {
    MetricReport report;
    report.query_count = ranks.size();
    report.hits_at = {{1, 0.0}, {3, 0.0}, {10, 0.0}};
    if (ranks.empty()) return report;
    double inv_sum = 0.0;
    for (const auto& r : ranks) {
        inv_sum += 1.0 / static_cast<double>(r.rank);
        for (auto& [k, count] : report.hits_at)
            if (r.rank <= static_cast<std::uint64_t>(k)) count += 1.0;
    }
    report.mrr = inv_sum / static_cast<double>(ranks.size());
    for (auto& [k, count] : report.hits_at) count /= static_cast<double>(ranks.size());
    return report;
}

namespace {

using PairKey = std::pair<std::uint64_t, std::uint64_t>;
using FilterMap = std::map<PairKey, std::unordered_set<std::uint64_t>>;

const std::unordered_set<std::uint64_t>& filter_for(const FilterMap& m, const PairKey& key) {
    static const std::unordered_set<std::uint64_t> empty;
    auto it = m.find(key);
    return it == m.end() ? empty : it->second;
}

}  // namespace

std::vector<RankResult> rank_link_queries(const std::vector<Triple>& test,
                                          const std::vector<Triple>& all_known,
                                          const ModelSpec& spec, const EmbeddingStore& store,
                                          unsigned threads) {
    FilterMap tails_of;   // (h, r) -> known tails
    FilterMap heads_of;   // (r, t) -> known heads
    for (const auto& t : all_known) {
        tails_of[{t.head, t.relation}].insert(t.tail);
        heads_of[{t.relation, t.tail}].insert(t.head);
    }

    std::vector<RankResult> ranks(test.size() * 2);
    parallel_for(test.size(), threads, [&](std::size_t i) {
        const Triple& t = test[i];
        const auto tail_scores = score_kvsall(spec, store, t.head, t.relation);
        ranks[2 * i] = {filtered_rank(tail_scores, t.tail,
                                      filter_for(tails_of, {t.head, t.relation})),
                        Direction::Tail};
        const auto head_scores = score_all_heads(spec, store, t.relation, t.tail);
        ranks[2 * i + 1] = {filtered_rank(head_scores, t.head,
                                          filter_for(heads_of, {t.relation, t.tail})),
                            Direction::Head};
    });
    return ranks;
}

MetricReport evaluate(const std::vector<Triple>& test, const std::vector<Triple>& all_known,
                      const ModelSpec& spec, const EmbeddingStore& store, unsigned threads) {
    return metrics_from_ranks(rank_link_queries(test, all_known, spec, store, threads));
}

MetricReport evaluate_relations(const std::vector<Triple>& test,
                                const std::vector<Triple>& all_known, const ModelSpec& spec,
                                const EmbeddingStore& store, unsigned threads) {
    FilterMap rels_of;  // (h, t) -> known relations
    for (const auto& t : all_known) rels_of[{t.head, t.tail}].insert(t.relation);

    std::vector<RankResult> ranks(test.size());
    parallel_for(test.size(), threads, [&](std::size_t i) {
        const Triple& t = test[i];
        const auto scores = score_all_relations(spec, store, t.head, t.tail);
        ranks[i] = {filtered_rank(scores, t.relation, filter_for(rels_of, {t.head, t.tail})),
                    Direction::Relation};
    });
    return metrics_from_ranks(ranks);
}

}  // namespace kge
