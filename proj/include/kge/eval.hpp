#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "kge/models.hpp"
#include "kge/vocab.hpp"

namespace kge {

enum class Direction { Head, Tail, Relation };

struct RankResult {
    std::uint64_t rank = 0;  // 1 = best
    Direction direction = Direction::Tail;
};

struct MetricReport {
    double mrr = 0.0;
    std::map<int, double> hits_at;  // {1, 3, 10}
    std::uint64_t query_count = 0;

    nlohmann::json to_json() const;
};

// Filtered rank with deterministic mean-rank tie handling:
// 1 + #{strictly better candidates} + floor(#{tied candidates} / 2),
// candidates in known_true (and the truth itself) excluded.
std::uint64_t filtered_rank(std::span<const double> scores, std::uint64_t true_index,
                            const std::unordered_set<std::uint64_t>& known_true);

MetricReport metrics_from_ranks(const std::vector<RankResult>& ranks);

// Head- and tail-direction filtered link prediction over all entities,
// averaged into one report. Read-only over the store.
std::vector<RankResult> rank_link_queries(const std::vector<Triple>& test,
                                          const std::vector<Triple>& all_known,
                                          const ModelSpec& spec, const EmbeddingStore& store,
                                          unsigned threads = 1);

MetricReport evaluate(const std::vector<Triple>& test, const std::vector<Triple>& all_known,
                      const ModelSpec& spec, const EmbeddingStore& store,
                      unsigned threads = 1);

// Ranks the true relation against all relations, filtered over (h, t) pairs.
MetricReport evaluate_relations(const std::vector<Triple>& test,
                                const std::vector<Triple>& all_known, const ModelSpec& spec,
                                const EmbeddingStore& store, unsigned threads = 1);

}  // namespace kge
