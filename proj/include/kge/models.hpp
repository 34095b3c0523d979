#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kge/errors.hpp"
#include "kge/rng.hpp"
#include "kge/store.hpp"

namespace kge {

enum class ModelKind { DistMult, ComplEx, QMult };

const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

struct ModelSpec {
    ModelKind kind = ModelKind::DistMult;
    std::uint64_t dim = 32;

    // 1 for DistMult, 2 for ComplEx (real|imag halves), 4 for QMult quarters.
    std::uint64_t dim_multiple() const;
    void validate() const;  // throws DimensionError
};

// Partial derivatives of a score w.r.t. the three embedding rows.
struct ScoreGradient {
    std::vector<double> d_head;
    std::vector<double> d_rel;
    std::vector<double> d_tail;
};

// Scoring kernels. Inputs are float32 rows; accumulation is in double with a
// fixed left-to-right order, which is what makes batched, sharded and
// pointwise evaluation agree bit-for-bit.

// sum_i h_i * r_i * t_i
double score_distmult(std::span<const float> h, std::span<const float> r,
                      std::span<const float> t);

// Hermitian product over (real|imag) halves:
// rrr + rii + iri - iir, each term summed over d/2 coordinates.
double score_complex(std::span<const float> h, std::span<const float> r,
                     std::span<const float> t);

// <h (x) r, t> with the Hamilton product applied over (a|b|c|e) quarters.
double score_qmult(std::span<const float> h, std::span<const float> r,
                   std::span<const float> t);

double score_triple(const ModelSpec& spec, std::span<const float> h,
                    std::span<const float> r, std::span<const float> t);

// Analytic gradient of the model's score.
ScoreGradient score_gradient(const ModelSpec& spec, std::span<const float> h,
                             std::span<const float> r, std::span<const float> t);

// The model contract: a model supplies a kind name, a dimension constraint, a
// score, and its gradient. Everything else (KvsAll scans, training, eval,
// serving) is generic over this interface, so adding a model means
// implementing it and extending make_model.
class ScoringModel {
   public:
    virtual ~ScoringModel() = default;
    virtual const char* name() const = 0;
    virtual std::uint64_t dim_multiple() const = 0;
    virtual double score(std::span<const float> h, std::span<const float> r,
                         std::span<const float> t) const = 0;
    virtual ScoreGradient gradient(std::span<const float> h, std::span<const float> r,
                                   std::span<const float> t) const = 0;
};

std::unique_ptr<ScoringModel> make_model(const ModelSpec& spec);

// Deterministic initialization: entries i.i.d. uniform on [-1/sqrt(d), 1/sqrt(d)],
// keyed by (seed, matrix, row, col). Same inputs give a bit-identical store,
// and a single row can be reproduced later in isolation.
EmbeddingStore init_embeddings(const ModelSpec& spec, std::uint64_t entity_count,
                               std::uint64_t relation_count, std::uint64_t seed);

float init_embedding_value(std::uint64_t seed, MatrixKind matrix, std::uint64_t row,
                           std::uint64_t col, std::uint64_t dim);

// Scores (head, rel, entity_j) for every entity j. Entry j is bit-identical
// to the pointwise score because it runs the same kernel over the same rows.
template <typename Store>
std::vector<double> score_kvsall(const ModelSpec& spec, const Store& store,
                                 std::uint64_t head_index, std::uint64_t relation_index) {
    if (head_index >= store.entity_count()) throw IndexOutOfRange("head index");
    if (relation_index >= store.relation_count()) throw IndexOutOfRange("relation index");
    const auto model = make_model(spec);
    const auto h = store.entity_row(head_index);
    const auto r = store.relation_row(relation_index);
    std::vector<double> scores(store.entity_count());
    for (std::uint64_t j = 0; j < scores.size(); ++j)
        scores[j] = model->score(h, r, store.entity_row(j));
    return scores;
}

// Scores (entity_j, rel, tail) for every entity j.
template <typename Store>
std::vector<double> score_all_heads(const ModelSpec& spec, const Store& store,
                                    std::uint64_t relation_index, std::uint64_t tail_index) {
    if (tail_index >= store.entity_count()) throw IndexOutOfRange("tail index");
    if (relation_index >= store.relation_count()) throw IndexOutOfRange("relation index");
    const auto model = make_model(spec);
    const auto r = store.relation_row(relation_index);
    const auto t = store.entity_row(tail_index);
    std::vector<double> scores(store.entity_count());
    for (std::uint64_t j = 0; j < scores.size(); ++j)
        scores[j] = model->score(store.entity_row(j), r, t);
    return scores;
}

// Scores (head, rel_j, tail) for every relation j.
template <typename Store>
std::vector<double> score_all_relations(const ModelSpec& spec, const Store& store,
                                        std::uint64_t head_index, std::uint64_t tail_index) {
    if (head_index >= store.entity_count()) throw IndexOutOfRange("head index");
    if (tail_index >= store.entity_count()) throw IndexOutOfRange("tail index");
    const auto model = make_model(spec);
    const auto h = store.entity_row(head_index);
    const auto t = store.entity_row(tail_index);
    std::vector<double> scores(store.relation_count());
    for (std::uint64_t j = 0; j < scores.size(); ++j)
        scores[j] = model->score(h, store.relation_row(j), t);
    return scores;
}

}  // namespace kge
