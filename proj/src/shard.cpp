#include "kge/shard.hpp"

#include <cstring>

namespace kge {

namespace {
std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }
}

ShardedStore ShardedStore::partition(const EmbeddingStore& store, std::uint64_t n_shards) {
    if (n_shards < 1 || n_shards > store.entity_count())
        throw InvalidShardCount("n_shards must be in [1, entity_count]");

    ShardedStore s;
    s.dim_ = store.dim();
    s.entity_count_ = store.entity_count();
    s.relation_count_ = store.relation_count();
    s.entity_stride_ = ceil_div(s.entity_count_, n_shards);
    s.relation_stride_ = std::max<std::uint64_t>(1, ceil_div(s.relation_count_, n_shards));
    s.entity_parts_.resize(n_shards);
    s.relation_parts_.resize(n_shards);

    for (std::uint64_t shard = 0; shard < n_shards; ++shard) {
        const ShardRange er = s.entity_range(shard);
        Matrix& em = s.entity_parts_[shard];
        em = Matrix(er.size(), s.dim_);
        for (std::uint64_t r = er.begin; r < er.end; ++r) {
            const auto src = store.entity_row(r);
            std::memcpy(em.row(r - er.begin).data(), src.data(), src.size() * sizeof(float));
        }
        const ShardRange rr = s.relation_range(shard);
        Matrix& rm = s.relation_parts_[shard];
        rm = Matrix(rr.size(), s.dim_);
        for (std::uint64_t r = rr.begin; r < rr.end; ++r) {
            const auto src = store.relation_row(r);
            std::memcpy(rm.row(r - rr.begin).data(), src.data(), src.size() * sizeof(float));
        }
    }
    return s;
}

ShardRange ShardedStore::entity_range(std::uint64_t shard) const {
    const std::uint64_t begin = std::min(shard * entity_stride_, entity_count_);
    const std::uint64_t end = std::min(begin + entity_stride_, entity_count_);
    return {begin, end};
}

ShardRange ShardedStore::relation_range(std::uint64_t shard) const {
    const std::uint64_t begin = std::min(shard * relation_stride_, relation_count_);
    const std::uint64_t end = std::min(begin + relation_stride_, relation_count_);
    return {begin, end};
}

std::span<const float> ShardedStore::entity_row(std::uint64_t row) const {
    const std::uint64_t owner = entity_owner(row);
    return entity_parts_[owner].row(row - owner * entity_stride_);
}

std::span<const float> ShardedStore::relation_row(std::uint64_t row) const {
    const std::uint64_t owner = relation_owner(row);
    return relation_parts_[owner].row(row - owner * relation_stride_);
}

std::span<float> ShardedStore::mutable_entity_row(std::uint64_t row) {
    const std::uint64_t owner = entity_owner(row);
    return entity_parts_[owner].row(row - owner * entity_stride_);
}

std::span<float> ShardedStore::mutable_relation_row(std::uint64_t row) {
    const std::uint64_t owner = relation_owner(row);
    return relation_parts_[owner].row(row - owner * relation_stride_);
}

EmbeddingStore ShardedStore::gather() const {
    EmbeddingStore out;
    out.entity = Matrix(entity_count_, dim_);
    out.relation = Matrix(relation_count_, dim_);
    for (std::uint64_t r = 0; r < entity_count_; ++r) {
        const auto src = entity_row(r);
        std::memcpy(out.entity.row(r).data(), src.data(), src.size() * sizeof(float));
    }
    for (std::uint64_t r = 0; r < relation_count_; ++r) {
        const auto src = relation_row(r);
        std::memcpy(out.relation.row(r).data(), src.data(), src.size() * sizeof(float));
    }
    return out;
}

ShardedStore shard_parameters(const EmbeddingStore& store, std::uint64_t n_shards) {
    return ShardedStore::partition(store, n_shards);
}

std::vector<double> sharded_kvsall(const ModelSpec& spec, const ShardedStore& sharded,
                                   std::uint64_t head_index, std::uint64_t relation_index) {
    if (head_index >= sharded.entity_count()) throw IndexOutOfRange("head index");
    if (relation_index >= sharded.relation_count()) throw IndexOutOfRange("relation index");

    const auto model = make_model(spec);
    std::vector<double> scores(sharded.entity_count());
    // One worker per shard; each fetches the query rows from their owners and
    // writes only its own slice of the output.
    parallel_for(sharded.shard_count(), static_cast<unsigned>(sharded.shard_count()),
                 [&](std::size_t shard) {
                     const auto h = sharded.entity_row(head_index);
                     const auto r = sharded.relation_row(relation_index);
                     const ShardRange range = sharded.entity_range(shard);
                     for (std::uint64_t j = range.begin; j < range.end; ++j)
                         scores[j] = model->score(h, r, sharded.entity_row(j));
                 });
    return scores;
}

}  // namespace kge
