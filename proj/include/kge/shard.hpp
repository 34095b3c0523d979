#pragma once

#include <cstdint>
#include <vector>

#include "kge/models.hpp"
#include "kge/parallel.hpp"
#include "kge/store.hpp"

namespace kge {

struct ShardRange {
    std::uint64_t begin = 0;
    std::uint64_t end = 0;  // exclusive

    std::uint64_t size() const { return end - begin; }
    bool operator==(const ShardRange&) const = default;
};

// Row-partitioned parameter store: shard s owns entity rows
// [s*ceil(|E|/n), min((s+1)*ceil(|E|/n), |E|)) and the analogous relation
// rows. Row lookups route to the owning shard's storage, which is the
// in-process stand-in for a cross-worker fetch; the request/reply message
// contract for a future remote transport is one (matrix, row) pair in and d
// floats back.
class ShardedStore {
   public:
    ShardedStore() = default;

    static ShardedStore partition(const EmbeddingStore& store, std::uint64_t n_shards);

    std::uint64_t shard_count() const { return entity_parts_.size(); }
    std::uint64_t dim() const { return dim_; }
    std::uint64_t entity_count() const { return entity_count_; }
    std::uint64_t relation_count() const { return relation_count_; }

    ShardRange entity_range(std::uint64_t shard) const;
    ShardRange relation_range(std::uint64_t shard) const;

    std::uint64_t entity_owner(std::uint64_t row) const { return row / entity_stride_; }
    std::uint64_t relation_owner(std::uint64_t row) const { return row / relation_stride_; }

    std::span<const float> entity_row(std::uint64_t row) const;
    std::span<const float> relation_row(std::uint64_t row) const;
    std::span<float> mutable_entity_row(std::uint64_t row);
    std::span<float> mutable_relation_row(std::uint64_t row);

    // Reassembles the full store from the shards.
    EmbeddingStore gather() const;

   private:
    std::uint64_t dim_ = 0;
    std::uint64_t entity_count_ = 0;
    std::uint64_t relation_count_ = 0;
    std::uint64_t entity_stride_ = 1;
    std::uint64_t relation_stride_ = 1;
    std::vector<Matrix> entity_parts_;
    std::vector<Matrix> relation_parts_;
};

// Spec'd partition entry point; n_shards must be in [1, |E|].
ShardedStore shard_parameters(const EmbeddingStore& store, std::uint64_t n_shards);

// KvsAll scores computed by per-shard workers over their owned entity rows,
// with head/relation rows fetched from their owners. Output slices are
// disjoint, so the concatenated result is bit-identical to score_kvsall.
std::vector<double> sharded_kvsall(const ModelSpec& spec, const ShardedStore& sharded,
                                   std::uint64_t head_index, std::uint64_t relation_index);

}  // namespace kge
