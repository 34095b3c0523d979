#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kge/binio.hpp"
#include "kge/errors.hpp"

namespace kge {

// Dense row-major float32 matrix. Parameters are stored at 32 bits; all
// reductions over them accumulate in 64-bit.
class Matrix {
   public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    std::span<float> row(std::size_t i) {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<const float> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

    bool operator==(const Matrix&) const = default;

   private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<float> data_;
};

// The full parameter set: entity rows E (|E| x d) and relation rows R (|R| x d).
struct EmbeddingStore {
    Matrix entity;
    Matrix relation;

    std::uint64_t dim() const { return entity.cols(); }
    std::uint64_t entity_count() const { return entity.rows(); }
    std::uint64_t relation_count() const { return relation.rows(); }

    std::span<const float> entity_row(std::uint64_t i) const { return entity.row(i); }
    std::span<const float> relation_row(std::uint64_t i) const { return relation.row(i); }
    std::span<float> mutable_entity_row(std::uint64_t i) { return entity.row(i); }
    std::span<float> mutable_relation_row(std::uint64_t i) { return relation.row(i); }

    bool operator==(const EmbeddingStore&) const = default;
};

// CRC over all parameter bytes; used to assert that read paths never mutate.
inline std::uint32_t store_checksum(const EmbeddingStore& store) {
    std::uint32_t crc = binio::crc32(store.entity.data().data(),
                                     store.entity.data().size() * sizeof(float));
    return binio::crc32(store.relation.data().data(),
                        store.relation.data().size() * sizeof(float), crc);
}

}  // namespace kge
