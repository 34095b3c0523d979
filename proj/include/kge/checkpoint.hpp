#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "kge/ingest.hpp"
#include "kge/rng.hpp"
#include "kge/store.hpp"
#include "kge/train.hpp"
#include "kge/vocab.hpp"

namespace kge {

// Self-describing training snapshot. Capturing the optimizer state and the
// sampling stream is what makes "train N epochs" and "train k, save, load,
// train N-k" produce byte-identical results.
struct Checkpoint {
    std::uint32_t format_version = 1;
    TrainConfig config;
    Vocabulary vocab;
    EmbeddingStore store;
    OptimizerState opt;
    std::uint64_t completed_epochs = 0;
    RngState rng;

    void validate() const;  // shape consistency
};

nlohmann::json config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const nlohmann::json& j);

// Layout (little-endian): magic "KGECKPT1", u32 version, u32-length-prefixed
// JSON config block, vocabulary tables (u64 count, then u32-length-prefixed
// strings), f32 parameter matrices row-major (entity, relation), f32 Adam
// moment matrices (m/v entity, m/v relation; absent for SGD), 16-byte rng
// state, u32 CRC-32 over everything before it.
std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

// Returns the byte count written.
std::uint64_t save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Appends unseen entities/relations after the existing indices (sorted among
// themselves), keeps every existing row bit-identical, initializes new rows
// from (seed, global row index), and zeroes their optimizer moments.
Checkpoint extend_vocabulary(const Checkpoint& ckpt,
                             const std::vector<RawTriple>& new_triples, std::uint64_t seed);

}  // namespace kge
