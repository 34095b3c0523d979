#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kge/train.hpp"
#include "kge/vocab.hpp"

namespace kge {

struct KgStats {
    std::uint64_t entity_count = 0;
    std::uint64_t relation_count = 0;
    std::uint64_t triple_count = 0;
    std::uint64_t available_memory_bytes = 0;
};

struct SuggestResult {
    TrainConfig config;
    IndexWidth entity_width = IndexWidth::W8;
    IndexWidth relation_width = IndexWidth::W8;
    std::vector<std::string> rationale;  // one line per decision
};

// Deterministic heuristic configuration from dataset statistics and a memory
// budget. Monotone in available memory: more memory never shrinks the
// suggested dimension or batch size. Throws InsufficientMemory when even the
// smallest dimension does not fit.
SuggestResult suggest_config(const KgStats& stats, ModelKind model_kind);

// MemAvailable from /proc/meminfo, or a 1 GiB fallback.
std::uint64_t detect_available_memory();

}  // namespace kge
