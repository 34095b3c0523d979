#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kge/ingest.hpp"

namespace kge {

// Smallest unsigned width able to hold a given number of dense indices.
enum class IndexWidth : std::uint8_t { W8 = 8, W16 = 16, W32 = 32, W64 = 64 };

// Smallest width w with count <= 2^w (indices run 0..count-1).
IndexWidth select_index_width(std::uint64_t count);

inline unsigned width_bytes(IndexWidth w) { return static_cast<unsigned>(w) / 8; }

// Integer-encoded triple.
struct Triple {
    std::uint64_t head = 0;
    std::uint64_t relation = 0;
    std::uint64_t tail = 0;

    bool operator==(const Triple&) const = default;
};

// Bidirectional string<->index maps for entities and relations. build() sorts
// both namespaces lexicographically, so the vocabulary is a pure function of
// the triple *set* regardless of input order or chunking. append_* preserves
// existing indices and adds new symbols after them (the continual-training
// exception to global sortedness).
class Vocabulary {
   public:
    static Vocabulary build(const std::vector<RawTriple>& triples);

    // Reconstructs a vocabulary from serialized tables, preserving the given
    // index order exactly (it may contain appended, non-sorted symbols).
    static Vocabulary from_tables(std::vector<std::string> entities,
                                  std::vector<std::string> relations);

    std::uint64_t entity_count() const { return entities_.size(); }
    std::uint64_t relation_count() const { return relations_.size(); }

    const std::string& entity_name(std::uint64_t index) const;
    const std::string& relation_name(std::uint64_t index) const;

    std::optional<std::uint64_t> find_entity(std::string_view name) const;
    std::optional<std::uint64_t> find_relation(std::string_view name) const;

    // Throwing lookups; UnknownSymbol signals a vocab/data mismatch.
    std::uint64_t entity_index(const std::string& name) const;
    std::uint64_t relation_index(const std::string& name) const;

    const std::vector<std::string>& entities() const { return entities_; }
    const std::vector<std::string>& relations() const { return relations_; }

    // Appends symbols not already present, each batch sorted among itself.
    // Returns the number actually added.
    std::uint64_t append_entities(std::vector<std::string> names);
    std::uint64_t append_relations(std::vector<std::string> names);

    bool operator==(const Vocabulary& other) const {
        return entities_ == other.entities_ && relations_ == other.relations_;
    }

   private:
    std::vector<std::string> entities_;
    std::vector<std::string> relations_;
    std::unordered_map<std::string, std::uint64_t> entity_index_;
    std::unordered_map<std::string, std::uint64_t> relation_index_;
};

struct IndexedDataset {
    std::vector<Triple> triples;
    IndexWidth entity_width = IndexWidth::W8;
    IndexWidth relation_width = IndexWidth::W8;
    Vocabulary vocab;
};

// Order-preserving encoding of raw triples against a frozen vocabulary.
IndexedDataset encode_dataset(const std::vector<RawTriple>& raw, Vocabulary vocab);

RawTriple decode_triple(const Triple& t, const Vocabulary& vocab);
std::vector<RawTriple> decode_dataset(const IndexedDataset& ds);

// On-disk index cache ("KGEIDX1"): header, sorted string tables, and triples
// packed at the declared widths, little-endian throughout.
void save_index(const IndexedDataset& ds, const std::string& path);
IndexedDataset load_index(const std::string& path);

struct IndexHeader {
    std::uint64_t entity_count = 0;
    std::uint64_t relation_count = 0;
    IndexWidth entity_width = IndexWidth::W8;
    IndexWidth relation_width = IndexWidth::W8;
    std::uint64_t triple_count = 0;
};

IndexHeader load_index_header(const std::string& path);

}  // namespace kge
