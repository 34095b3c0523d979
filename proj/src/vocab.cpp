#include "kge/vocab.hpp"

#include <algorithm>

#include "kge/binio.hpp"
#include "kge/errors.hpp"

namespace kge {

namespace {
constexpr char kIndexMagic[] = {'K', 'G', 'E', 'I', 'D', 'X', '1'};
}

IndexWidth select_index_width(std::uint64_t count) {
    if (count <= (1ull << 8)) return IndexWidth::W8;
    if (count <= (1ull << 16)) return IndexWidth::W16;
    if (count <= (1ull << 32)) return IndexWidth::W32;
    return IndexWidth::W64;
}

Vocabulary Vocabulary::build(const std::vector<RawTriple>& triples) {
    std::vector<std::string> ents;
    std::vector<std::string> rels;
    ents.reserve(triples.size() * 2);
    rels.reserve(triples.size());
    for (const auto& t : triples) {
        ents.push_back(t.head);
        ents.push_back(t.tail);
        rels.push_back(t.relation);
    }
    auto sort_unique = [](std::vector<std::string>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    sort_unique(ents);
    sort_unique(rels);

    Vocabulary vocab;
    vocab.entities_ = std::move(ents);
    vocab.relations_ = std::move(rels);
    for (std::uint64_t i = 0; i < vocab.entities_.size(); ++i)
        vocab.entity_index_.emplace(vocab.entities_[i], i);
    for (std::uint64_t i = 0; i < vocab.relations_.size(); ++i)
        vocab.relation_index_.emplace(vocab.relations_[i], i);
    return vocab;
}

Vocabulary Vocabulary::from_tables(std::vector<std::string> entities,
                                   std::vector<std::string> relations) {
    Vocabulary vocab;
    vocab.entities_ = std::move(entities);
    vocab.relations_ = std::move(relations);
    for (std::uint64_t i = 0; i < vocab.entities_.size(); ++i)
        if (!vocab.entity_index_.emplace(vocab.entities_[i], i).second)
            throw VersionUnsupported("duplicate entity in table");
    for (std::uint64_t i = 0; i < vocab.relations_.size(); ++i)
        if (!vocab.relation_index_.emplace(vocab.relations_[i], i).second)
            throw VersionUnsupported("duplicate relation in table");
    return vocab;
}

const std::string& Vocabulary::entity_name(std::uint64_t index) const {
    if (index >= entities_.size()) throw IndexOutOfRange("entity index out of range");
    return entities_[index];
}

const std::string& Vocabulary::relation_name(std::uint64_t index) const {
    if (index >= relations_.size()) throw IndexOutOfRange("relation index out of range");
    return relations_[index];
}

std::optional<std::uint64_t> Vocabulary::find_entity(std::string_view name) const {
    auto it = entity_index_.find(std::string(name));
    if (it == entity_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::uint64_t> Vocabulary::find_relation(std::string_view name) const {
    auto it = relation_index_.find(std::string(name));
    if (it == relation_index_.end()) return std::nullopt;
    return it->second;
}

std::uint64_t Vocabulary::entity_index(const std::string& name) const {
    auto it = entity_index_.find(name);
    if (it == entity_index_.end()) throw UnknownSymbol(name);
    return it->second;
}

std::uint64_t Vocabulary::relation_index(const std::string& name) const {
    auto it = relation_index_.find(name);
    if (it == relation_index_.end()) throw UnknownSymbol(name);
    return it->second;
}

std::uint64_t Vocabulary::append_entities(std::vector<std::string> names) {
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    std::uint64_t added = 0;
    for (auto& n : names) {
        if (entity_index_.count(n)) continue;
        entity_index_.emplace(n, entities_.size());
        entities_.push_back(std::move(n));
        ++added;
    }
    return added;
}

std::uint64_t Vocabulary::append_relations(std::vector<std::string> names) {
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    std::uint64_t added = 0;
    for (auto& n : names) {
        if (relation_index_.count(n)) continue;
        relation_index_.emplace(n, relations_.size());
        relations_.push_back(std::move(n));
        ++added;
    }
    return added;
}

IndexedDataset encode_dataset(const std::vector<RawTriple>& raw, Vocabulary vocab) {
    IndexedDataset ds;
    ds.triples.reserve(raw.size());
    for (const auto& t : raw) {
        ds.triples.push_back({vocab.entity_index(t.head), vocab.relation_index(t.relation),
                              vocab.entity_index(t.tail)});
    }
    ds.entity_width = select_index_width(vocab.entity_count());
    ds.relation_width = select_index_width(vocab.relation_count());
    ds.vocab = std::move(vocab);
    return ds;
}

RawTriple decode_triple(const Triple& t, const Vocabulary& vocab) {
    return {vocab.entity_name(t.head), vocab.relation_name(t.relation),
            vocab.entity_name(t.tail)};
}

std::vector<RawTriple> decode_dataset(const IndexedDataset& ds) {
    std::vector<RawTriple> out;
    out.reserve(ds.triples.size());
    for (const auto& t : ds.triples) out.push_back(decode_triple(t, ds.vocab));
    return out;
}

void save_index(const IndexedDataset& ds, const std::string& path) {
    std::vector<std::uint8_t> buf;
    binio::put_bytes(buf, kIndexMagic, sizeof(kIndexMagic));
    binio::put_u64(buf, ds.vocab.entity_count());
    binio::put_u64(buf, ds.vocab.relation_count());
    binio::put_u8(buf, static_cast<std::uint8_t>(ds.entity_width));
    binio::put_u8(buf, static_cast<std::uint8_t>(ds.relation_width));
    binio::put_u64(buf, ds.triples.size());
    for (const auto& s : ds.vocab.entities()) binio::put_string(buf, s);
    for (const auto& s : ds.vocab.relations()) binio::put_string(buf, s);
    const unsigned eb = width_bytes(ds.entity_width);
    const unsigned rb = width_bytes(ds.relation_width);
    for (const auto& t : ds.triples) {
        binio::put_uint(buf, t.head, eb);
        binio::put_uint(buf, t.relation, rb);
        binio::put_uint(buf, t.tail, eb);
    }
    binio::write_file(path, buf);
}

namespace {

IndexWidth width_from_bits(std::uint8_t bits) {
    switch (bits) {
        case 8: return IndexWidth::W8;
        case 16: return IndexWidth::W16;
        case 32: return IndexWidth::W32;
        case 64: return IndexWidth::W64;
        default: throw VersionUnsupported("bad index width");
    }
}

IndexHeader read_header(binio::Reader& r) {
    char magic[sizeof(kIndexMagic)];
    r.raw(magic, sizeof(magic));
    if (std::memcmp(magic, kIndexMagic, sizeof(magic)) != 0)
        throw VersionUnsupported("not a KGEIDX1 file");
    IndexHeader h;
    h.entity_count = r.u64();
    h.relation_count = r.u64();
    h.entity_width = width_from_bits(r.u8());
    h.relation_width = width_from_bits(r.u8());
    h.triple_count = r.u64();
    return h;
}

}  // namespace

IndexedDataset load_index(const std::string& path) {
    const auto bytes = binio::read_file(path);
    binio::Reader r(bytes);
    const IndexHeader h = read_header(r);

    std::vector<std::string> ents(h.entity_count);
    for (auto& s : ents) s = r.str();
    std::vector<std::string> rels(h.relation_count);
    for (auto& s : rels) s = r.str();
    Vocabulary vocab = Vocabulary::from_tables(std::move(ents), std::move(rels));

    IndexedDataset ds;
    ds.vocab = std::move(vocab);
    ds.entity_width = h.entity_width;
    ds.relation_width = h.relation_width;
    const unsigned eb = width_bytes(h.entity_width);
    const unsigned rb = width_bytes(h.relation_width);
    ds.triples.reserve(h.triple_count);
    for (std::uint64_t i = 0; i < h.triple_count; ++i) {
        Triple t;
        t.head = r.uint(eb);
        t.relation = r.uint(rb);
        t.tail = r.uint(eb);
        if (t.head >= h.entity_count || t.tail >= h.entity_count ||
            t.relation >= h.relation_count)
            throw VersionUnsupported("triple index out of range");
        ds.triples.push_back(t);
    }
    return ds;
}

IndexHeader load_index_header(const std::string& path) {
    const auto bytes = binio::read_file(path);
    binio::Reader r(bytes);
    return read_header(r);
}

}  // namespace kge
