#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "kge/progress.hpp"

namespace kge {

// One (head, relation, tail) fact as strings. IRIs are stored without angle
// brackets; blank-node labels keep their "_:" prefix.
struct RawTriple {
    std::string head;
    std::string relation;
    std::string tail;

    bool operator==(const RawTriple&) const = default;
};

// Half-open byte range of one file chunk. Boundaries always sit at the start
// of a line, so chunks can be parsed independently.
struct FileChunk {
    std::uint64_t byte_start = 0;
    std::uint64_t byte_end = 0;

    bool operator==(const FileChunk&) const = default;
};

// A line the parser could not accept. offset is the byte offset of the line
// start (chunk-relative from the chunk parsers, absolute after merging).
struct LineError {
    std::uint64_t offset = 0;
    std::string reason;

    bool operator==(const LineError&) const = default;
};

enum class TripleFormat { NTriples, Tsv };

struct ChunkParseResult {
    std::vector<RawTriple> triples;
    std::vector<LineError> errors;
    std::uint64_t skipped_lines = 0;  // blank and comment lines
    std::uint64_t total_lines = 0;
};

// Returns the offset of the first '\n' at or after `offset`, or the file size
// if there is none.
using LineProbe = std::function<std::uint64_t(std::uint64_t)>;

// Splits [0, file_size) into at most n_chunks line-aligned ranges. Ideal
// split points are snapped forward to the next line start via the probe.
std::vector<FileChunk> chunk_file(std::uint64_t file_size, const LineProbe& probe,
                                  std::uint64_t n_chunks);

// Parses the IRI-only N-Triples subset: `<h> <r> <t> .` plus blank nodes as
// `_:label`. Literal objects are reported, never silently dropped.
ChunkParseResult parse_ntriples_chunk(std::string_view bytes);

// Parses TAB-separated `h\tr\tt` lines.
ChunkParseResult parse_tsv_chunk(std::string_view bytes);

struct ParseFileResult {
    std::vector<RawTriple> triples;
    std::vector<LineError> errors;  // absolute byte offsets
    std::uint64_t skipped_lines = 0;
    std::uint64_t total_lines = 0;
    std::uint64_t n_chunks_used = 0;
};

// Chunk-parallel file parse. Workers parse disjoint chunks with no shared
// state; results are concatenated in chunk order, so the output is identical
// for every n_chunks.
ParseFileResult parse_file(const std::string& path, TripleFormat format,
                           std::uint64_t n_chunks, unsigned threads,
                           ProgressLogger* progress = nullptr);

// .nt/.ntriples => NTriples, .tsv => Tsv; otherwise sniffs the first
// non-empty line for a TAB.
TripleFormat detect_format(const std::string& path);

}  // namespace kge
