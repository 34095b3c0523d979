#include "kge/ingest.hpp"

#include <array>
#include <filesystem>
#include <fstream>

#include "kge/errors.hpp"
#include "kge/parallel.hpp"

namespace kge {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t'; }

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

bool blank_or_comment(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && is_space(line[i])) ++i;
    return i == line.size() || line[i] == '#';
}

// One term of the N-Triples subset grammar: an IRI or a blank node label.
struct Term {
    std::string value;
    bool ok = false;
    bool literal = false;
};

Term take_term(std::string_view line, std::size_t& pos) {
    Term t;
    while (pos < line.size() && is_space(line[pos])) ++pos;
    if (pos >= line.size()) return t;
    const char c = line[pos];
    if (c == '<') {
        const std::size_t close = line.find('>', pos + 1);
        if (close == std::string_view::npos) return t;
        t.value = std::string(line.substr(pos + 1, close - pos - 1));
        pos = close + 1;
        t.ok = !t.value.empty() &&
               t.value.find(' ') == std::string::npos &&
               t.value.find('\t') == std::string::npos;
        return t;
    }
    if (c == '"') {
        t.literal = true;
        return t;
    }
    if (line.compare(pos, 2, "_:") == 0) {
        std::size_t end = pos;
        while (end < line.size() && !is_space(line[end])) ++end;
        t.value = std::string(line.substr(pos, end - pos));
        pos = end;
        t.ok = t.value.size() > 2;
        return t;
    }
    return t;
}

// Splits bytes into lines and hands each line plus its start offset to fn.
template <typename Fn>
void for_each_line(std::string_view bytes, Fn&& fn) {
    std::size_t start = 0;
    while (start < bytes.size()) {
        std::size_t nl = bytes.find('\n', start);
        const std::size_t end = nl == std::string_view::npos ? bytes.size() : nl;
        fn(bytes.substr(start, end - start), static_cast<std::uint64_t>(start));
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
}

}  // namespace

std::vector<FileChunk> chunk_file(std::uint64_t file_size, const LineProbe& probe,
                                  std::uint64_t n_chunks) {
    if (n_chunks < 1) throw ConfigError("n_chunks must be >= 1");
    std::vector<FileChunk> chunks;
    if (file_size == 0) return chunks;

    std::uint64_t prev = 0;
    for (std::uint64_t s = 1; s < n_chunks && prev < file_size; ++s) {
        const std::uint64_t target = file_size * s / n_chunks;
        if (target <= prev) continue;
        // Snap forward: the boundary is the position right after the first
        // newline at or beyond target-1, so byte target-1 ending a line keeps
        // the ideal split point.
        const std::uint64_t nl = probe(target - 1);
        const std::uint64_t boundary = nl >= file_size ? file_size : nl + 1;
        if (boundary >= file_size) break;
        if (boundary > prev) {
            chunks.push_back({prev, boundary});
            prev = boundary;
        }
    }
    if (prev < file_size) chunks.push_back({prev, file_size});
    return chunks;
}

ChunkParseResult parse_ntriples_chunk(std::string_view bytes) {
    ChunkParseResult out;
    for_each_line(bytes, [&](std::string_view raw_line, std::uint64_t offset) {
        out.total_lines++;
        const std::string_view line = strip_cr(raw_line);
        if (blank_or_comment(line)) {
            out.skipped_lines++;
            return;
        }
        std::size_t pos = 0;
        Term subject = take_term(line, pos);
        if (!subject.ok) {
            out.errors.push_back({offset, subject.literal ? "literal-subject-unsupported"
                                                          : "malformed-subject"});
            return;
        }
        Term predicate = take_term(line, pos);
        if (!predicate.ok || predicate.value.compare(0, 2, "_:") == 0) {
            out.errors.push_back({offset, predicate.literal ? "literal-predicate-unsupported"
                                                            : "malformed-predicate"});
            return;
        }
        Term object = take_term(line, pos);
        if (object.literal) {
            out.errors.push_back({offset, "literal-object-unsupported"});
            return;
        }
        if (!object.ok) {
            out.errors.push_back({offset, "malformed-object"});
            return;
        }
        while (pos < line.size() && is_space(line[pos])) ++pos;
        if (pos >= line.size() || line[pos] != '.') {
            out.errors.push_back({offset, "missing-terminator"});
            return;
        }
        ++pos;
        while (pos < line.size() && is_space(line[pos])) ++pos;
        if (pos != line.size()) {
            out.errors.push_back({offset, "trailing-garbage"});
            return;
        }
        out.triples.push_back({std::move(subject.value), std::move(predicate.value),
                               std::move(object.value)});
    });
    return out;
}

ChunkParseResult parse_tsv_chunk(std::string_view bytes) {
    ChunkParseResult out;
    for_each_line(bytes, [&](std::string_view raw_line, std::uint64_t offset) {
        out.total_lines++;
        const std::string_view line = strip_cr(raw_line);
        if (line.empty()) {
            out.skipped_lines++;
            return;
        }
        std::array<std::string_view, 3> cols;
        std::size_t n_cols = 0;
        std::size_t start = 0;
        bool too_many = false;
        while (true) {
            const std::size_t tab = line.find('\t', start);
            const std::string_view col =
                line.substr(start, tab == std::string_view::npos ? line.size() - start
                                                                 : tab - start);
            if (n_cols < 3) {
                cols[n_cols++] = col;
            } else {
                too_many = true;
                break;
            }
            if (tab == std::string_view::npos) break;
            start = tab + 1;
        }
        if (too_many || n_cols != 3) {
            out.errors.push_back({offset, "column-count"});
            return;
        }
        for (const auto& col : cols) {
            if (col.empty()) {
                out.errors.push_back({offset, "empty-field"});
                return;
            }
            if (col.find(' ') != std::string_view::npos) {
                out.errors.push_back({offset, "whitespace-in-field"});
                return;
            }
        }
        out.triples.push_back({std::string(cols[0]), std::string(cols[1]),
                               std::string(cols[2])});
    });
    return out;
}

ParseFileResult parse_file(const std::string& path, TripleFormat format,
                           std::uint64_t n_chunks, unsigned threads,
                           ProgressLogger* progress) {
    std::error_code ec;
    const std::uint64_t size = std::filesystem::file_size(path, ec);
    if (ec) throw IoError("cannot stat: " + path);

    std::ifstream probe_stream(path, std::ios::binary);
    if (!probe_stream) throw IoError("cannot open: " + path);
    LineProbe probe = [&](std::uint64_t offset) -> std::uint64_t {
        char buf[4096];
        std::uint64_t pos = offset;
        probe_stream.clear();
        probe_stream.seekg(static_cast<std::streamoff>(offset));
        while (pos < size) {
            probe_stream.read(buf, sizeof(buf));
            const std::streamsize got = probe_stream.gcount();
            if (got <= 0) break;
            for (std::streamsize i = 0; i < got; ++i)
                if (buf[i] == '\n') return pos + static_cast<std::uint64_t>(i);
            pos += static_cast<std::uint64_t>(got);
        }
        return size;
    };

    const std::vector<FileChunk> chunks = chunk_file(size, probe, n_chunks);

    std::vector<ChunkParseResult> parts(chunks.size());
    parallel_for(chunks.size(), threads, [&](std::size_t i) {
        // Each worker reads its own chunk through its own stream.
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open: " + path);
        const auto& c = chunks[i];
        std::string buf(static_cast<std::size_t>(c.byte_end - c.byte_start), '\0');
        in.seekg(static_cast<std::streamoff>(c.byte_start));
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (static_cast<std::uint64_t>(in.gcount()) != buf.size())
            throw IoError("short read: " + path);
        parts[i] = format == TripleFormat::NTriples ? parse_ntriples_chunk(buf)
                                                    : parse_tsv_chunk(buf);
        if (progress)
            progress->emit({{"phase", "ingest"},
                            {"chunk", i},
                            {"triples", parts[i].triples.size()},
                            {"errors", parts[i].errors.size()}});
    });

    ParseFileResult out;
    out.n_chunks_used = chunks.size();
    for (std::size_t i = 0; i < parts.size(); ++i) {
        auto& p = parts[i];
        out.triples.insert(out.triples.end(),
                           std::make_move_iterator(p.triples.begin()),
                           std::make_move_iterator(p.triples.end()));
        for (auto& e : p.errors)
            out.errors.push_back({e.offset + chunks[i].byte_start, std::move(e.reason)});
        out.skipped_lines += p.skipped_lines;
        out.total_lines += p.total_lines;
    }
    return out;
}

TripleFormat detect_format(const std::string& path) {
    const auto ext = std::filesystem::path(path).extension().string();
    if (ext == ".tsv") return TripleFormat::Tsv;
    if (ext == ".nt" || ext == ".ntriples") return TripleFormat::NTriples;

    std::ifstream in(path, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        return line.find('\t') != std::string::npos ? TripleFormat::Tsv
                                                    : TripleFormat::NTriples;
    }
    return TripleFormat::NTriples;
}

}  // namespace kge
