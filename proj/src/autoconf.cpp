#include "kge/autoconf.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

namespace kge {

namespace {

// Parameters plus two Adam moment matrices: 4*d*rows*3 bytes. The fit check
// divides instead of multiplying so huge row counts cannot overflow.
bool model_fits(std::uint64_t d, std::uint64_t rows, std::uint64_t budget) {
    return rows <= budget / (12 * d);
}

}  // namespace

SuggestResult suggest_config(const KgStats& stats, ModelKind model_kind) {
    if (stats.entity_count == 0 || stats.relation_count == 0 || stats.triple_count == 0 ||
        stats.available_memory_bytes == 0)
        throw ConfigError("dataset statistics must be positive");

    SuggestResult out;
    out.entity_width = select_index_width(stats.entity_count);
    out.relation_width = select_index_width(stats.relation_count);

    const std::uint64_t rows = stats.entity_count + stats.relation_count;
    const std::uint64_t budget = stats.available_memory_bytes / 2;
    const std::uint64_t multiple = ModelSpec{model_kind, 0}.dim_multiple();

    std::uint64_t d = 0;
    for (std::uint64_t cand : {256ull, 128ull, 64ull, 32ull}) {
        if (model_fits(cand, rows, budget)) {
            d = cand;
            break;
        }
    }
    if (d == 0) d = 8;  // floor
    d -= d % multiple;  // all candidates already satisfy 1/2/4, kept as a guard
    if (!model_fits(d, rows, budget))
        throw InsufficientMemory("even d=8 exceeds half the memory budget");

    // KvsAll logit buffers dominate transient memory: ~64 floats of workspace
    // per entity per batch row.
    std::uint64_t batch = stats.available_memory_bytes / 256 / stats.entity_count;
    batch = batch == 0 ? 0 : std::bit_floor(batch);
    batch = std::max<std::uint64_t>(32, std::min<std::uint64_t>(batch, 16384));

    out.config.model = {model_kind, d};
    out.config.batch_size = batch;
    out.config.optimizer = OptimizerKind::Adam;
    out.config.lr = 0.1 / std::sqrt(static_cast<double>(d));
    out.config.epochs = 100;

    auto line = [&](std::ostringstream& s) { out.rationale.push_back(s.str()); };
    std::ostringstream s;
    s << "entity index width " << static_cast<int>(out.entity_width) << "-bit: smallest that holds "
      << stats.entity_count << " indices";
    line(s);
    s.str("");
    s << "relation index width " << static_cast<int>(out.relation_width)
      << "-bit: smallest that holds " << stats.relation_count << " indices";
    line(s);
    s.str("");
    s << "d=" << d << ": largest of {32,64,128,256} (floor 8) with parameters+moments (4*d*"
      << rows << "*3 B) within half of " << stats.available_memory_bytes << " B";
    line(s);
    s.str("");
    s << "batch_size=" << batch << ": largest power of two fitting KvsAll workspace, clamped to [32, 16384]";
    line(s);
    s.str("");
    s << "lr=" << out.config.lr << ": 0.1/sqrt(d) for Adam";
    line(s);
    s.str("");
    s << "epochs=" << out.config.epochs << ": default budget";
    line(s);
    return out;
}

std::uint64_t detect_available_memory() {
    std::ifstream meminfo("/proc/meminfo");
    std::string key;
    std::uint64_t kb = 0;
    while (meminfo >> key >> kb) {
        if (key == "MemAvailable:") return kb * 1024;
        meminfo.ignore(256, '\n');
    }
    return 1ull << 30;
}

}  // namespace kge
