#include "kge/checkpoint.hpp"

#include <cstring>

#include "kge/binio.hpp"

namespace kge {

namespace {
constexpr char kMagic[8] = {'K', 'G', 'E', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

const char* loss_name(LossKind k) {
    return k == LossKind::KvsAllBce ? "kvsall" : "negsample";
}

const char* opt_name(OptimizerKind k) { return k == OptimizerKind::Sgd ? "sgd" : "adam"; }

void put_matrix(std::vector<std::uint8_t>& buf, const Matrix& m) {
    for (float v : m.data()) binio::put_f32(buf, v);
}

Matrix read_matrix(binio::Reader& r, std::uint64_t rows, std::uint64_t cols) {
    Matrix m(rows, cols);
    r.need(m.data().size() * 4);
    for (auto& v : m.data()) v = r.f32();
    return m;
}

}  // namespace

void Checkpoint::validate() const {
    config.validate();
    const std::uint64_t d = config.model.dim;
    if (store.dim() != d || store.entity_count() != vocab.entity_count() ||
        store.relation_count() != vocab.relation_count())
        throw ConfigError("checkpoint store shape does not match vocabulary");
    const bool adam = config.optimizer == OptimizerKind::Adam;
    if (adam != opt.has_moments())
        throw ConfigError("optimizer state does not match optimizer kind");
    if (adam && (opt.m_entity.rows() != store.entity_count() ||
                 opt.m_relation.rows() != store.relation_count() ||
                 opt.m_entity.cols() != d))
        throw ConfigError("optimizer state shape mismatch");
}

nlohmann::json config_to_json(const TrainConfig& cfg) {
    return {{"model", model_kind_name(cfg.model.kind)},
            {"dim", cfg.model.dim},
            {"loss", loss_name(cfg.loss)},
            {"negatives", cfg.negatives},
            {"optimizer", opt_name(cfg.optimizer)},
            {"lr", cfg.lr},
            {"beta1", cfg.beta1},
            {"beta2", cfg.beta2},
            {"epsilon", cfg.epsilon},
            {"batch_size", cfg.batch_size},
            {"epochs", cfg.epochs},
            {"seed", cfg.seed},
            {"label_smoothing", cfg.label_smoothing}};
}

TrainConfig config_from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    cfg.model.kind = model_kind_from_name(j.at("model").get<std::string>());
    cfg.model.dim = j.at("dim").get<std::uint64_t>();
    const auto loss = j.at("loss").get<std::string>();
    if (loss == "kvsall")
        cfg.loss = LossKind::KvsAllBce;
    else if (loss == "negsample")
        cfg.loss = LossKind::NegSampleBce;
    else
        throw ConfigError("unknown loss: " + loss);
    cfg.negatives = j.at("negatives").get<std::uint32_t>();
    const auto opt = j.at("optimizer").get<std::string>();
    if (opt == "sgd")
        cfg.optimizer = OptimizerKind::Sgd;
    else if (opt == "adam")
        cfg.optimizer = OptimizerKind::Adam;
    else
        throw ConfigError("unknown optimizer: " + opt);
    cfg.lr = j.at("lr").get<double>();
    cfg.beta1 = j.at("beta1").get<double>();
    cfg.beta2 = j.at("beta2").get<double>();
    cfg.epsilon = j.at("epsilon").get<double>();
    cfg.batch_size = j.at("batch_size").get<std::uint64_t>();
    cfg.epochs = j.at("epochs").get<std::uint64_t>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.label_smoothing = j.at("label_smoothing").get<double>();
    return cfg;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
    ckpt.validate();

    nlohmann::json meta = config_to_json(ckpt.config);
    meta["completed_epochs"] = ckpt.completed_epochs;
    meta["adam_step"] = ckpt.opt.step;
    meta["entity_count"] = ckpt.vocab.entity_count();
    meta["relation_count"] = ckpt.vocab.relation_count();
    const std::string meta_str = meta.dump();

    std::vector<std::uint8_t> buf;
    binio::put_bytes(buf, kMagic, sizeof(kMagic));
    binio::put_u32(buf, kVersion);
    binio::put_u32(buf, static_cast<std::uint32_t>(meta_str.size()));
    binio::put_bytes(buf, meta_str.data(), meta_str.size());

    binio::put_u64(buf, ckpt.vocab.entity_count());
    for (const auto& s : ckpt.vocab.entities()) binio::put_string(buf, s);
    binio::put_u64(buf, ckpt.vocab.relation_count());
    for (const auto& s : ckpt.vocab.relations()) binio::put_string(buf, s);

    put_matrix(buf, ckpt.store.entity);
    put_matrix(buf, ckpt.store.relation);
    if (ckpt.config.optimizer == OptimizerKind::Adam) {
        put_matrix(buf, ckpt.opt.m_entity);
        put_matrix(buf, ckpt.opt.v_entity);
        put_matrix(buf, ckpt.opt.m_relation);
        put_matrix(buf, ckpt.opt.v_relation);
    }
    binio::put_u64(buf, ckpt.rng.s0);
    binio::put_u64(buf, ckpt.rng.s1);
    binio::put_u32(buf, binio::crc32(buf.data(), buf.size()));
    return buf;
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < sizeof(kMagic) + 4 + 4)
        throw TruncatedFile("checkpoint too small");
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw VersionUnsupported("not a KGECKPT1 checkpoint");

    const std::uint32_t computed = binio::crc32(bytes.data(), bytes.size() - 4);
    binio::Reader trailer(bytes.subspan(bytes.size() - 4));
    if (trailer.u32() != computed) throw ChecksumMismatch("checkpoint CRC mismatch");

    binio::Reader r(bytes.first(bytes.size() - 4));
    char magic[sizeof(kMagic)];
    r.raw(magic, sizeof(magic));
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw VersionUnsupported("checkpoint version " + std::to_string(version));

    Checkpoint ckpt;
    ckpt.format_version = version;
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(r.str());
        ckpt.config = config_from_json(meta);
    } catch (const nlohmann::json::exception& e) {
        throw VersionUnsupported(std::string("bad checkpoint metadata: ") + e.what());
    }
    ckpt.completed_epochs = meta.at("completed_epochs").get<std::uint64_t>();
    const std::uint64_t adam_step = meta.at("adam_step").get<std::uint64_t>();

    const std::uint64_t n_entities = r.u64();
    std::vector<std::string> ents(n_entities);
    for (auto& s : ents) s = r.str();
    const std::uint64_t n_relations = r.u64();
    std::vector<std::string> rels(n_relations);
    for (auto& s : rels) s = r.str();
    ckpt.vocab = Vocabulary::from_tables(std::move(ents), std::move(rels));

    const std::uint64_t d = ckpt.config.model.dim;
    ckpt.store.entity = read_matrix(r, n_entities, d);
    ckpt.store.relation = read_matrix(r, n_relations, d);
    if (ckpt.config.optimizer == OptimizerKind::Adam) {
        ckpt.opt.m_entity = read_matrix(r, n_entities, d);
        ckpt.opt.v_entity = read_matrix(r, n_entities, d);
        ckpt.opt.m_relation = read_matrix(r, n_relations, d);
        ckpt.opt.v_relation = read_matrix(r, n_relations, d);
    }
    ckpt.opt.step = adam_step;
    ckpt.rng.s0 = r.u64();
    ckpt.rng.s1 = r.u64();
    if (r.remaining() != 0) throw VersionUnsupported("trailing bytes in checkpoint");
    ckpt.validate();
    return ckpt;
}

std::uint64_t save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    const auto bytes = serialize_checkpoint(ckpt);
    binio::write_file(path, bytes);
    return bytes.size();
}

Checkpoint load_checkpoint(const std::string& path) {
    const auto bytes = binio::read_file(path);
    return deserialize_checkpoint(bytes);
}

Checkpoint extend_vocabulary(const Checkpoint& ckpt,
                             const std::vector<RawTriple>& new_triples, std::uint64_t seed) {
    ckpt.validate();

    std::vector<std::string> new_entities;
    std::vector<std::string> new_relations;
    for (const auto& t : new_triples) {
        if (!ckpt.vocab.find_entity(t.head)) new_entities.push_back(t.head);
        if (!ckpt.vocab.find_entity(t.tail)) new_entities.push_back(t.tail);
        if (!ckpt.vocab.find_relation(t.relation)) new_relations.push_back(t.relation);
    }

    Checkpoint out = ckpt;
    const std::uint64_t old_entities = out.vocab.entity_count();
    const std::uint64_t old_relations = out.vocab.relation_count();
    out.vocab.append_entities(std::move(new_entities));
    out.vocab.append_relations(std::move(new_relations));
    const std::uint64_t d = out.config.model.dim;

    auto grow = [&](Matrix& m, std::uint64_t old_rows, std::uint64_t new_rows,
                    MatrixKind kind, bool init) {
        if (new_rows == old_rows) return;
        Matrix grown(new_rows, d);
        std::memcpy(grown.data().data(), m.data().data(),
                    m.data().size() * sizeof(float));
        if (init)
            for (std::uint64_t row = old_rows; row < new_rows; ++row) {
                auto dst = grown.row(row);
                for (std::uint64_t c = 0; c < d; ++c)
                    dst[c] = init_embedding_value(seed, kind, row, c, d);
            }
        m = std::move(grown);
    };

    grow(out.store.entity, old_entities, out.vocab.entity_count(), MatrixKind::Entity, true);
    grow(out.store.relation, old_relations, out.vocab.relation_count(), MatrixKind::Relation,
         true);
    if (out.config.optimizer == OptimizerKind::Adam) {
        grow(out.opt.m_entity, old_entities, out.vocab.entity_count(), MatrixKind::Entity,
             false);
        grow(out.opt.v_entity, old_entities, out.vocab.entity_count(), MatrixKind::Entity,
             false);
        grow(out.opt.m_relation, old_relations, out.vocab.relation_count(),
             MatrixKind::Relation, false);
        grow(out.opt.v_relation, old_relations, out.vocab.relation_count(),
             MatrixKind::Relation, false);
    }
    return out;
}

}  // namespace kge
