#include "kge/models.hpp"

#include <cmath>

namespace kge {

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::DistMult: return "distmult";
        case ModelKind::ComplEx: return "complex";
        case ModelKind::QMult: return "qmult";
    }
    return "?";
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "distmult") return ModelKind::DistMult;
    if (name == "complex") return ModelKind::ComplEx;
    if (name == "qmult") return ModelKind::QMult;
    throw ConfigError("unknown model: " + name);
}

std::uint64_t ModelSpec::dim_multiple() const {
    switch (kind) {
        case ModelKind::DistMult: return 1;
        case ModelKind::ComplEx: return 2;
        case ModelKind::QMult: return 4;
    }
    return 1;
}

void ModelSpec::validate() const {
    if (dim == 0) throw DimensionError("embedding dimension must be >= 1");
    const std::uint64_t m = dim_multiple();
    if (dim % m != 0)
        throw DimensionError(std::string(model_kind_name(kind)) + " requires d divisible by " +
                             std::to_string(m) + ", got " + std::to_string(dim));
}

double score_distmult(std::span<const float> h, std::span<const float> r,
                      std::span<const float> t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i)
        acc += static_cast<double>(h[i]) * static_cast<double>(r[i]) *
               static_cast<double>(t[i]);
    return acc;
}

double score_complex(std::span<const float> h, std::span<const float> r,
                     std::span<const float> t) {
    if (h.size() % 2 != 0) throw DimensionError("complex requires even d");
    const std::size_t half = h.size() / 2;
    const auto hre = h.first(half), him = h.subspan(half);
    const auto rre = r.first(half), rim = r.subspan(half);
    const auto tre = t.first(half), tim = t.subspan(half);

    // Four term sums, combined exactly in this order.
    double rrr = 0.0, rii = 0.0, iri = 0.0, iir = 0.0;
    for (std::size_t i = 0; i < half; ++i)
        rrr += static_cast<double>(hre[i]) * rre[i] * tre[i];
    for (std::size_t i = 0; i < half; ++i)
        rii += static_cast<double>(hre[i]) * rim[i] * tim[i];
    for (std::size_t i = 0; i < half; ++i)
        iri += static_cast<double>(him[i]) * rre[i] * tim[i];
    for (std::size_t i = 0; i < half; ++i)
        iir += static_cast<double>(him[i]) * rim[i] * tre[i];
    return rrr + rii + iri - iir;
}

namespace {

struct Quat {
    double a, b, c, e;
};

// Hamilton product p (x) q.
inline Quat hamilton(const Quat& p, const Quat& q) {
    return {p.a * q.a - p.b * q.b - p.c * q.c - p.e * q.e,
            p.a * q.b + p.b * q.a + p.c * q.e - p.e * q.c,
            p.a * q.c - p.b * q.e + p.c * q.a + p.e * q.b,
            p.a * q.e + p.b * q.c - p.c * q.b + p.e * q.a};
}

inline Quat conj(const Quat& q) { return {q.a, -q.b, -q.c, -q.e}; }

inline Quat quat_at(std::span<const float> v, std::size_t quarter, std::size_t i) {
    return {static_cast<double>(v[i]), static_cast<double>(v[quarter + i]),
            static_cast<double>(v[2 * quarter + i]),
            static_cast<double>(v[3 * quarter + i])};
}

void require_quarters(std::span<const float> v) {
    if (v.size() % 4 != 0) throw DimensionError("qmult requires d divisible by 4");
}

}  // namespace

double score_qmult(std::span<const float> h, std::span<const float> r,
                   std::span<const float> t) {
    require_quarters(h);
    const std::size_t quarter = h.size() / 4;
    double acc = 0.0;
    for (std::size_t i = 0; i < quarter; ++i) {
        const Quat hr = hamilton(quat_at(h, quarter, i), quat_at(r, quarter, i));
        const Quat ti = quat_at(t, quarter, i);
        acc += ((hr.a * ti.a + hr.b * ti.b) + hr.c * ti.c) + hr.e * ti.e;
    }
    return acc;
}

double score_triple(const ModelSpec& spec, std::span<const float> h,
                    std::span<const float> r, std::span<const float> t) {
    switch (spec.kind) {
        case ModelKind::DistMult: return score_distmult(h, r, t);
        case ModelKind::ComplEx: return score_complex(h, r, t);
        case ModelKind::QMult: return score_qmult(h, r, t);
    }
    return 0.0;
}

ScoreGradient score_gradient(const ModelSpec& spec, std::span<const float> h,
                             std::span<const float> r, std::span<const float> t) {
    const std::size_t d = h.size();
    ScoreGradient g;
    g.d_head.resize(d);
    g.d_rel.resize(d);
    g.d_tail.resize(d);

    switch (spec.kind) {
        case ModelKind::DistMult: {
            for (std::size_t i = 0; i < d; ++i) {
                g.d_head[i] = static_cast<double>(r[i]) * t[i];
                g.d_rel[i] = static_cast<double>(h[i]) * t[i];
                g.d_tail[i] = static_cast<double>(h[i]) * r[i];
            }
            break;
        }
        case ModelKind::ComplEx: {
            if (d % 2 != 0) throw DimensionError("complex requires even d");
            const std::size_t half = d / 2;
            for (std::size_t i = 0; i < half; ++i) {
                const double hre = h[i], him = h[half + i];
                const double rre = r[i], rim = r[half + i];
                const double tre = t[i], tim = t[half + i];
                g.d_head[i] = rre * tre + rim * tim;
                g.d_head[half + i] = rre * tim - rim * tre;
                g.d_rel[i] = hre * tre + him * tim;
                g.d_rel[half + i] = hre * tim - him * tre;
                g.d_tail[i] = hre * rre - him * rim;
                g.d_tail[half + i] = hre * rim + him * rre;
            }
            break;
        }
        case ModelKind::QMult: {
            require_quarters(h);
            const std::size_t quarter = d / 4;
            for (std::size_t i = 0; i < quarter; ++i) {
                const Quat hq = quat_at(h, quarter, i);
                const Quat rq = quat_at(r, quarter, i);
                const Quat tq = quat_at(t, quarter, i);
                // d/dt = h(x)r, d/dh = t(x)conj(r), d/dr = conj(h)(x)t.
                const Quat dt = hamilton(hq, rq);
                const Quat dh = hamilton(tq, conj(rq));
                const Quat dr = hamilton(conj(hq), tq);
                g.d_tail[i] = dt.a;
                g.d_tail[quarter + i] = dt.b;
                g.d_tail[2 * quarter + i] = dt.c;
                g.d_tail[3 * quarter + i] = dt.e;
                g.d_head[i] = dh.a;
                g.d_head[quarter + i] = dh.b;
                g.d_head[2 * quarter + i] = dh.c;
                g.d_head[3 * quarter + i] = dh.e;
                g.d_rel[i] = dr.a;
                g.d_rel[quarter + i] = dr.b;
                g.d_rel[2 * quarter + i] = dr.c;
                g.d_rel[3 * quarter + i] = dr.e;
            }
            break;
        }
    }
    return g;
}

namespace {

template <double (*ScoreFn)(std::span<const float>, std::span<const float>,
                            std::span<const float>)>
class KernelModel : public ScoringModel {
   public:
    KernelModel(const char* name, std::uint64_t multiple, ModelKind kind)
        : name_(name), multiple_(multiple), kind_(kind) {}
    const char* name() const override { return name_; }
    std::uint64_t dim_multiple() const override { return multiple_; }
    double score(std::span<const float> h, std::span<const float> r,
                 std::span<const float> t) const override {
        return ScoreFn(h, r, t);
    }
    ScoreGradient gradient(std::span<const float> h, std::span<const float> r,
                           std::span<const float> t) const override {
        return score_gradient(ModelSpec{kind_, h.size()}, h, r, t);
    }

   private:
    const char* name_;
    std::uint64_t multiple_;
    ModelKind kind_;
};

}  // namespace

std::unique_ptr<ScoringModel> make_model(const ModelSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case ModelKind::DistMult:
            return std::make_unique<KernelModel<score_distmult>>("distmult", 1,
                                                                 ModelKind::DistMult);
        case ModelKind::ComplEx:
            return std::make_unique<KernelModel<score_complex>>("complex", 2,
                                                                ModelKind::ComplEx);
        case ModelKind::QMult:
            return std::make_unique<KernelModel<score_qmult>>("qmult", 4, ModelKind::QMult);
    }
    throw ConfigError("unknown model kind");
}

float init_embedding_value(std::uint64_t seed, MatrixKind matrix, std::uint64_t row,
                           std::uint64_t col, std::uint64_t dim) {
    const double u = init_unit_draw(seed, matrix, row, col);
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    return static_cast<float>((2.0 * u - 1.0) * bound);
}

EmbeddingStore init_embeddings(const ModelSpec& spec, std::uint64_t entity_count,
                               std::uint64_t relation_count, std::uint64_t seed) {
    spec.validate();
    if (entity_count == 0 || relation_count == 0)
        throw ConfigError("entity and relation counts must be >= 1");
    EmbeddingStore store;
    store.entity = Matrix(entity_count, spec.dim);
    store.relation = Matrix(relation_count, spec.dim);
    for (std::uint64_t i = 0; i < entity_count; ++i) {
        auto row = store.entity.row(i);
        for (std::uint64_t c = 0; c < spec.dim; ++c)
            row[c] = init_embedding_value(seed, MatrixKind::Entity, i, c, spec.dim);
    }
    for (std::uint64_t i = 0; i < relation_count; ++i) {
        auto row = store.relation.row(i);
        for (std::uint64_t c = 0; c < spec.dim; ++c)
            row[c] = init_embedding_value(seed, MatrixKind::Relation, i, c, spec.dim);
    }
    return store;
}

}  // namespace kge
