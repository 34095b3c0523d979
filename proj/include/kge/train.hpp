#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "kge/models.hpp"
#include "kge/parallel.hpp"
#include "kge/progress.hpp"
#include "kge/rng.hpp"
#include "kge/vocab.hpp"

namespace kge {

enum class LossKind { KvsAllBce, NegSampleBce };
enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
    ModelSpec model;
    LossKind loss = LossKind::KvsAllBce;
    std::uint32_t negatives = 1;  // per positive, NegSampleBce only
    OptimizerKind optimizer = OptimizerKind::Adam;
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t batch_size = 128;
    std::uint64_t epochs = 100;
    std::uint64_t seed = 0;
    double label_smoothing = 0.1;

    void validate() const;

    bool operator==(const TrainConfig&) const = default;
};

// First/second Adam moment matrices mirroring the store shapes (empty for
// SGD) plus the shared step counter.
struct OptimizerState {
    Matrix m_entity, v_entity;
    Matrix m_relation, v_relation;
    std::uint64_t step = 0;

    static OptimizerState create(std::uint64_t entity_count, std::uint64_t relation_count,
                                 std::uint64_t dim, OptimizerKind kind) {
        OptimizerState s;
        if (kind == OptimizerKind::Adam) {
            s.m_entity = Matrix(entity_count, dim);
            s.v_entity = Matrix(entity_count, dim);
            s.m_relation = Matrix(relation_count, dim);
            s.v_relation = Matrix(relation_count, dim);
        }
        return s;
    }

    bool has_moments() const { return !m_entity.empty() || !m_relation.empty(); }

    bool operator==(const OptimizerState&) const = default;
};

double stable_sigmoid(double x);

// Single-element binary cross entropy in the log-sum-exp form:
// max(x,0) - x*y + log(1 + exp(-|x|)).
double bce_term(double logit, double label);

// Mean BCE over a batch of (logit, smoothed-label) pairs, summed left to right.
double bce_loss(std::span<const double> logits, std::span<const double> labels);

inline double smooth_label(bool positive, double smoothing) {
    return positive ? 1.0 - smoothing : smoothing;
}

// k corruptions of a triple: a fair coin picks head or tail, the replacement
// entity is uniform. Duplicates of the original are kept (no rejection).
std::vector<Triple> negative_sample(const Triple& triple, std::uint32_t k,
                                    std::uint64_t entity_count, RngState& rng);

// Per-row gradient accumulators, keyed by row index. std::map keeps the apply
// order deterministic.
struct SparseGradients {
    std::map<std::uint64_t, std::vector<double>> entity;
    std::map<std::uint64_t, std::vector<double>> relation;
};

namespace detail {

inline void check_finite(const std::vector<double>& g, std::uint64_t row) {
    for (double v : g)
        if (!std::isfinite(v))
            throw NonFiniteGradient("non-finite gradient at row " + std::to_string(row));
}

// One row update; shared by the plain and the per-shard apply paths. All
// arithmetic in double, storage in float32.
inline void update_row(std::span<float> row, std::span<float> m, std::span<float> v,
                       const std::vector<double>& g, const TrainConfig& cfg,
                       double bias1, double bias2) {
    if (g.size() != row.size())
        throw ConfigError("gradient length does not match embedding dimension");
    if (cfg.optimizer == OptimizerKind::Sgd) {
        for (std::size_t i = 0; i < row.size(); ++i)
            row[i] = static_cast<float>(static_cast<double>(row[i]) - cfg.lr * g[i]);
        return;
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
        const double mi = cfg.beta1 * static_cast<double>(m[i]) + (1.0 - cfg.beta1) * g[i];
        const double vi =
            cfg.beta2 * static_cast<double>(v[i]) + (1.0 - cfg.beta2) * g[i] * g[i];
        m[i] = static_cast<float>(mi);
        v[i] = static_cast<float>(vi);
        const double m_hat = mi / bias1;
        const double v_hat = vi / bias2;
        row[i] = static_cast<float>(static_cast<double>(row[i]) -
                                    cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
    }
}

}  // namespace detail

// Applies accumulated gradients to the touched rows only; untouched rows are
// never read or written. SGD: row -= lr*g. Adam: bias-corrected moment update
// with one shared step counter per call.
template <typename Store>
void apply_gradients(Store& store, OptimizerState& opt, const SparseGradients& grads,
                     const TrainConfig& cfg) {
    for (const auto& [row, g] : grads.entity) {
        if (row >= store.entity_count()) throw IndexOutOfRange("gradient entity row");
        detail::check_finite(g, row);
    }
    for (const auto& [row, g] : grads.relation) {
        if (row >= store.relation_count()) throw IndexOutOfRange("gradient relation row");
        detail::check_finite(g, row);
    }

    double bias1 = 1.0, bias2 = 1.0;
    if (cfg.optimizer == OptimizerKind::Adam) {
        opt.step += 1;
        bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(opt.step));
        bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(opt.step));
    }

    const bool adam = cfg.optimizer == OptimizerKind::Adam;
    std::span<float> none;
    for (const auto& [row, g] : grads.entity)
        detail::update_row(store.mutable_entity_row(row),
                           adam ? opt.m_entity.row(row) : none,
                           adam ? opt.v_entity.row(row) : none, g, cfg, bias1, bias2);
    for (const auto& [row, g] : grads.relation)
        detail::update_row(store.mutable_relation_row(row),
                           adam ? opt.m_relation.row(row) : none,
                           adam ? opt.v_relation.row(row) : none, g, cfg, bias1, bias2);
}

// Mini-batch trainer, generic over the parameter container (EmbeddingStore or
// ShardedStore). Everything downstream of (dataset, config, seed) is
// deterministic: batch order comes from a per-epoch keyed shuffle, gradient
// contributions are computed per query and reduced in query order regardless
// of thread count, and the negative-sampling stream advances sequentially.
template <typename Store>
class Trainer {
   public:
    Trainer(const IndexedDataset& data, Store& store, OptimizerState& opt, TrainConfig cfg,
            RngState rng, std::uint64_t completed_epochs, ProgressLogger* progress,
            unsigned threads)
        : data_(data),
          store_(store),
          opt_(opt),
          cfg_(std::move(cfg)),
          rng_(rng),
          epochs_done_(completed_epochs),
          progress_(progress),
          threads_(threads == 0 ? 1 : threads) {
        cfg_.validate();
        if (data_.triples.empty()) throw ConfigError("dataset is empty");
        if (store_.dim() != cfg_.model.dim)
            throw DimensionError("store dimension does not match config");
        model_ = make_model(cfg_.model);
        if (cfg_.loss == LossKind::KvsAllBce) build_queries();
    }

    // One pass over the shuffled batches; returns the mean batch loss.
    double train_epoch() {
        const std::uint64_t epoch = epochs_done_;
        const std::uint64_t n_items =
            cfg_.loss == LossKind::KvsAllBce ? queries_.size() : data_.triples.size();

        std::vector<std::uint64_t> order(n_items);
        for (std::uint64_t i = 0; i < n_items; ++i) order[i] = i;
        RngState shuffle_rng = RngState::keyed(cfg_.seed, epoch);
        for (std::uint64_t i = n_items; i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);

        double loss_sum = 0.0;
        std::uint64_t n_batches = 0;
        for (std::uint64_t begin = 0; begin < n_items; begin += cfg_.batch_size) {
            const std::uint64_t end = std::min<std::uint64_t>(begin + cfg_.batch_size, n_items);
            const auto t0 = std::chrono::steady_clock::now();
            BatchStats stats =
                cfg_.loss == LossKind::KvsAllBce
                    ? run_kvsall_batch({order.data() + begin, order.data() + end})
                    : run_negsample_batch({order.data() + begin, order.data() + end});
            const double secs =
                std::max(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                             .count(),
                         1e-9);
            loss_sum += stats.loss;
            ++n_batches;
            if (progress_)
                progress_->emit({{"epoch", epoch + 1},
                                 {"batch", n_batches},
                                 {"loss", stats.loss},
                                 {"tps", static_cast<double>(stats.triples) / secs}});
        }
        epochs_done_ += 1;
        return loss_sum / static_cast<double>(n_batches);
    }

    std::uint64_t completed_epochs() const { return epochs_done_; }
    const RngState& rng_state() const { return rng_; }

   private:
    struct BatchStats {
        double loss = 0.0;
        std::uint64_t triples = 0;
    };

    // One query/triple's contribution: (row, grad) pairs in emission order
    // plus its share of the batch loss.
    struct GradPacket {
        std::vector<std::pair<std::uint64_t, std::vector<double>>> entity;
        std::vector<std::pair<std::uint64_t, std::vector<double>>> relation;
        double loss_sum = 0.0;
    };

    struct Query {
        std::uint64_t head = 0;
        std::uint64_t rel = 0;
        std::vector<std::uint64_t> tails;
    };

    void build_queries() {
        std::map<std::pair<std::uint64_t, std::uint64_t>, std::vector<std::uint64_t>> by_key;
        for (const auto& t : data_.triples) by_key[{t.head, t.relation}].push_back(t.tail);
        queries_.reserve(by_key.size());
        for (auto& [key, tails] : by_key) {
            std::sort(tails.begin(), tails.end());
            tails.erase(std::unique(tails.begin(), tails.end()), tails.end());
            queries_.push_back({key.first, key.second, std::move(tails)});
        }
    }

    static void axpy(std::vector<double>& acc, double a, const std::vector<double>& x) {
        for (std::size_t i = 0; i < x.size(); ++i) acc[i] += a * x[i];
    }

    BatchStats run_kvsall_batch(std::span<const std::uint64_t> batch) {
        const std::uint64_t n_entities = store_.entity_count();
        const double denom = static_cast<double>(batch.size()) * n_entities;
        const double s = cfg_.label_smoothing;

        std::vector<GradPacket> packets(batch.size());
        std::uint64_t positives = 0;
        for (std::uint64_t qi : batch) positives += queries_[qi].tails.size();

        parallel_for(batch.size(), threads_, [&](std::size_t bi) {
            const Query& q = queries_[batch[bi]];
            GradPacket& pkt = packets[bi];
            const auto h = store_.entity_row(q.head);
            const auto r = store_.relation_row(q.rel);
            std::vector<double> d_head(cfg_.model.dim, 0.0);
            std::vector<double> d_rel(cfg_.model.dim, 0.0);
            pkt.entity.reserve(n_entities + 1);
            auto tail_it = q.tails.begin();
            for (std::uint64_t j = 0; j < n_entities; ++j) {
                const bool positive = tail_it != q.tails.end() && *tail_it == j;
                if (positive) ++tail_it;
                const auto t = store_.entity_row(j);
                const double x = model_->score(h, r, t);
                const double y = smooth_label(positive, s);
                pkt.loss_sum += bce_term(x, y);
                const double gs = (stable_sigmoid(x) - y) / denom;
                ScoreGradient sg = model_->gradient(h, r, t);
                axpy(d_head, gs, sg.d_head);
                axpy(d_rel, gs, sg.d_rel);
                for (auto& v : sg.d_tail) v *= gs;
                pkt.entity.emplace_back(j, std::move(sg.d_tail));
            }
            pkt.entity.emplace_back(q.head, std::move(d_head));
            pkt.relation.emplace_back(q.rel, std::move(d_rel));
        });

        apply_packets(packets);
        return {sum_losses(packets) / denom, positives};
    }

    BatchStats run_negsample_batch(std::span<const std::uint64_t> batch) {
        const double s = cfg_.label_smoothing;
        const std::uint64_t per_triple = 1ull + cfg_.negatives;
        const double denom = static_cast<double>(batch.size() * per_triple);

        // Corruptions are drawn sequentially in batch order so the stream
        // state is independent of the worker schedule.
        std::vector<std::vector<Triple>> corruptions(batch.size());
        for (std::size_t bi = 0; bi < batch.size(); ++bi)
            corruptions[bi] = negative_sample(data_.triples[batch[bi]], cfg_.negatives,
                                              store_.entity_count(), rng_);

        std::vector<GradPacket> packets(batch.size());
        parallel_for(batch.size(), threads_, [&](std::size_t bi) {
            GradPacket& pkt = packets[bi];
            auto add_sample = [&](const Triple& t, bool positive) {
                const auto h = store_.entity_row(t.head);
                const auto r = store_.relation_row(t.relation);
                const auto tl = store_.entity_row(t.tail);
                const double x = model_->score(h, r, tl);
                const double y = smooth_label(positive, s);
                pkt.loss_sum += bce_term(x, y);
                const double gs = (stable_sigmoid(x) - y) / denom;
                ScoreGradient sg = model_->gradient(h, r, tl);
                for (auto& v : sg.d_head) v *= gs;
                for (auto& v : sg.d_rel) v *= gs;
                for (auto& v : sg.d_tail) v *= gs;
                pkt.entity.emplace_back(t.head, std::move(sg.d_head));
                pkt.relation.emplace_back(t.relation, std::move(sg.d_rel));
                pkt.entity.emplace_back(t.tail, std::move(sg.d_tail));
            };
            add_sample(data_.triples[batch[bi]], true);
            for (const auto& neg : corruptions[bi]) add_sample(neg, false);
        });

        apply_packets(packets);
        return {sum_losses(packets) / denom, batch.size()};
    }

    static double sum_losses(const std::vector<GradPacket>& packets) {
        double total = 0.0;
        for (const auto& p : packets) total += p.loss_sum;
        return total;
    }

    void apply_packets(const std::vector<GradPacket>& packets) {
        SparseGradients grads;
        auto accumulate = [](std::map<std::uint64_t, std::vector<double>>& acc,
                             const std::pair<std::uint64_t, std::vector<double>>& item) {
            auto [it, fresh] = acc.try_emplace(item.first, item.second);
            if (!fresh)
                for (std::size_t i = 0; i < item.second.size(); ++i)
                    it->second[i] += item.second[i];
        };
        for (const auto& pkt : packets) {
            for (const auto& item : pkt.entity) accumulate(grads.entity, item);
            for (const auto& item : pkt.relation) accumulate(grads.relation, item);
        }
        apply_gradients(store_, opt_, grads, cfg_);
    }

    const IndexedDataset& data_;
    Store& store_;
    OptimizerState& opt_;
    TrainConfig cfg_;
    RngState rng_;
    std::uint64_t epochs_done_;
    ProgressLogger* progress_;
    unsigned threads_;
    std::unique_ptr<ScoringModel> model_;
    std::vector<Query> queries_;
};

}  // namespace kge
