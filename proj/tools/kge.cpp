#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "kge/autoconf.hpp"
#include "kge/checkpoint.hpp"
#include "kge/eval.hpp"
#include "kge/ingest.hpp"
#include "kge/serve.hpp"
#include "kge/shard.hpp"
#include "kge/train.hpp"
#include "kge/vocab.hpp"

namespace {

using nlohmann::json;

unsigned resolve_threads(unsigned flag_value) {
    // KGE_THREADS overrides the flag.
    if (const char* env = std::getenv("KGE_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
    }
    return flag_value == 0 ? kge::default_thread_count() : flag_value;
}

kge::TripleFormat resolve_format(const std::string& path, const std::string& flag) {
    if (flag == "nt") return kge::TripleFormat::NTriples;
    if (flag == "tsv") return kge::TripleFormat::Tsv;
    return kge::detect_format(path);
}

kge::ParseFileResult parse_triples_file(const std::string& path, const std::string& format,
                                        unsigned threads, std::uint64_t chunks,
                                        kge::ProgressLogger* progress) {
    auto result = kge::parse_file(path, resolve_format(path, format),
                                  chunks == 0 ? threads : chunks, threads, progress);
    if (!result.errors.empty()) {
        std::uint64_t shown = 0;
        for (const auto& e : result.errors) {
            if (shown++ == 10) break;
            std::cerr << json{{"parse_error", e.reason}, {"offset", e.offset}}.dump() << "\n";
        }
        std::cerr << json{{"parse_errors_total", result.errors.size()}}.dump() << "\n";
    }
    if (result.triples.empty() && !result.errors.empty())
        throw kge::KgeError(kge::ErrorClass::Data, "no parseable triples in " + path);
    return result;
}

struct ProgressSink {
    std::ofstream file;
    kge::ProgressLogger logger;

    explicit ProgressSink(const std::string& path) {
        if (path.empty() || path == "stderr") {
            logger = kge::ProgressLogger(&std::cerr);
        } else {
            file.open(path);
            if (!file) throw kge::IoError("cannot open progress sink: " + path);
            logger = kge::ProgressLogger(&file);
        }
    }
};

int cmd_index(const std::string& input, const std::string& output, const std::string& format,
              unsigned threads, std::uint64_t chunks, const std::string& progress_path) {
    ProgressSink progress(progress_path);
    auto parsed = parse_triples_file(input, format, threads, chunks, &progress.logger);
    auto vocab = kge::Vocabulary::build(parsed.triples);
    auto dataset = kge::encode_dataset(parsed.triples, std::move(vocab));
    kge::save_index(dataset, output);
    std::cout << json{{"entities", dataset.vocab.entity_count()},
                      {"relations", dataset.vocab.relation_count()},
                      {"triples", dataset.triples.size()},
                      {"parse_errors", parsed.errors.size()},
                      {"entity_width", static_cast<int>(dataset.entity_width)},
                      {"relation_width", static_cast<int>(dataset.relation_width)}}
                     .dump()
              << "\n";
    return 0;
}

kge::LossKind parse_loss(const std::string& loss, std::uint32_t& negatives) {
    if (loss == "kvsall") return kge::LossKind::KvsAllBce;
    if (loss.rfind("neg:", 0) == 0) {
        const long k = std::strtol(loss.c_str() + 4, nullptr, 10);
        if (k < 1) throw kge::ConfigError("negative count must be >= 1 in --loss neg:K");
        negatives = static_cast<std::uint32_t>(k);
        return kge::LossKind::NegSampleBce;
    }
    throw kge::ConfigError("unknown loss: " + loss + " (expected kvsall or neg:K)");
}

int cmd_train(const std::string& data, const std::string& output, const std::string& model,
              std::uint64_t d, double lr, std::uint64_t epochs, std::uint64_t batch,
              const std::string& loss, std::uint64_t shards, std::uint64_t seed,
              const std::string& optimizer, double label_smoothing,
              const std::string& resume, unsigned threads, const std::string& progress_path) {
    ProgressSink progress(progress_path);
    const kge::IndexedDataset dataset = kge::load_index(data);

    kge::Checkpoint ckpt;
    if (!resume.empty()) {
        ckpt = kge::load_checkpoint(resume);
        if (ckpt.vocab.entity_count() != dataset.vocab.entity_count() ||
            ckpt.vocab.relation_count() != dataset.vocab.relation_count())
            throw kge::ConfigError("checkpoint vocabulary does not match dataset");
        if (epochs != 0) ckpt.config.epochs = epochs;
    } else {
        kge::TrainConfig cfg;
        cfg.model.kind = kge::model_kind_from_name(model);

        // Unset size/rate flags fall back to the suggested configuration.
        kge::KgStats stats{dataset.vocab.entity_count(), dataset.vocab.relation_count(),
                           dataset.triples.size(), kge::detect_available_memory()};
        const auto suggested = kge::suggest_config(stats, cfg.model.kind);
        cfg.model.dim = d != 0 ? d : suggested.config.model.dim;
        cfg.lr = lr != 0.0 ? lr : 0.1 / std::sqrt(static_cast<double>(cfg.model.dim));
        cfg.batch_size = batch != 0 ? batch : suggested.config.batch_size;
        cfg.epochs = epochs != 0 ? epochs : suggested.config.epochs;
        cfg.seed = seed;
        cfg.label_smoothing = label_smoothing;
        cfg.loss = parse_loss(loss, cfg.negatives);
        if (optimizer == "sgd")
            cfg.optimizer = kge::OptimizerKind::Sgd;
        else if (optimizer == "adam")
            cfg.optimizer = kge::OptimizerKind::Adam;
        else
            throw kge::ConfigError("unknown optimizer: " + optimizer);
        cfg.validate();

        ckpt.config = cfg;
        ckpt.vocab = dataset.vocab;
        ckpt.store = kge::init_embeddings(cfg.model, ckpt.vocab.entity_count(),
                                          ckpt.vocab.relation_count(), cfg.seed);
        ckpt.opt = kge::OptimizerState::create(ckpt.vocab.entity_count(),
                                               ckpt.vocab.relation_count(), cfg.model.dim,
                                               cfg.optimizer);
        ckpt.rng = kge::RngState::from_seed(cfg.seed);
    }

    json echo = kge::config_to_json(ckpt.config);
    echo["event"] = "config";
    echo["shards"] = shards;
    echo["threads"] = threads;
    progress.logger.emit(echo);

    const std::uint64_t target_epochs = ckpt.config.epochs;
    auto run_epochs = [&](auto& store) {
        kge::Trainer trainer(dataset, store, ckpt.opt, ckpt.config, ckpt.rng,
                             ckpt.completed_epochs, &progress.logger, threads);
        while (trainer.completed_epochs() < target_epochs) trainer.train_epoch();
        ckpt.completed_epochs = trainer.completed_epochs();
        ckpt.rng = trainer.rng_state();
    };

    if (shards > 1) {
        kge::ShardedStore sharded = kge::shard_parameters(ckpt.store, shards);
        run_epochs(sharded);
        ckpt.store = sharded.gather();
    } else {
        run_epochs(ckpt.store);
    }

    const std::uint64_t bytes = kge::save_checkpoint(ckpt, output);
    std::cout << json{{"checkpoint", output},
                      {"bytes", bytes},
                      {"epochs", ckpt.completed_epochs}}
                     .dump()
              << "\n";
    return 0;
}

std::vector<kge::Triple> encode_against(const std::vector<kge::RawTriple>& raw,
                                        const kge::Vocabulary& vocab) {
    std::vector<kge::Triple> out;
    out.reserve(raw.size());
    for (const auto& t : raw)
        out.push_back({vocab.entity_index(t.head), vocab.relation_index(t.relation),
                       vocab.entity_index(t.tail)});
    return out;
}

int cmd_eval(const std::string& ckpt_path, const std::string& test_path,
             const std::vector<std::string>& known_paths, bool relations,
             const std::string& format, unsigned threads) {
    const kge::Checkpoint ckpt = kge::load_checkpoint(ckpt_path);

    auto test_raw = parse_triples_file(test_path, format, threads, threads, nullptr);
    const auto test = encode_against(test_raw.triples, ckpt.vocab);

    std::vector<kge::Triple> known = test;
    for (const auto& path : known_paths) {
        auto raw = parse_triples_file(path, format, threads, threads, nullptr);
        const auto encoded = encode_against(raw.triples, ckpt.vocab);
        known.insert(known.end(), encoded.begin(), encoded.end());
    }

    const auto report =
        kge::evaluate(test, known, ckpt.config.model, ckpt.store, threads);
    std::cout << report.to_json().dump() << "\n";
    if (relations) {
        const auto rel_report =
            kge::evaluate_relations(test, known, ckpt.config.model, ckpt.store, threads);
        std::cout << rel_report.to_json().dump() << "\n";
    }
    return 0;
}

int cmd_extend(const std::string& ckpt_path, const std::string& data_path,
               const std::string& output, std::uint64_t seed, const std::string& format,
               unsigned threads) {
    const kge::Checkpoint ckpt = kge::load_checkpoint(ckpt_path);
    auto parsed = parse_triples_file(data_path, format, threads, threads, nullptr);
    const std::uint64_t old_entities = ckpt.vocab.entity_count();
    const std::uint64_t old_relations = ckpt.vocab.relation_count();
    kge::Checkpoint extended = kge::extend_vocabulary(ckpt, parsed.triples, seed);
    const std::uint64_t bytes = kge::save_checkpoint(extended, output);
    std::cout << json{{"checkpoint", output},
                      {"bytes", bytes},
                      {"new_entities", extended.vocab.entity_count() - old_entities},
                      {"new_relations", extended.vocab.relation_count() - old_relations}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_suggest(const std::string& data, std::uint64_t memory, const std::string& model) {
    const kge::IndexHeader header = kge::load_index_header(data);
    kge::KgStats stats{header.entity_count, header.relation_count, header.triple_count,
                       memory == 0 ? kge::detect_available_memory() : memory};
    const auto result = kge::suggest_config(stats, kge::model_kind_from_name(model));
    for (const auto& line : result.rationale) std::cerr << "# " << line << "\n";
    json out = kge::config_to_json(result.config);
    out["entity_width"] = static_cast<int>(result.entity_width);
    out["relation_width"] = static_cast<int>(result.relation_width);
    std::cout << out.dump() << "\n";
    return 0;
}

int cmd_serve(const std::string& ckpt_path, const std::string& bind, int port) {
    kge::EmbeddingService service(kge::load_checkpoint(ckpt_path));
    const auto& ckpt = service.checkpoint();
    std::cerr << json{{"event", "serving"},
                      {"bind", bind},
                      {"port", port},
                      {"model", kge::model_kind_name(ckpt.config.model.kind)},
                      {"entities", ckpt.vocab.entity_count()},
                      {"relations", ckpt.vocab.relation_count()}}
                     .dump()
              << "\n";
    service.run(bind, port);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge graph embedding engine"};
    app.require_subcommand(1);

    unsigned threads = 0;
    app.add_option("--threads", threads, "worker threads (default: logical cores)");

    // index
    auto* index = app.add_subcommand("index", "parse a triple file into a binary index");
    std::string in_file, out_file, format = "auto", progress_path;
    std::uint64_t chunks = 0;
    index->add_option("file", in_file, "input .nt or .tsv file")->required();
    index->add_option("-o,--output", out_file, "output index path")->required();
    index->add_option("--format", format, "nt|tsv (default: by extension)");
    index->add_option("--chunks", chunks, "parallel read chunks (default: threads)");
    index->add_option("--progress", progress_path, "progress sink path or 'stderr'");

    // train
    auto* train = app.add_subcommand("train", "train embeddings from an index");
    std::string data, model = "distmult", loss = "kvsall", optimizer = "adam", resume;
    std::uint64_t d = 0, epochs = 0, batch = 0, shards = 1, seed = 0;
    double lr = 0.0, label_smoothing = 0.1;
    train->add_option("--data", data, "index file from `index`")->required();
    train->add_option("--model", model, "distmult|complex|qmult");
    train->add_option("--d", d, "embedding dimension (default: suggested)");
    train->add_option("--lr", lr, "learning rate (default: suggested)");
    train->add_option("--epochs", epochs, "total epochs (default: suggested)");
    train->add_option("--batch", batch, "batch size (default: suggested)");
    train->add_option("--loss", loss, "kvsall | neg:K");
    train->add_option("--shards", shards, "parameter row shards");
    train->add_option("--seed", seed, "RNG seed");
    train->add_option("--optimizer", optimizer, "adam|sgd");
    train->add_option("--label-smoothing", label_smoothing, "label smoothing in [0, 0.5)");
    train->add_option("--resume", resume, "checkpoint to continue from");
    train->add_option("-o,--output", out_file, "output checkpoint path")->required();
    train->add_option("--progress", progress_path, "progress sink path or 'stderr'");

    // eval
    auto* eval = app.add_subcommand("eval", "filtered link prediction metrics");
    std::string ckpt_path, test_path;
    std::vector<std::string> known_paths;
    bool relations = false;
    eval->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
    eval->add_option("--test", test_path, "test triples (.nt/.tsv)")->required();
    eval->add_option("--known", known_paths, "extra known-true triple files for filtering");
    eval->add_flag("--relations", relations, "also report relation prediction");
    eval->add_option("--format", format, "nt|tsv (default: by extension)");

    // extend
    auto* extend = app.add_subcommand("extend", "extend a checkpoint with new symbols");
    extend->add_option("--checkpoint", ckpt_path, "checkpoint to extend")->required();
    extend->add_option("--data", data, "triples with possibly-new symbols")->required();
    extend->add_option("--seed", seed, "seed for new-row initialization");
    extend->add_option("-o,--output", out_file, "output checkpoint path")->required();
    extend->add_option("--format", format, "nt|tsv (default: by extension)");

    // suggest
    auto* suggest = app.add_subcommand("suggest", "suggest a training configuration");
    std::uint64_t memory = 0;
    suggest->add_option("--data", data, "index file")->required();
    suggest->add_option("--memory", memory, "memory budget in bytes (default: detected)");
    suggest->add_option("--model", model, "distmult|complex|qmult");

    // serve
    auto* serve = app.add_subcommand("serve", "serve a checkpoint over HTTP");
    std::string bind = "127.0.0.1";
    int port = 8080;
    serve->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
    serve->add_option("--bind", bind, "bind address");
    serve->add_option("--port", port, "TCP port");

    try {
        app.parse(argc, argv);
        const unsigned n_threads = resolve_threads(threads);

        if (*index)
            return cmd_index(in_file, out_file, format, n_threads, chunks, progress_path);
        if (*train)
            return cmd_train(data, out_file, model, d, lr, epochs, batch, loss, shards, seed,
                             optimizer, label_smoothing, resume, n_threads, progress_path);
        if (*eval)
            return cmd_eval(ckpt_path, test_path, known_paths, relations, format, n_threads);
        if (*extend)
            return cmd_extend(ckpt_path, data, out_file, seed, format, n_threads);
        if (*suggest) return cmd_suggest(data, memory, model);
        if (*serve) return cmd_serve(ckpt_path, bind, port);
        return 3;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << nlohmann::json{{"error", e.what()}, {"code", 3}}.dump() << "\n";
        std::cerr << app.help() << std::flush;
        return 3;
    } catch (const kge::KgeError& e) {
        const int code = static_cast<int>(e.error_class());
        std::cerr << nlohmann::json{{"error", e.what()}, {"code", code}}.dump() << "\n";
        return code;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", e.what()}, {"code", 1}}.dump() << "\n";
        return 1;
    }
}
