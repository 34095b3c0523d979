#include "kge/serve.hpp"

#include <algorithm>
#include <numeric>

#include <httplib.h>

namespace kge {

using nlohmann::json;

EmbeddingService::EmbeddingService(Checkpoint ckpt)
    : ckpt_(std::move(ckpt)),
      model_(make_model(ckpt_.config.model)),
      started_at_(std::chrono::system_clock::now()),
      server_(std::make_unique<httplib::Server>()) {
    ckpt_.validate();
    setup_routes();
}

EmbeddingService::~EmbeddingService() { stop(); }

std::pair<int, json> EmbeddingService::handle_score(const json& request) const {
    if (!request.is_object() || !request.contains("head") || !request.contains("relation") ||
        !request.contains("tail") || !request.at("head").is_string() ||
        !request.at("relation").is_string() || !request.at("tail").is_string())
        return {400, {{"error", "bad_request"}}};

    const auto head = request.at("head").get<std::string>();
    const auto relation = request.at("relation").get<std::string>();
    const auto tail = request.at("tail").get<std::string>();

    const auto h = ckpt_.vocab.find_entity(head);
    if (!h) return {404, {{"error", "unknown_entity"}, {"symbol", head}}};
    const auto r = ckpt_.vocab.find_relation(relation);
    if (!r) return {404, {{"error", "unknown_relation"}, {"symbol", relation}}};
    const auto t = ckpt_.vocab.find_entity(tail);
    if (!t) return {404, {{"error", "unknown_entity"}, {"symbol", tail}}};

    const double score = model_->score(ckpt_.store.entity_row(*h),
                                       ckpt_.store.relation_row(*r),
                                       ckpt_.store.entity_row(*t));
    return {200, {{"score", score}}};
}

std::pair<int, json> EmbeddingService::handle_topk(const json& request) const {
    if (!request.is_object() || !request.contains("head") || !request.contains("relation") ||
        !request.contains("k") || !request.at("head").is_string() ||
        !request.at("relation").is_string() || !request.at("k").is_number_integer())
        return {400, {{"error", "bad_request"}}};

    const auto head = request.at("head").get<std::string>();
    const auto relation = request.at("relation").get<std::string>();
    const auto k = request.at("k").get<std::int64_t>();
    if (k < 1 || static_cast<std::uint64_t>(k) > ckpt_.vocab.entity_count())
        return {400, {{"error", "k_out_of_range"}, {"entities", ckpt_.vocab.entity_count()}}};

    const auto h = ckpt_.vocab.find_entity(head);
    if (!h) return {404, {{"error", "unknown_entity"}, {"symbol", head}}};
    const auto r = ckpt_.vocab.find_relation(relation);
    if (!r) return {404, {{"error", "unknown_relation"}, {"symbol", relation}}};

    const auto scores = score_kvsall(ckpt_.config.model, ckpt_.store, *h, *r);
    std::vector<std::uint64_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    // Descending score; ties broken by ascending entity index.
    std::sort(order.begin(), order.end(), [&](std::uint64_t a, std::uint64_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    json entities = json::array();
    json out_scores = json::array();
    for (std::int64_t i = 0; i < k; ++i) {
        entities.push_back(ckpt_.vocab.entity_name(order[i]));
        out_scores.push_back(scores[order[i]]);
    }
    return {200, {{"entities", entities}, {"scores", out_scores}}};
}

json EmbeddingService::handle_health() const {
    return {{"status", "ok"},
            {"model", model_->name()},
            {"entities", ckpt_.vocab.entity_count()},
            {"relations", ckpt_.vocab.relation_count()},
            {"dim", ckpt_.config.model.dim}};
}

namespace {

void reply(httplib::Response& res, const std::pair<int, json>& outcome) {
    res.status = outcome.first;
    res.set_content(outcome.second.dump(), "application/json");
}

json parse_body(const std::string& body, bool& ok) {
    ok = true;
    json parsed = json::parse(body, nullptr, false);
    if (parsed.is_discarded()) ok = false;
    return parsed;
}

}  // namespace

void EmbeddingService::setup_routes() {
    server_->Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
        bool ok = false;
        const json body = parse_body(req.body, ok);
        if (!ok) {
            reply(res, {400, {{"error", "malformed_json"}}});
            return;
        }
        reply(res, handle_score(body));
    });
    server_->Post("/topk", [this](const httplib::Request& req, httplib::Response& res) {
        bool ok = false;
        const json body = parse_body(req.body, ok);
        if (!ok) {
            reply(res, {400, {{"error", "malformed_json"}}});
            return;
        }
        reply(res, handle_topk(body));
    });
    server_->Get("/health", [this](const httplib::Request&, httplib::Response& res) {
        reply(res, {200, handle_health()});
    });
}

void EmbeddingService::run(const std::string& bind_address, int port) {
    if (!server_->listen(bind_address, port))
        throw IoError("cannot bind " + bind_address + ":" + std::to_string(port));
}

int EmbeddingService::start_async(const std::string& bind_address, int port) {
    int bound = port;
    if (port == 0) {
        bound = server_->bind_to_any_port(bind_address);
        if (bound <= 0) throw IoError("cannot bind " + bind_address);
    } else if (!server_->bind_to_port(bind_address, port)) {
        throw IoError("cannot bind " + bind_address + ":" + std::to_string(port));
    }
    worker_ = std::thread([this] { server_->listen_after_bind(); });
    while (!server_->is_running()) std::this_thread::yield();
    return bound;
}

void EmbeddingService::stop() {
    if (server_ && server_->is_running()) server_->stop();
    if (worker_.joinable()) worker_.join();
}

}  // namespace kge
