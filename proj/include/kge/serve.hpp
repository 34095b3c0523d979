#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <thread>

#include "kge/checkpoint.hpp"
#include "kge/models.hpp"

namespace httplib {
class Server;
}

namespace kge {

// Read-only JSON-over-HTTP service for a loaded checkpoint: POST /score,
// POST /topk, GET /health. The checkpoint is immutable while serving, so
// requests run lock-free and identical requests return identical bytes.
class EmbeddingService {
   public:
    explicit EmbeddingService(Checkpoint ckpt);
    ~EmbeddingService();

    EmbeddingService(const EmbeddingService&) = delete;
    EmbeddingService& operator=(const EmbeddingService&) = delete;

    // Blocking; serves until the process exits or stop() is called.
    void run(const std::string& bind_address, int port);

    // Starts serving on a background thread. port 0 picks an ephemeral port.
    // Returns the bound port once the server accepts connections.
    int start_async(const std::string& bind_address, int port = 0);
    void stop();

    const Checkpoint& checkpoint() const { return ckpt_; }

    // Handler cores, exposed for direct testing: (status, body).
    std::pair<int, nlohmann::json> handle_score(const nlohmann::json& request) const;
    std::pair<int, nlohmann::json> handle_topk(const nlohmann::json& request) const;
    nlohmann::json handle_health() const;

   private:
    void setup_routes();

    Checkpoint ckpt_;
    std::unique_ptr<ScoringModel> model_;
    std::chrono::system_clock::time_point started_at_;
    std::unique_ptr<httplib::Server> server_;
    std::thread worker_;
};

}  // namespace kge
