#pragma once

#include <mutex>
#include <ostream>

#include <json.hpp>

namespace kge {

// Line-delimited JSON progress log. Every long-running stage (ingest chunks,
// training batches) reports here so large runs stay observable. A null sink
// disables logging.
class ProgressLogger {
   public:
    ProgressLogger() = default;
    explicit ProgressLogger(std::ostream* sink) : sink_(sink) {}

    void emit(const nlohmann::json& record) {
        if (!sink_) return;
        std::lock_guard<std::mutex> lock(mu_);
        (*sink_) << record.dump() << '\n';
        sink_->flush();
    }

    bool enabled() const { return sink_ != nullptr; }

   private:
    std::ostream* sink_ = nullptr;
    std::mutex mu_;
};

}  // namespace kge
