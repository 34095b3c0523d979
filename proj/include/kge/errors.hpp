#pragma once

#include <stdexcept>
#include <string>

namespace kge {

// Exit-code classes used by the CLI: data/parse errors (2), configuration
// errors (3), I/O and file-format errors (4).
enum class ErrorClass { Data = 2, Config = 3, Io = 4 };

class KgeError : public std::runtime_error {
   public:
    KgeError(ErrorClass cls, const std::string& msg)
        : std::runtime_error(msg), cls_(cls) {}
    ErrorClass error_class() const { return cls_; }

   private:
    ErrorClass cls_;
};

struct UnknownSymbol : KgeError {
    explicit UnknownSymbol(const std::string& sym)
        : KgeError(ErrorClass::Data, "unknown symbol: " + sym), symbol(sym) {}
    std::string symbol;
};

struct DimensionError : KgeError {
    explicit DimensionError(const std::string& msg)
        : KgeError(ErrorClass::Config, msg) {}
};

struct IndexOutOfRange : KgeError {
    explicit IndexOutOfRange(const std::string& msg)
        : KgeError(ErrorClass::Config, msg) {}
};

struct InvalidShardCount : KgeError {
    explicit InvalidShardCount(const std::string& msg)
        : KgeError(ErrorClass::Config, msg) {}
};

struct NonFiniteGradient : KgeError {
    explicit NonFiniteGradient(const std::string& msg)
        : KgeError(ErrorClass::Data, msg) {}
};

struct ConfigError : KgeError {
    explicit ConfigError(const std::string& msg)
        : KgeError(ErrorClass::Config, msg) {}
};

struct InsufficientMemory : KgeError {
    explicit InsufficientMemory(const std::string& msg)
        : KgeError(ErrorClass::Config, msg) {}
};

struct IoError : KgeError {
    explicit IoError(const std::string& msg) : KgeError(ErrorClass::Io, msg) {}
};

struct TruncatedFile : IoError {
    explicit TruncatedFile(const std::string& msg) : IoError(msg) {}
};

struct ChecksumMismatch : IoError {
    explicit ChecksumMismatch(const std::string& msg) : IoError(msg) {}
};

struct VersionUnsupported : IoError {
    explicit VersionUnsupported(const std::string& msg) : IoError(msg) {}
};

}  // namespace kge
