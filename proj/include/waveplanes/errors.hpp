#pragma once

#include <stdexcept>
#include <string>

namespace wvpl {

/// Grid or filter shape does not satisfy an operation's preconditions.
struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Decomposition level out of range for the given grid size.
struct LevelError : std::runtime_error {
  explicit LevelError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Training produced a non-finite loss.
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Serialized model failed validation (magic, version, bounds, truncation).
struct CorruptModelError : std::runtime_error {
  explicit CorruptModelError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Compression backend or stream failure.
struct CodecError : std::runtime_error {
  explicit CodecError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Dataset directory, JSON, or image failed to load.
struct DatasetError : std::runtime_error {
  explicit DatasetError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Metric inputs are incompatible (for example shape mismatch).
struct MetricError : std::runtime_error {
  explicit MetricError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Run configuration is invalid or contains unknown keys.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace wvpl
