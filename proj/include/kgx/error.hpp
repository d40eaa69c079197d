#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace kgx {

// Malformed input data (TSV, rule strings, checkpoint files).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Data-level failures: unknown labels, facts absent from the graph, I/O.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An artifact written by an earlier pipeline stage is missing.
class MissingArtifactError : public DataError {
 public:
  MissingArtifactError(const std::string& path, const std::string& producer)
      : DataError("missing artifact '" + path + "': run `" + producer + "` first"),
        producer_(producer) {}
  const std::string& producer() const { return producer_; }

 private:
  std::string producer_;
};

// Divergence, non-finite values, or a model fit that cannot proceed.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string out = "invalid configuration:";
    for (const auto& s : p) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> problems_;
};

}  // namespace kgx
