#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace chartforge {

// Base for every error the toolkit raises. kind() is a stable short tag used
// in machine-readable error records printed by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class TaxonomyError : public Error {
 public:
  explicit TaxonomyError(const std::string& m) : Error("taxonomy", m) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& m, std::size_t line)
      : Error("parse", m + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& m) : Error("schema", m) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& m) : Error("contract", m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error("io", m) {}
};

class TemplateError : public Error {
 public:
  TemplateError(const std::string& template_id, std::vector<std::string> missing)
      : Error("template", describe(template_id, missing)), missing_(std::move(missing)) {}
  explicit TemplateError(const std::string& m) : Error("template", m) {}
  const std::vector<std::string>& missing() const noexcept { return missing_; }

 private:
  static std::string describe(const std::string& id, const std::vector<std::string>& names) {
    std::string out = "template '" + id + "' missing bindings:";
    for (const auto& n : names) out += " " + n;
    return out;
  }
  std::vector<std::string> missing_;
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& m, bool timeout = false)
      : Error(timeout ? "timeout" : "transport", m), timeout_(timeout) {}
  bool is_timeout() const noexcept { return timeout_; }

 private:
  bool timeout_;
};

class CacheMissError : public Error {
 public:
  explicit CacheMissError(const std::string& request_hash)
      : Error("cache_miss", "replay cache miss for request " + request_hash), hash_(request_hash) {}
  const std::string& request_hash() const noexcept { return hash_; }

 private:
  std::string hash_;
};

// The sandbox runner shim is missing or unusable. Distinct from a script failing.
class EnvironmentError : public Error {
 public:
  explicit EnvironmentError(const std::string& m) : Error("environment", m) {}
};

class CheckpointError : public Error {
 public:
  explicit CheckpointError(const std::string& m) : Error("checkpoint", m) {}
};

}  // namespace chartforge
