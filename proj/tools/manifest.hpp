#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace slipflow::cli {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Run manifest: config echo, derived constants, verdicts and the checksummed
/// inventory of every file the run wrote.
class Manifest {
 public:
  Manifest(std::filesystem::path directory, std::string command);

  nlohmann::json& config() { return doc_["config"]; }
  nlohmann::json& derived() { return doc_["derived"]; }
  nlohmann::json& verdicts() { return doc_["verdicts"]; }

  /// Registers an output file relative to the run directory.
  void add_file(const std::string& name);
  void set_error(const std::string& kind, const std::string& message);
  void set_exit_code(int code);

  /// Checksums every registered file and replaces manifest.json atomically.
  void write();

  static constexpr const char* kFileName = "manifest.json";

 private:
  std::filesystem::path directory_;
  nlohmann::json doc_;
  std::vector<std::string> files_;
};

/// Writes `content` to directory/name through a temporary file and rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace slipflow::cli
