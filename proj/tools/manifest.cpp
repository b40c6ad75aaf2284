#include "manifest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <system_error>

#include "slipflow/version.hpp"

namespace slipflow::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    const auto got = in.gcount();
    if (got > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got)) != 1) {
      throw std::runtime_error("sha256 update failed");
    }
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) throw std::runtime_error("sha256 final failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xf];
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Manifest::Manifest(std::filesystem::path directory, std::string command) : directory_(std::move(directory)) {
  doc_["artifact"] = "slipflow";
  doc_["version"] = kVersion;
  doc_["command"] = std::move(command);
  doc_["config"] = nlohmann::json::object();
  doc_["derived"] = nlohmann::json::object();
  doc_["verdicts"] = nlohmann::json::object();
  doc_["status"] = "ok";
  doc_["exit_code"] = 0;
}

void Manifest::add_file(const std::string& name) {
  if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
}

void Manifest::set_error(const std::string& kind, const std::string& message) {
  doc_["status"] = "error";
  doc_["error"] = {{"kind", kind}, {"message", message}};
}

void Manifest::set_exit_code(int code) { doc_["exit_code"] = code; }

void Manifest::write() {
  std::filesystem::create_directories(directory_);
  auto files = nlohmann::json::array();
  for (const auto& name : files_) {
    const auto p = directory_ / name;
    std::error_code ec;
    const auto size = std::filesystem::file_size(p, ec);
    if (ec) continue;
    files.push_back({{"path", name}, {"bytes", size}, {"sha256", sha256_file(p)}});
  }
  doc_["files"] = std::move(files);
  write_atomic(directory_ / kFileName, doc_.dump(2) + "\n");
}

}  // namespace slipflow::cli
