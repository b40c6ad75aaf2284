#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace slipflow::cli {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kConfig = 2;
inline constexpr int kGeometry = 3;
inline constexpr int kSolver = 4;
inline constexpr int kVerdict = 5;
inline constexpr int kInstability = 6;
inline constexpr int kHypothesis = 7;
inline constexpr int kBound = 8;
}  // namespace exit_code

struct GlobalOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  bool plot = false;
};

struct VerifyOptions {
  std::filesystem::path series;
  std::optional<double> k;
  std::optional<std::filesystem::path> manifest;  // K from derived.decay_rate
  std::optional<std::string> column;              // default E_dev when present, else E
  std::optional<double> ypp;
  std::string rule = "trapezoid";
};

int cmd_geometry(const GlobalOptions& global);
int cmd_spectrum(const GlobalOptions& global);
int cmd_simulate(const GlobalOptions& global);
int cmd_verify(const GlobalOptions& global, const VerifyOptions& options);

}  // namespace slipflow::cli
