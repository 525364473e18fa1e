#pragma once

// Run orchestration: one work unit per lambda point, files written
// atomically, manifest rewritten as points complete.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fermi/analysis.hpp"
#include "fermi/config.hpp"

namespace fermi {

/// Momentum histogram bin used for every hist file and comb analysis.
inline constexpr double kMomentumBin = 0.2;

struct SweepRow {
  double lambda = 0.0;
  double dp = 0.0;
  double dz = 0.0;
  double mean_bounces = 0.0;
  double alpha = 0.0;
  double comb_contrast = 0.0;
};

struct PointOutcome {
  double lambda = 0.0;
  std::string status = "pending";  // pending | completed | failed
  std::string error;
  std::vector<std::string> warnings;
  std::optional<SweepRow> row;
};

struct RunOptions {
  std::size_t threads = 0;
  /// Called once per finished lambda point (from a worker thread, serialized).
  std::function<void(const PointOutcome&)> on_point;
};

struct RunResult {
  std::filesystem::path dir;
  std::vector<PointOutcome> points;
  std::vector<std::string> files;
  bool any_failed() const;
};

/// Lambda point file names, e.g. hist_lambda=1.7000.csv.
std::string lambda_tag(double lambda);

RunResult run(const RunConfig& cfg, const RunOptions& options = {});

/// Comb and sweep diagnostics recomputed from a run directory; writes
/// analysis.json and refreshes the manifest.
struct AnalysisReport {
  std::vector<std::pair<double, CombReport>> combs;
  std::optional<SweepReport> sweep;
  std::string sweep_error;
};

AnalysisReport analyze_directory(const std::filesystem::path& dir);

/// Writes figN.svg into `dir` (fig2 reads dir/classical and dir/quantum).
std::filesystem::path plot_directory(const std::filesystem::path& dir, int kind);

}  // namespace fermi
