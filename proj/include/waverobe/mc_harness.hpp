#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "waverobe/arfima.hpp"
#include "waverobe/robust_scale.hpp"

namespace waverobe {

/// Outlier contamination of an experiment. Seeds are derived per replication.
struct PlanOutliers {
  double fraction = 0.01;
  double multiplier = 5.0;
};

struct ExperimentPlan {
  std::string name = "experiment";
  std::vector<double> d_values;
  std::size_t n = 4096;
  int reps = 500;
  int j0 = 3;
  int ell = 5;
  std::vector<EstimatorKind> kinds{kAllKinds.begin(), kAllKinds.end()};
  std::optional<PlanOutliers> outliers;
  /// 0 picks M = 2 for d <= 2 and M = 4 otherwise, per d.
  int wavelet_m = 0;
  std::uint64_t master_seed = 1;
  QnConvention qn = QnConvention::all_pairs;
  /// Also run the density study (clean and contaminated).
  bool densities = false;
  int bins = 40;

  /// Every violated constraint as "field.path: message"; empty when valid.
  std::vector<std::string> problems() const;
  /// Throws ConfigError listing problems().
  void validate() const;
  int wavelet_for(double d) const;
};

/// Seed of the ARFIMA realization of replication `rep` at d_values[d_index].
std::uint64_t replication_seed(const ExperimentPlan& plan, std::size_t d_index, int rep);
/// Seed of the outlier positions of that replication.
std::uint64_t outlier_seed(const ExperimentPlan& plan, std::size_t d_index, int rep);

/// Statistics of one (d, kind) cell.
struct CellResult {
  double d = 0.0;
  EstimatorKind kind = EstimatorKind::cl;
  double mean = 0.0;       ///< mean of d_hat
  double bias = 0.0;       ///< mean - d
  double variance = 0.0;   ///< variance of the standardized errors
  double sd = 0.0;
  double median = 0.0;     ///< median of the standardized errors
  /// sqrt(n 2^{-j0}) (d_hat - d), replication order, failures removed.
  std::vector<double> samples;
  int failures = 0;
};

struct AreEntry {
  double d = 0.0;
  EstimatorKind kind = EstimatorKind::cr;
  double are = 0.0;  ///< var_CL / var_kind
};

struct ExperimentResult {
  ExperimentPlan plan;
  bool contaminated = false;
  std::vector<CellResult> cells;  ///< d-major, kinds in plan order
  std::vector<AreEntry> are;      ///< empty unless CL is among the kinds
  double seconds = 0.0;
  unsigned threads = 1;

  const CellResult& cell(double d, EstimatorKind kind) const;
};

/// Runs every (d, replication) with derived seeds; kinds share realizations.
/// Replications whose estimate throws are dropped and counted per cell; more
/// than 1% failures in any cell raises ExperimentError. Results do not depend
/// on the thread count.
ExperimentResult run_plan(const ExperimentPlan& plan, unsigned threads = 0);

/// Fraction of failed replications above which run_plan gives up.
inline constexpr double kMaxFailureRate = 0.01;

struct Density {
  double d = 0.0;
  EstimatorKind kind = EstimatorKind::cl;
  bool contaminated = false;
  std::vector<double> edges;   ///< bins + 1 histogram edges
  std::vector<double> counts;  ///< normalized to unit area
  std::vector<double> grid;    ///< kernel density abscissae
  std::vector<double> kde;     ///< Gaussian kernel, Silverman bandwidth
  double median = 0.0;
  double sd = 0.0;
};

struct DensityBundle {
  ExperimentResult clean;
  std::optional<ExperimentResult> contaminated;
  /// One entry per (d, kind, condition); edges shared within each d.
  std::vector<Density> densities;
};

/// Clean run and, when the plan has outliers, a contaminated run on the same
/// realizations. Needs reps >= 500.
DensityBundle density_experiment(const ExperimentPlan& plan, unsigned threads = 0);

inline constexpr int kMinDensityReps = 500;

/// Plan from a parsed JSON object. Unknown keys and type errors are reported
/// with their field paths as ConfigError.
ExperimentPlan plan_from_json(const nlohmann::json& doc);
/// Reads a .json or .toml plan file.
ExperimentPlan load_plan(const std::filesystem::path& path);

nlohmann::json to_json(const ExperimentPlan& plan);
nlohmann::json to_json(const ExperimentResult& result, bool with_samples = false);
nlohmann::json to_json(const Density& density);

}  // namespace waverobe
