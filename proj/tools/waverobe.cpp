// waverobe: memory-parameter estimation from wavelet scale spectra.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "waverobe/arfima.hpp"
#include "waverobe/asympvar.hpp"
#include "waverobe/errors.hpp"
#include "waverobe/estimator.hpp"
#include "waverobe/mc_harness.hpp"
#include "waverobe/parallel.hpp"
#include "waverobe/rng.hpp"
#include "waverobe/series_io.hpp"
#include "waverobe/svg.hpp"
#include "waverobe/wavelet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace waverobe;

namespace {

constexpr const char* kSchemaVersion = "1.0.0";

enum class CiEngine { mc, analytic, none };

struct Common {
  int threads = 0;
  std::string out;
};

struct EstimateArgs {
  std::string file;
  std::string estimator = "all";
  int j0 = 3;
  int ell = 5;
  int wavelet_m = 2;
  std::string ci = "mc";
  double level = 0.95;
  std::uint64_t seed = 1;
  int reps = 500;
  double beta = 1.0;
  std::size_t aggregate = 0;
  bool qn_standard = false;
  std::string plot;
  int coarse = 0;
};

struct SimulateArgs {
  double d = 0.0;
  std::size_t n = 4096;
  std::uint64_t seed = 1;
  double outliers_frac = 0.0;
  double outlier_mult = 5.0;
};

struct ExperimentArgs {
  std::string plan;
  std::string out_dir = ".";
  bool samples = false;
};

unsigned thread_count(int flag) {
  if (std::getenv("WAVEROBE_THREADS") != nullptr) return default_thread_count();
  return flag > 0 ? static_cast<unsigned>(flag) : default_thread_count();
}

std::vector<EstimatorKind> kinds_from(const std::string& text) {
  if (text == "all") return {kAllKinds.begin(), kAllKinds.end()};
  return {parse_kind(text)};
}

CiEngine engine_from(const std::string& text) {
  if (text == "mc") return CiEngine::mc;
  if (text == "analytic") return CiEngine::analytic;
  return CiEngine::none;
}

json digest(const TimeSeries& x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.values.begin(), x.values.end(), 0.0) / n;
  return {{"source", x.provenance}, {"length", x.size()}, {"mean", mean}, {"sd", sample_sd(x.values)}};
}

json document(const std::string& command, const std::vector<std::string>& argv) {
  return {{"schema_version", kSchemaVersion},
          {"command", {{"name", command}, {"argv", argv}}},
          {"warnings", json::array()}};
}

json estimate_json(const MemoryEstimate& e, QnConvention qn, const std::string& engine) {
  json j{{"kind", std::string(to_string(e.kind))},
         {"d_hat", e.d_hat},
         {"j0", e.j0},
         {"ell", e.ell},
         {"weights", e.weights.w},
         {"ci_engine", engine}};
  if (e.kind == EstimatorKind::cr) j["qn"] = std::string(to_string(qn));
  j["se"] = e.se ? json(*e.se) : json(nullptr);
  if (e.ci) {
    j["ci"] = {{"lo", e.ci->lo}, {"hi", e.ci->hi}, {"level", e.ci->level}};
  } else {
    j["ci"] = nullptr;
  }
  json spec{{"j0", e.spectrum.j0}, {"values", e.spectrum.values}, {"counts", e.spectrum.counts}};
  std::vector<double> log2v;
  for (double v : e.spectrum.values) log2v.push_back(v > 0.0 ? std::log2(v) : -INFINITY);
  spec["log2_values"] = json::array();
  for (double v : log2v) spec["log2_values"].push_back(std::isfinite(v) ? json(v) : json(nullptr));
  j["spectrum"] = std::move(spec);
  return j;
}

void emit(const json& doc, const std::string& out) {
  const std::string text = doc.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out);
  if (!f) throw InputError("cannot write " + out);
  f << text;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path.string());
  f << text;
}

// Standardized variance sqrt(n 2^{-j0}) (d_hat - d) under the chosen engine.
class VarianceEngine {
 public:
  VarianceEngine(CiEngine engine, std::size_t n, const WaveletSpec& spec, int reps,
                 std::uint64_t seed, unsigned threads, QnConvention qn)
      : engine_(engine), n_(n), spec_(spec), reps_(reps), seed_(seed), threads_(threads), qn_(qn) {}

  double operator()(double d, int j0, int ell, EstimatorKind kind, json& warnings) const {
    if (engine_ == CiEngine::analytic) {
      const CovMatrix v = cov_v(d, ell, kind, spec_);
      if (v.residual > 1e-6) {
        warnings.push_back("analytic covariance for " + std::string(to_string(kind)) +
                           " at d = " + format_double(d) + " has truncation residual " +
                           format_double(v.residual));
      }
      return quadratic_form(v, default_weights(ell));
    }
    if (reps_ < 50) throw InputError("--reps must be at least 50 for Monte-Carlo intervals");
    return sample_variance(
        simulate_standardized_errors(d, n_, j0, ell, {kind}, reps_, seed_, spec_, threads_, qn_)[0]);
  }

 private:
  CiEngine engine_;
  std::size_t n_;
  WaveletSpec spec_;
  int reps_;
  std::uint64_t seed_;
  unsigned threads_;
  QnConvention qn_;
};

void attach(MemoryEstimate& est, std::size_t n, const VarianceEngine& engine, double level,
            json& warnings) {
  try {
    attach_interval(est, n, engine(est.d_hat, est.j0, est.ell, est.kind, warnings), level);
  } catch (const Error& e) {
    warnings.push_back("no confidence interval for " + std::string(to_string(est.kind)) +
                       " at J0 = " + std::to_string(est.j0) + ": " + e.what());
  }
}

TimeSeries load_input(const EstimateArgs& a, json& doc) {
  TimeSeries x = read_series(a.file);
  if (a.aggregate > 1) {
    x = aggregate(x, a.aggregate);
    doc["warnings"].push_back("input aggregated over windows of " + std::to_string(a.aggregate) +
                              " samples");
  }
  doc["input"] = digest(x);
  doc["input"]["aggregate"] = a.aggregate > 1 ? a.aggregate : 1;
  return x;
}

void check_rate(std::size_t n, int j0, double beta, json& warnings) {
  if (!rate_condition_holds(n, j0, beta)) {
    warnings.push_back("rate condition n 2^{-(1+2 beta) J0} < 1 fails for n = " + std::to_string(n) +
                       ", J0 = " + std::to_string(j0) + ", beta = " + format_double(beta) +
                       " (value " +
                       format_double(static_cast<double>(n) * std::pow(2.0, -(1.0 + 2.0 * beta) * j0)) +
                       "); the short-memory bias may not be negligible");
  }
}

void check_range(const WaveletSpec& spec, const MemoryEstimate& e, double beta, json& warnings) {
  const auto status = check_memory_range(spec, e.d_hat, beta);
  if (status == MemoryRangeStatus::violated) {
    warnings.push_back(std::string(to_string(e.kind)) + " estimate " + format_double(e.d_hat) +
                       " exceeds the " + std::to_string(spec.vanishing_moments) +
                       " vanishing moments of the wavelet");
  } else if (status == MemoryRangeStatus::borderline) {
    warnings.push_back(std::string(to_string(e.kind)) + " estimate " + format_double(e.d_hat) +
                       " is near the lower admissible bound of the wavelet");
  }
}

int cmd_estimate(const EstimateArgs& a, const Common& c, const std::vector<std::string>& argv) {
  json doc = document("estimate", argv);
  const TimeSeries x = load_input(a, doc);
  const WaveletSpec spec = daubechies_spec(a.wavelet_m);
  const QnConvention qn = a.qn_standard ? QnConvention::standard : QnConvention::all_pairs;
  const ScalePyramid pyr = decompose(x.values, spec, a.j0 + a.ell);
  const VarianceEngine engine(engine_from(a.ci), x.size(), spec, a.reps, a.seed, thread_count(c.threads), qn);
  check_rate(x.size(), a.j0, a.beta, doc["warnings"]);

  doc["estimates"] = json::array();
  std::vector<ScalePoint> points;
  for (EstimatorKind kind : kinds_from(a.estimator)) {
    MemoryEstimate est = estimate_d(pyr, a.j0, a.ell, kind, qn);
    check_range(spec, est, a.beta, doc["warnings"]);
    if (engine_from(a.ci) != CiEngine::none) attach(est, x.size(), engine, a.level, doc["warnings"]);
    doc["estimates"].push_back(estimate_json(est, qn, a.ci));
    for (std::size_t i = 0; i < est.spectrum.values.size(); ++i) {
      if (est.spectrum.values[i] > 0.0) {
        points.push_back({kind, est.spectrum.j0 + static_cast<int>(i), std::log2(est.spectrum.values[i])});
      }
    }
  }
  doc["wavelet_m"] = a.wavelet_m;
  if (!a.plot.empty()) {
    std::ofstream csv(a.plot + ".csv", std::ios::binary);
    if (!csv) throw InputError("cannot write " + a.plot + ".csv");
    CsvWriter w(csv);
    w.row({"kind", "j", "log2_value"});
    for (const auto& p : points) {
      w.field(std::string(to_string(p.kind))).field(p.j).field(p.log2_value);
      w.end_row();
    }
    write_text(a.plot + ".svg", scale_diagram_svg(points, "scale diagram: " + x.provenance));
    doc["plots"] = {a.plot + ".svg", a.plot + ".csv"};
  }
  emit(doc, c.out);
  return 0;
}

int cmd_scan(const EstimateArgs& a, const Common& c, const std::vector<std::string>& argv) {
  json doc = document("scan", argv);
  const TimeSeries x = load_input(a, doc);
  const WaveletSpec spec = daubechies_spec(a.wavelet_m);
  const QnConvention qn = a.qn_standard ? QnConvention::standard : QnConvention::all_pairs;
  const ScalePyramid pyr = decompose(x.values, spec, a.coarse);
  const CiEngine kind_engine = engine_from(a.ci);
  const VarianceEngine engine(kind_engine, x.size(), spec, a.reps, a.seed, thread_count(c.threads), qn);

  doc["coarse"] = a.coarse;
  doc["wavelet_m"] = a.wavelet_m;
  doc["scan"] = json::array();
  std::vector<LadderRung> rungs;
  for (EstimatorKind kind : kinds_from(a.estimator)) {
    ScanResult scan = j0_scan(pyr, a.coarse, kind, a.level, {}, qn);
    json entry{{"kind", std::string(to_string(kind))}, {"estimates", json::array()}};
    for (auto& est : scan.estimates) {
      if (kind_engine != CiEngine::none) attach(est, x.size(), engine, a.level, doc["warnings"]);
      entry["estimates"].push_back(estimate_json(est, qn, a.ci));
      if (est.ci) rungs.push_back({kind, est.j0, est.d_hat, est.ci->lo, est.ci->hi});
    }
    const auto rec = recommend_j0(scan.estimates);
    entry["recommended_j0"] = rec ? json(*rec) : json(nullptr);
    doc["scan"].push_back(std::move(entry));
  }
  if (!a.plot.empty()) {
    std::ofstream csv(a.plot + ".csv", std::ios::binary);
    if (!csv) throw InputError("cannot write " + a.plot + ".csv");
    CsvWriter w(csv);
    w.row({"kind", "j0", "d_hat", "lo", "hi"});
    for (const auto& r : rungs) {
      w.field(std::string(to_string(r.kind))).field(r.j0).field(r.d_hat).field(r.lo).field(r.hi);
      w.end_row();
    }
    write_text(a.plot + ".svg", ci_ladder_svg(rungs, "J0 scan, coarse scale " + std::to_string(a.coarse)));
    doc["plots"] = {a.plot + ".svg", a.plot + ".csv"};
  }
  emit(doc, c.out);
  return 0;
}

int cmd_simulate(const SimulateArgs& a, const Common& c, const std::vector<std::string>& argv) {
  if (c.out.empty()) throw InputError("simulate needs --out");
  TimeSeries x = generate({a.d, a.n, a.seed, 1.0});
  json doc = document("simulate", argv);
  doc["simulation"] = {{"d", a.d}, {"n", a.n}, {"seed", a.seed}, {"file", c.out}};
  if (a.outliers_frac > 0.0) {
    const OutlierSpec os{a.outliers_frac, a.outlier_mult, derive_seed(a.seed, 0x6f75746c)};
    ContaminatedSeries cs = inject_outliers(x, os);
    x = std::move(cs.series);
    const std::string sidecar = c.out + ".outliers";
    write_indices(sidecar, cs.indices);
    doc["simulation"]["outliers"] = {{"fraction", a.outliers_frac},
                                     {"multiplier", a.outlier_mult},
                                     {"count", cs.indices.size()},
                                     {"file", sidecar}};
  }
  write_series(c.out, x);
  doc["input"] = digest(x);
  emit(doc, "");
  return 0;
}

int cmd_experiment(const ExperimentArgs& a, const Common& c, const std::vector<std::string>& argv) {
  const ExperimentPlan plan = load_plan(a.plan);
  const unsigned threads = thread_count(c.threads);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  json doc = document("experiment", argv);

  std::optional<DensityBundle> bundle;
  ExperimentResult result;
  if (plan.densities) {
    bundle = density_experiment(plan, threads);
    result = bundle->clean;
  } else {
    result = run_plan(plan, threads);
  }
  doc["experiment"] = to_json(result, a.samples);
  if (bundle && bundle->contaminated) {
    doc["contaminated_experiment"] = to_json(*bundle->contaminated, a.samples);
  }
  for (const auto& cell : result.cells) {
    if (cell.failures > 0) {
      doc["warnings"].push_back(std::to_string(cell.failures) + " failed replications dropped for " +
                                std::string(to_string(cell.kind)) + " at d = " + format_double(cell.d));
    }
  }

  std::vector<std::string> files;
  {
    std::ofstream f(dir / "are.csv", std::ios::binary);
    CsvWriter w(f);
    w.row({"d", "kind", "are"});
    for (const auto& e : result.are) {
      w.field(e.d).field(std::string(to_string(e.kind))).field(e.are);
      w.end_row();
    }
    files.push_back((dir / "are.csv").string());
  }
  auto write_cells = [&](const ExperimentResult& r, const std::string& name) {
    std::ofstream f(dir / name, std::ios::binary);
    CsvWriter w(f);
    w.row({"d", "kind", "contaminated", "mean", "bias", "variance", "sd", "median", "count", "failures"});
    for (const auto& cell : r.cells) {
      w.field(cell.d).field(std::string(to_string(cell.kind))).field(r.contaminated ? 1 : 0);
      w.field(cell.mean).field(cell.bias).field(cell.variance).field(cell.sd).field(cell.median);
      w.field(cell.samples.size()).field(cell.failures);
      w.end_row();
    }
    files.push_back((dir / name).string());
    if (!a.samples) return;
    for (const auto& cell : r.cells) {
      const std::string sname = "samples_" + std::string(r.contaminated ? "outliers_" : "") + "d" +
                                format_double(cell.d) + "_" + std::string(to_string(cell.kind)) + ".csv";
      std::ofstream s(dir / sname, std::ios::binary);
      CsvWriter sw(s);
      sw.row({"standardized_error"});
      for (double v : cell.samples) {
        sw.field(v);
        sw.end_row();
      }
      files.push_back((dir / sname).string());
    }
  };
  write_cells(result, "cells.csv");
  if (bundle && bundle->contaminated) write_cells(*bundle->contaminated, "cells_outliers.csv");

  if (bundle) {
    std::map<double, std::vector<Density>> by_d;
    for (const auto& dens : bundle->densities) by_d[dens.d].push_back(dens);
    for (const auto& [d, list] : by_d) {
      const std::string stem = "density_d" + format_double(d);
      std::ofstream f(dir / (stem + ".csv"), std::ios::binary);
      CsvWriter w(f);
      w.row({"kind", "contaminated", "x", "kde"});
      for (const auto& dens : list) {
        for (std::size_t g = 0; g < dens.grid.size(); ++g) {
          w.field(std::string(to_string(dens.kind))).field(dens.contaminated ? 1 : 0);
          w.field(dens.grid[g]).field(dens.kde[g]);
          w.end_row();
        }
      }
      std::ofstream h(dir / (stem + "_hist.csv"), std::ios::binary);
      CsvWriter hw(h);
      hw.row({"kind", "contaminated", "lo", "hi", "density"});
      for (const auto& dens : list) {
        for (std::size_t b = 0; b < dens.counts.size(); ++b) {
          hw.field(std::string(to_string(dens.kind))).field(dens.contaminated ? 1 : 0);
          hw.field(dens.edges[b]).field(dens.edges[b + 1]).field(dens.counts[b]);
          hw.end_row();
        }
      }
      write_text(dir / (stem + ".svg"),
                 density_svg(list, "standardized errors, d = " + format_double(d)));
      files.push_back((dir / (stem + ".csv")).string());
      files.push_back((dir / (stem + "_hist.csv")).string());
      files.push_back((dir / (stem + ".svg")).string());
    }
  }
  doc["files"] = files;
  const std::string out = c.out.empty() ? (dir / "result.json").string() : c.out;
  emit(doc, out);
  std::cout << out << "\n";
  return 0;
}

void add_estimate_options(CLI::App* cmd, EstimateArgs& a, Common& c) {
  cmd->add_option("file", a.file, "Input series: one value per line or a one-column CSV")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--estimator", a.estimator, "cl, mad, cr or all")
      ->check(CLI::IsMember({"cl", "mad", "cr", "all"}, CLI::ignore_case));
  cmd->add_option("--wavelet-m", a.wavelet_m, "Daubechies vanishing moments")->check(CLI::Range(1, 10));
  cmd->add_option("--ci", a.ci, "Interval engine")->check(CLI::IsMember({"mc", "analytic", "none"}));
  cmd->add_option("--level", a.level, "Confidence level")->check(CLI::Range(0.5, 0.9999));
  cmd->add_option("--seed", a.seed, "Seed of the Monte-Carlo interval engine");
  cmd->add_option("--reps", a.reps, "Monte-Carlo replications")->check(CLI::PositiveNumber);
  cmd->add_option("--beta", a.beta, "Smoothness of the short-memory part for the rate diagnostic");
  cmd->add_option("--aggregate", a.aggregate, "Sum over non-overlapping windows of this length first");
  cmd->add_flag("--qn-standard", a.qn_standard, "Use the usual Qn (pairs i < k) for cr");
  cmd->add_option("--plot", a.plot, "Write PREFIX.svg and PREFIX.csv");
  cmd->add_option("--out", c.out, "Write the JSON document here instead of stdout");
  cmd->add_option("--threads", c.threads, "Worker threads (WAVEROBE_THREADS overrides)");
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ExperimentError*>(&e)) return 4;
  if (dynamic_cast<const NumericError*>(&e)) return 3;
  if (dynamic_cast<const InputError*>(&e)) return 2;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wavelet estimation of the memory parameter with robust scale estimators"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kSchemaVersion);
  Common common;

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Estimate d from a series");
  add_estimate_options(estimate, est, common);
  estimate->add_option("--j0", est.j0, "Finest scale of the regression")->check(CLI::PositiveNumber);
  estimate->add_option("--ell", est.ell, "Number of scales minus one")->check(CLI::PositiveNumber);

  EstimateArgs scn;
  auto* scan = app.add_subcommand("scan", "Estimates and intervals for J0 = 1 .. coarse - 1");
  add_estimate_options(scan, scn, common);
  scan->add_option("--coarse", scn.coarse, "Coarsest scale J0 + ell")->required()->check(CLI::Range(2, 60));

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate ARFIMA(0, d, 0), optionally with outliers");
  simulate->add_option("--d", sim.d, "Memory parameter")->required();
  simulate->add_option("--n", sim.n, "Length")->check(CLI::Range(2, 1 << 26));
  simulate->add_option("--seed", sim.seed, "Seed");
  simulate->add_option("--outliers-frac", sim.outliers_frac, "Fraction of additive outliers")
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--outlier-mult", sim.outlier_mult, "Outlier size in sample standard deviations");
  simulate->add_option("--out", common.out, "Output series file")->required();

  ExperimentArgs exp;
  auto* experiment = app.add_subcommand("experiment", "Run a Monte-Carlo plan (.json or .toml)");
  experiment->add_option("plan", exp.plan, "Plan file")->required()->check(CLI::ExistingFile);
  experiment->add_option("--out-dir", exp.out_dir, "Directory for CSV, SVG and JSON outputs");
  experiment->add_flag("--samples", exp.samples, "Also write the standardized errors per cell");
  experiment->add_option("--out", common.out, "JSON document path (default OUT_DIR/result.json)");
  experiment->add_option("--threads", common.threads, "Worker threads (WAVEROBE_THREADS overrides)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::vector<std::string> args(argv, argv + argc);
  try {
    if (*estimate) return cmd_estimate(est, common, args);
    if (*scan) return cmd_scan(scn, common, args);
    if (*simulate) return cmd_simulate(sim, common, args);
    if (*experiment) return cmd_experiment(exp, common, args);
  } catch (const std::exception& e) {
    std::cerr << "waverobe: error: " << e.what() << "\n";
    return exit_code(e);
  }
  return 0;
}
