#include "waverobe/mc_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "waverobe/errors.hpp"
#include "waverobe/estimator.hpp"
#include "waverobe/parallel.hpp"
#include "waverobe/rng.hpp"
#include "waverobe/wavelet.hpp"

namespace waverobe {
namespace {

constexpr std::uint64_t kOutlierStream = 0x6f75746c69657273ULL;

double mean_of(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance_of(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Per (d, kind) standardized errors with NaN marking a failed replication.
struct RawCells {
  std::vector<std::vector<double>> clean;
  std::vector<std::vector<double>> dirty;
};

CellResult summarize(double d, EstimatorKind kind, const std::vector<double>& raw,
                     std::size_t n, int j0) {
  CellResult c;
  c.d = d;
  c.kind = kind;
  for (double v : raw) {
    if (std::isnan(v)) {
      ++c.failures;
    } else {
      c.samples.push_back(v);
    }
  }
  if (c.samples.empty()) return c;
  const double root = std::sqrt(std::ldexp(static_cast<double>(n), -j0));
  const double m = mean_of(c.samples);
  c.bias = m / root;
  c.mean = d + c.bias;
  c.variance = variance_of(c.samples);
  c.sd = std::sqrt(c.variance);
  std::vector<double> sorted = c.samples;
  std::sort(sorted.begin(), sorted.end());
  c.median = quantile_sorted(sorted, 0.5);
  return c;
}

ExperimentResult assemble(const ExperimentPlan& plan, const std::vector<std::vector<double>>& raw,
                          bool contaminated) {
  ExperimentResult out;
  out.plan = plan;
  out.contaminated = contaminated;
  const std::size_t nk = plan.kinds.size();
  for (std::size_t di = 0; di < plan.d_values.size(); ++di) {
    for (std::size_t k = 0; k < nk; ++k) {
      CellResult c = summarize(plan.d_values[di], plan.kinds[k], raw[di * nk + k], plan.n, plan.j0);
      if (static_cast<double>(c.failures) > kMaxFailureRate * plan.reps) {
        std::ostringstream msg;
        msg << c.failures << " of " << plan.reps << " replications failed for "
            << to_string(c.kind) << " at d = " << c.d << " (limit 1%)";
        throw ExperimentError(msg.str());
      }
      out.cells.push_back(std::move(c));
    }
  }
  const auto cl = std::find(plan.kinds.begin(), plan.kinds.end(), EstimatorKind::cl);
  if (cl != plan.kinds.end() && plan.reps >= 2) {
    const auto icl = static_cast<std::size_t>(cl - plan.kinds.begin());
    for (std::size_t di = 0; di < plan.d_values.size(); ++di) {
      const double vcl = out.cells[di * nk + icl].variance;
      for (std::size_t k = 0; k < nk; ++k) {
        if (k == icl) continue;
        const double v = out.cells[di * nk + k].variance;
        out.are.push_back({plan.d_values[di], plan.kinds[k], v > 0.0 ? vcl / v : 0.0});
      }
    }
  }
  return out;
}

// One realization per replication; clean and contaminated estimates share it.
RawCells simulate(const ExperimentPlan& plan, unsigned threads, bool want_clean, bool want_dirty) {
  const std::size_t nk = plan.kinds.size();
  const std::size_t nd = plan.d_values.size();
  const auto reps = static_cast<std::size_t>(plan.reps);
  RawCells raw;
  if (want_clean) raw.clean.assign(nd * nk, std::vector<double>(reps));
  if (want_dirty) raw.dirty.assign(nd * nk, std::vector<double>(reps));
  const double root = std::sqrt(std::ldexp(static_cast<double>(plan.n), -plan.j0));
  const int coarse = plan.j0 + plan.ell;

  for (std::size_t di = 0; di < nd; ++di) {
    const double d = plan.d_values[di];
    const ArfimaSampler sampler(d, plan.n);
    const WaveletSpec spec = daubechies_spec(plan.wavelet_for(d));
    auto fill = [&](std::vector<std::vector<double>>& cells, std::size_t r,
                    const std::vector<double>& x) {
      ScalePyramid pyr;
      bool ok = true;
      try {
        pyr = decompose(x, spec, coarse);
      } catch (const Error&) {
        ok = false;
      }
      for (std::size_t k = 0; k < nk; ++k) {
        double v = std::numeric_limits<double>::quiet_NaN();
        if (ok) {
          try {
            v = root * (estimate_d(pyr, plan.j0, plan.ell, plan.kinds[k], plan.qn).d_hat - d);
          } catch (const Error&) {
          }
        }
        cells[di * nk + k][r] = v;
      }
    };
    parallel_for(reps, threads, [&](std::size_t r) {
      const int rep = static_cast<int>(r);
      TimeSeries x = sampler.sample(replication_seed(plan, di, rep));
      if (want_clean) fill(raw.clean, r, x.values);
      if (want_dirty) {
        const OutlierSpec os{plan.outliers->fraction, plan.outliers->multiplier,
                             outlier_seed(plan, di, rep)};
        fill(raw.dirty, r, inject_outliers(x, os).series.values);
      }
    });
  }
  return raw;
}

std::vector<double> gaussian_kde(const std::vector<double>& x, const std::vector<double>& grid) {
  std::vector<double> out(grid.size(), 0.0);
  if (x.size() < 2) return out;
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const double sd = std::sqrt(variance_of(x));
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd > 0.0 ? sd : 1.0;
  const double h = 0.9 * spread * std::pow(static_cast<double>(x.size()), -0.2);
  const double norm = 1.0 / (static_cast<double>(x.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double s = 0.0;
    for (double v : x) {
      const double z = (grid[g] - v) / h;
      s += std::exp(-0.5 * z * z);
    }
    out[g] = s * norm;
  }
  return out;
}

Density make_density(const CellResult& c, bool contaminated, double lo, double hi, int bins) {
  Density out;
  out.d = c.d;
  out.kind = c.kind;
  out.contaminated = contaminated;
  out.median = c.median;
  out.sd = c.sd;
  const double width = (hi - lo) / bins;
  out.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) out.edges[static_cast<std::size_t>(b)] = lo + b * width;
  out.counts.assign(static_cast<std::size_t>(bins), 0.0);
  for (double v : c.samples) {
    auto b = static_cast<int>(std::floor((v - lo) / width));
    b = std::clamp(b, 0, bins - 1);
    out.counts[static_cast<std::size_t>(b)] += 1.0;
  }
  const double scale = c.samples.empty() ? 0.0 : 1.0 / (static_cast<double>(c.samples.size()) * width);
  for (double& v : out.counts) v *= scale;
  constexpr int kGrid = 200;
  out.grid.resize(kGrid);
  for (int g = 0; g < kGrid; ++g) out.grid[static_cast<std::size_t>(g)] = lo + (hi - lo) * g / (kGrid - 1);
  out.kde = gaussian_kde(c.samples, out.grid);
  return out;
}

// JSON field access with paths in the error messages.
class Fields {
 public:
  explicit Fields(const nlohmann::json& obj) : obj_(obj) {
    if (!obj.is_object()) throw ConfigError("plan: expected an object");
  }

  const nlohmann::json* get(const std::string& key) {
    seen_.push_back(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void reject_unknown(const std::string& prefix) const {
    for (const auto& [key, value] : obj_.items()) {
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
        throw ConfigError(prefix + key + ": unknown field");
      }
    }
  }

 private:
  const nlohmann::json& obj_;
  std::vector<std::string> seen_;
};

double as_number(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  return v.get<double>();
}

long long as_integer(const nlohmann::json& v, const std::string& path) {
  if (v.is_number_integer() || v.is_number_unsigned()) return v.get<long long>();
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (x == std::floor(x) && std::abs(x) < 9e15) return static_cast<long long>(x);
  }
  throw ConfigError(path + ": expected an integer");
}

}  // namespace

int ExperimentPlan::wavelet_for(double d) const {
  return wavelet_m > 0 ? wavelet_m : default_vanishing_moments(d);
}

std::vector<std::string> ExperimentPlan::problems() const {
  std::vector<std::string> out;
  if (d_values.empty()) out.push_back("d_values: must list at least one memory parameter");
  if (n < 16) out.push_back("n: must be at least 16");
  if (reps < 1) out.push_back("reps: must be at least 1");
  if (j0 < 1) out.push_back("j0: must be at least 1");
  if (ell < 1) out.push_back("ell: must be at least 1");
  if (kinds.empty()) out.push_back("kinds: must list at least one estimator");
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (kinds[i] == kinds[k]) out.push_back("kinds[" + std::to_string(i) + "]: duplicate");
    }
  }
  if (wavelet_m < 0 || wavelet_m > kMaxVanishingMoments) {
    out.push_back("wavelet_m: must be 0 (automatic) or between 1 and 10");
  }
  if (outliers) {
    if (!(outliers->fraction >= 0.0 && outliers->fraction <= 1.0)) {
      out.push_back("outliers.fraction: must lie in [0, 1]");
    }
    if (!std::isfinite(outliers->multiplier)) out.push_back("outliers.multiplier: must be finite");
  }
  if (bins < 2) out.push_back("bins: must be at least 2");
  if (densities && reps < kMinDensityReps) {
    out.push_back("reps: the density study needs at least " + std::to_string(kMinDensityReps));
  }
  for (std::size_t i = 0; i < d_values.size(); ++i) {
    const double d = d_values[i];
    const std::string path = "d_values[" + std::to_string(i) + "]";
    if (!std::isfinite(d)) {
      out.push_back(path + ": must be finite");
      continue;
    }
    const double d0 = split_memory(d).stationary_d;
    if (std::abs(d0) >= 0.5 - kStationaryMargin) {
      out.push_back(path + ": d = " + std::to_string(d) +
                    " has a half-integer stationary part the simulator cannot embed");
    }
    const int m = wavelet_for(d);
    if (m >= 1 && m <= kMaxVanishingMoments && d > m) {
      out.push_back(path + ": d = " + std::to_string(d) + " exceeds the " + std::to_string(m) +
                    " vanishing moments of the wavelet (wavelet_m)");
    }
  }
  if (n >= 16 && j0 >= 1 && ell >= 1 && wavelet_m >= 0 && wavelet_m <= kMaxVanishingMoments) {
    for (std::size_t i = 0; i < d_values.size(); ++i) {
      if (!std::isfinite(d_values[i])) continue;
      const int m = wavelet_for(d_values[i]);
      const std::size_t need = std::find(kinds.begin(), kinds.end(), EstimatorKind::cr) != kinds.end()
                                   ? kMinCrLength
                                   : 1;
      if (num_coeffs(n, j0 + ell, 2 * m - 1) < need) {
        out.push_back("ell: scale j0 + ell = " + std::to_string(j0 + ell) + " has fewer than " +
                      std::to_string(need) + " coefficients at n = " + std::to_string(n) +
                      " with M = " + std::to_string(m));
        break;
      }
    }
  }
  return out;
}

void ExperimentPlan::validate() const {
  const auto p = problems();
  if (p.empty()) return;
  std::string msg = "invalid experiment plan";
  for (const auto& s : p) msg += "\n  " + s;
  throw ConfigError(msg);
}

std::uint64_t replication_seed(const ExperimentPlan& plan, std::size_t d_index, int rep) {
  return derive_seed(derive_seed(plan.master_seed, d_index), static_cast<std::uint64_t>(rep));
}

std::uint64_t outlier_seed(const ExperimentPlan& plan, std::size_t d_index, int rep) {
  return derive_seed(replication_seed(plan, d_index, rep), kOutlierStream);
}

const CellResult& ExperimentResult::cell(double d, EstimatorKind kind) const {
  for (const auto& c : cells) {
    if (c.d == d && c.kind == kind) return c;
  }
  throw InputError("no cell for d = " + std::to_string(d) + ", " + std::string(to_string(kind)));
}

ExperimentResult run_plan(const ExperimentPlan& plan, unsigned threads) {
  plan.validate();
  if (threads == 0) threads = default_thread_count();
  const auto start = std::chrono::steady_clock::now();
  const bool dirty = plan.outliers.has_value();
  RawCells raw = simulate(plan, threads, !dirty, dirty);
  ExperimentResult out = assemble(plan, dirty ? raw.dirty : raw.clean, dirty);
  out.threads = threads;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

DensityBundle density_experiment(const ExperimentPlan& plan, unsigned threads) {
  plan.validate();
  if (plan.reps < kMinDensityReps) {
    throw ConfigError("reps: the density study needs at least " + std::to_string(kMinDensityReps));
  }
  if (threads == 0) threads = default_thread_count();
  const auto start = std::chrono::steady_clock::now();
  const bool dirty = plan.outliers.has_value();
  RawCells raw = simulate(plan, threads, true, dirty);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ExperimentPlan clean_plan = plan;
  clean_plan.outliers.reset();
  DensityBundle out;
  out.clean = assemble(clean_plan, raw.clean, false);
  out.clean.threads = threads;
  out.clean.seconds = seconds;
  if (dirty) {
    out.contaminated = assemble(plan, raw.dirty, true);
    out.contaminated->threads = threads;
    out.contaminated->seconds = seconds;
  }

  const std::size_t nk = plan.kinds.size();
  for (std::size_t di = 0; di < plan.d_values.size(); ++di) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    auto widen = [&](const ExperimentResult& r) {
      for (std::size_t k = 0; k < nk; ++k) {
        for (double v : r.cells[di * nk + k].samples) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
    };
    widen(out.clean);
    if (out.contaminated) widen(*out.contaminated);
    if (!(hi > lo)) {
      lo -= 1.0;
      hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    for (std::size_t k = 0; k < nk; ++k) {
      out.densities.push_back(make_density(out.clean.cells[di * nk + k], false, lo - pad, hi + pad,
                                           plan.bins));
      if (out.contaminated) {
        out.densities.push_back(make_density(out.contaminated->cells[di * nk + k], true, lo - pad,
                                             hi + pad, plan.bins));
      }
    }
  }
  return out;
}

ExperimentPlan plan_from_json(const nlohmann::json& doc) {
  ExperimentPlan plan;
  Fields f(doc);
  if (const auto* v = f.get("name")) {
    if (!v->is_string()) throw ConfigError("name: expected a string");
    plan.name = v->get<std::string>();
  }
  if (const auto* v = f.get("d_values")) {
    if (!v->is_array()) throw ConfigError("d_values: expected an array of numbers");
    for (std::size_t i = 0; i < v->size(); ++i) {
      plan.d_values.push_back(as_number((*v)[i], "d_values[" + std::to_string(i) + "]"));
    }
  } else {
    throw ConfigError("d_values: required field missing");
  }
  if (const auto* v = f.get("n")) {
    const long long n = as_integer(*v, "n");
    if (n < 1) throw ConfigError("n: must be positive");
    plan.n = static_cast<std::size_t>(n);
  }
  if (const auto* v = f.get("reps")) plan.reps = static_cast<int>(as_integer(*v, "reps"));
  if (const auto* v = f.get("j0")) plan.j0 = static_cast<int>(as_integer(*v, "j0"));
  if (const auto* v = f.get("ell")) plan.ell = static_cast<int>(as_integer(*v, "ell"));
  if (const auto* v = f.get("coarse")) {
    if (doc.contains("ell")) throw ConfigError("coarse: give either ell or coarse, not both");
    plan.ell = static_cast<int>(as_integer(*v, "coarse")) - plan.j0;
  }
  if (const auto* v = f.get("kinds")) {
    if (!v->is_array()) throw ConfigError("kinds: expected an array of estimator names");
    plan.kinds.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      const std::string path = "kinds[" + std::to_string(i) + "]";
      if (!(*v)[i].is_string()) throw ConfigError(path + ": expected \"cl\", \"mad\" or \"cr\"");
      try {
        plan.kinds.push_back(parse_kind((*v)[i].get<std::string>()));
      } catch (const InputError& e) {
        throw ConfigError(path + ": " + e.what());
      }
    }
  }
  if (const auto* v = f.get("outliers")) {
    if (!v->is_null()) {
      Fields o(*v);
      PlanOutliers po;
      if (const auto* x = o.get("fraction")) po.fraction = as_number(*x, "outliers.fraction");
      if (const auto* x = o.get("multiplier")) po.multiplier = as_number(*x, "outliers.multiplier");
      o.reject_unknown("outliers.");
      plan.outliers = po;
    }
  }
  if (const auto* v = f.get("wavelet_m")) plan.wavelet_m = static_cast<int>(as_integer(*v, "wavelet_m"));
  if (const auto* v = f.get("master_seed")) {
    if (v->is_number_unsigned()) {
      plan.master_seed = v->get<std::uint64_t>();
    } else {
      const long long s = as_integer(*v, "master_seed");
      if (s < 0) throw ConfigError("master_seed: must be non-negative");
      plan.master_seed = static_cast<std::uint64_t>(s);
    }
  }
  if (const auto* v = f.get("qn")) {
    if (!v->is_string()) throw ConfigError("qn: expected \"all_pairs\" or \"standard\"");
    const auto s = v->get<std::string>();
    if (s == "all_pairs") {
      plan.qn = QnConvention::all_pairs;
    } else if (s == "standard") {
      plan.qn = QnConvention::standard;
    } else {
      throw ConfigError("qn: expected \"all_pairs\" or \"standard\", got \"" + s + "\"");
    }
  }
  if (const auto* v = f.get("densities")) {
    if (!v->is_boolean()) throw ConfigError("densities: expected true or false");
    plan.densities = v->get<bool>();
  }
  if (const auto* v = f.get("bins")) plan.bins = static_cast<int>(as_integer(*v, "bins"));
  f.reject_unknown("");
  plan.validate();
  return plan;
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open plan file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  nlohmann::json doc;
  if (path.extension() == ".toml") {
    toml::table table;
    try {
      table = toml::parse(text, path.string());
    } catch (const toml::parse_error& e) {
      std::ostringstream msg;
      msg << path.string() << ":" << e.source().begin.line << ": " << e.description();
      throw ConfigError(msg.str());
    }
    std::ostringstream json_text;
    json_text << toml::json_formatter{table};
    doc = nlohmann::json::parse(json_text.str());
  } else {
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
  return plan_from_json(doc);
}

nlohmann::json to_json(const ExperimentPlan& plan) {
  nlohmann::json j;
  j["name"] = plan.name;
  j["d_values"] = plan.d_values;
  j["n"] = plan.n;
  j["reps"] = plan.reps;
  j["j0"] = plan.j0;
  j["ell"] = plan.ell;
  j["kinds"] = nlohmann::json::array();
  for (auto k : plan.kinds) j["kinds"].push_back(std::string(to_string(k)));
  if (plan.outliers) {
    j["outliers"] = {{"fraction", plan.outliers->fraction},
                     {"multiplier", plan.outliers->multiplier}};
  } else {
    j["outliers"] = nullptr;
  }
  j["wavelet_m"] = plan.wavelet_m;
  j["master_seed"] = plan.master_seed;
  j["qn"] = std::string(to_string(plan.qn));
  j["densities"] = plan.densities;
  j["bins"] = plan.bins;
  return j;
}

nlohmann::json to_json(const ExperimentResult& result, bool with_samples) {
  nlohmann::json j;
  j["plan"] = to_json(result.plan);
  j["contaminated"] = result.contaminated;
  j["cells"] = nlohmann::json::array();
  for (const auto& c : result.cells) {
    nlohmann::json cj{{"d", c.d},
                      {"kind", std::string(to_string(c.kind))},
                      {"wavelet_m", result.plan.wavelet_for(c.d)},
                      {"mean", c.mean},
                      {"bias", c.bias},
                      {"variance", c.variance},
                      {"sd", c.sd},
                      {"median", c.median},
                      {"count", c.samples.size()},
                      {"failures", c.failures}};
    if (with_samples) cj["samples"] = c.samples;
    j["cells"].push_back(std::move(cj));
  }
  j["are"] = nlohmann::json::array();
  for (const auto& a : result.are) {
    j["are"].push_back({{"d", a.d}, {"kind", std::string(to_string(a.kind))}, {"are", a.are}});
  }
  j["runtime"] = {{"seconds", result.seconds}, {"threads", result.threads}};
  return j;
}

nlohmann::json to_json(const Density& density) {
  return {{"d", density.d},
          {"kind", std::string(to_string(density.kind))},
          {"contaminated", density.contaminated},
          {"median", density.median},
          {"sd", density.sd},
          {"edges", density.edges},
          {"counts", density.counts},
          {"grid", density.grid},
          {"kde", density.kde}};
}

}  // namespace waverobe
