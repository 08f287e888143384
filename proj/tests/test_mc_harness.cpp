#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "waverobe/errors.hpp"
#include "waverobe/estimator.hpp"
#include "waverobe/mc_harness.hpp"

using namespace waverobe;

namespace {

const std::filesystem::path kPlans = std::filesystem::path(WAVEROBE_SOURCE_DIR) / "plans";

bool mentions(const std::vector<std::string>& problems, const std::string& prefix) {
  return std::any_of(problems.begin(), problems.end(),
                     [&](const std::string& p) { return p.rfind(prefix, 0) == 0; });
}

std::string config_error(const nlohmann::json& doc) {
  try {
    plan_from_json(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("mc_harness") {

TEST_CASE("plan validation names fields") {
  ExperimentPlan p;
  p.d_values = {0.2};
  CHECK(p.problems().empty());

  ExperimentPlan bad = p;
  bad.d_values = {0.2, 0.5};
  CHECK(mentions(bad.problems(), "d_values[1]"));
  bad = p;
  bad.d_values = {2.2};
  bad.wavelet_m = 2;
  CHECK(mentions(bad.problems(), "d_values[0]"));
  bad.wavelet_m = 0;
  CHECK(bad.problems().empty());
  CHECK(bad.wavelet_for(2.2) == 4);
  bad = p;
  bad.ell = 7;
  CHECK(mentions(bad.problems(), "ell"));
  bad = p;
  bad.kinds = {EstimatorKind::cl, EstimatorKind::cl};
  CHECK(mentions(bad.problems(), "kinds[1]"));
  bad = p;
  bad.densities = true;
  bad.reps = 100;
  CHECK(mentions(bad.problems(), "reps"));
  bad = p;
  bad.outliers = PlanOutliers{1.5, 5.0};
  CHECK(mentions(bad.problems(), "outliers.fraction"));
  bad = p;
  bad.reps = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("a single replication equals a direct estimate") {
  ExperimentPlan p;
  p.d_values = {0.2, 1.2};
  p.reps = 1;
  p.master_seed = 99;
  const ExperimentResult r = run_plan(p, 1);
  for (std::size_t di = 0; di < p.d_values.size(); ++di) {
    const double d = p.d_values[di];
    const auto x = ArfimaSampler(d, p.n).sample(replication_seed(p, di, 0));
    const auto pyr = decompose(x.values, daubechies_spec(2), 8);
    for (auto kind : kAllKinds) {
      const CellResult& c = r.cell(d, kind);
      REQUIRE(c.samples.size() == 1);
      CHECK(c.mean == doctest::Approx(estimate_d(pyr, 3, 5, kind).d_hat).epsilon(1e-13));
      CHECK(c.variance == 0.0);
    }
  }
  CHECK(r.are.empty());
}

TEST_CASE("results do not depend on the thread count") {
  ExperimentPlan p;
  p.d_values = {0.2, 1.2};
  p.reps = 40;
  p.outliers = PlanOutliers{};
  const ExperimentResult a = run_plan(p, 1), b = run_plan(p, 4);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].samples == b.cells[i].samples);
    CHECK(a.cells[i].variance == b.cells[i].variance);
  }
  CHECK(to_json(a, true)["cells"] == to_json(b, true)["cells"]);
}

TEST_CASE("Table 1 ranges at 500 replications") {
  ExperimentPlan p = load_plan(kPlans / "table1-desk.json");
  REQUIRE(p.reps == 500);
  const ExperimentResult r = run_plan(p);
  REQUIRE(r.are.size() == 2 * p.d_values.size());
  for (const AreEntry& e : r.are) {
    CAPTURE(e.d);
    CAPTURE(e.kind);
    CAPTURE(e.are);
    if (e.kind == EstimatorKind::cr) {
      CHECK(e.are >= 0.55);
      CHECK(e.are <= 0.87);
    } else {
      CHECK(e.are >= 0.30);
      CHECK(e.are <= 0.58);
    }
  }
}

const DensityBundle& fig23_bundle() {
  static const DensityBundle b = [] {
    ExperimentPlan p = load_plan(kPlans / "fig23-desk.json");
    p.reps = 500;
    return density_experiment(p);
  }();
  return b;
}

TEST_CASE("density study") {
  const DensityBundle& b = fig23_bundle();
  REQUIRE(b.contaminated);
  CHECK(b.densities.size() == 2 * 3 * 2);
  for (const Density& dens : b.densities) {
    REQUIRE(dens.edges.size() == 41);
    double area = 0.0;
    for (std::size_t k = 0; k < dens.counts.size(); ++k) area += dens.counts[k] * (dens.edges[k + 1] - dens.edges[k]);
    CHECK(area == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(dens.kde.size() == dens.grid.size());
  }
  const CellResult& cl = b.contaminated->cell(1.2, EstimatorKind::cl);
  for (auto kind : {EstimatorKind::mad, EstimatorKind::cr}) {
    CHECK(std::abs(cl.median) > b.contaminated->cell(1.2, kind).sd);
    CHECK(std::abs(cl.bias) > 2 * std::abs(b.contaminated->cell(1.2, kind).bias));
  }
  ExperimentPlan small = load_plan(kPlans / "fig23-desk.json");
  small.reps = 100;
  CHECK_THROWS_AS(density_experiment(small), ConfigError);
}

TEST_CASE("clean densities are centred" * doctest::may_fail()) {
  // Coarse scales hold 13 coefficients; the log of a small-sample scale
  // estimate is biased downwards, by about 0.3 SD for CL and more for CR.
  const DensityBundle& b = fig23_bundle();
  for (auto kind : kAllKinds) {
    const CellResult& c = b.clean.cell(0.2, kind);
    CAPTURE(kind);
    CHECK(std::abs(c.median) < 0.1 * c.sd);
  }
}

TEST_CASE("robust spreads survive contamination" * doctest::may_fail()) {
  // At d = 1.2 the outliers are 5 sd of an integrated series; each one
  // touches about three coefficients per scale, so scale 4 is near breakdown.
  const DensityBundle& b = fig23_bundle();
  for (double d : {0.2, 1.2}) {
    for (auto kind : {EstimatorKind::mad, EstimatorKind::cr}) {
      CAPTURE(d);
      CAPTURE(kind);
      const double clean = b.clean.cell(d, kind).sd;
      CHECK(b.contaminated->cell(d, kind).sd == doctest::Approx(clean).epsilon(0.25));
    }
  }
}

TEST_CASE("standard error of the mean scales as 1/sqrt(reps)") {
  ExperimentPlan p;
  p.d_values = {0.2};
  p.kinds = {EstimatorKind::cl};
  p.reps = 1000;
  const ExperimentResult r = run_plan(p);
  const auto& s = r.cell(0.2, EstimatorKind::cl).samples;
  auto sd_of = [](const std::vector<double>& x) {
    double m = 0, v = 0;
    for (double e : x) m += e;
    m /= x.size();
    for (double e : x) v += (e - m) * (e - m);
    return std::sqrt(v / (x.size() - 1));
  };
  const std::vector<double> quarter(s.begin(), s.begin() + 250);
  const double se250 = sd_of(quarter) / std::sqrt(250.0);
  const double se1000 = sd_of(s) / std::sqrt(1000.0);
  CHECK(se250 / se1000 == doctest::Approx(2.0).epsilon(0.3));
}

TEST_CASE("JSON and TOML plans agree") {
  const ExperimentPlan a = load_plan(kPlans / "smoke.json"), b = load_plan(kPlans / "smoke.toml");
  CHECK(to_json(a) == to_json(b));
  CHECK(a.ell == 5);
  CHECK(a.reps == 1);
  for (const char* name : {"table1-desk.json", "fig23-desk.json"}) {
    CHECK_NOTHROW(load_plan(kPlans / name).validate());
  }
}

TEST_CASE("plan parse errors carry paths") {
  nlohmann::json base = {{"d_values", {0.2}}};
  CHECK(config_error(base).empty());
  auto doc = base;
  doc["bogus"] = 1;
  CHECK(config_error(doc).find("bogus") != std::string::npos);
  doc = base;
  doc["kinds"] = {"cl", "qn"};
  CHECK(config_error(doc).find("kinds[1]") != std::string::npos);
  doc = base;
  doc["outliers"] = {{"fraction", "lots"}};
  CHECK(config_error(doc).find("outliers.fraction") != std::string::npos);
  doc = base;
  doc["coarse"] = 8;
  doc["ell"] = 5;
  CHECK(config_error(doc).find("coarse") != std::string::npos);
  CHECK(config_error(nlohmann::json::object()).find("d_values") != std::string::npos);
  CHECK_THROWS_AS(load_plan(kPlans / "missing.json"), InputError);
}

TEST_CASE("coarse-scale length depends on the kinds") {
  ExperimentPlan p;
  p.d_values = {0.2};
  p.reps = 5;
  p.n = 300;
  p.j0 = 1;
  p.ell = 5;
  p.kinds = {EstimatorKind::cr};
  CHECK(mentions(p.problems(), "ell"));
  p.kinds = {EstimatorKind::cl, EstimatorKind::mad};
  CHECK(p.problems().empty());
  const ExperimentResult r = run_plan(p, 1);
  CHECK(r.cell(0.2, EstimatorKind::cl).failures == 0);
  CHECK(r.are.size() == 1);
}

}  // TEST_SUITE
