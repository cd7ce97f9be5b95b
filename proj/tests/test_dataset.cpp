#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "fcopf/dataset.hpp"
#include "support.hpp"

using namespace fcopf;

namespace {

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "fcopf_test_dataset";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * (i + j);
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n, mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::vector<DatasetRow> synthetic_rows(std::size_t n, std::size_t arity, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<DatasetRow> rows(n);
  for (auto& r : rows) {
    for (std::size_t j = 0; j < arity; ++j) r.features.push_back(rng.uniform(0, 200));
    r.nadir = 59.5 + rng.uniform(0, 0.5);
    r.rocof = -rng.uniform(0, 1);
  }
  return rows;
}

}  // namespace

TEST_CASE("degenerate ranges reproduce the reference operating point") {
  const auto& g = fixture::bundled();
  SamplingConfig r;
  r.load_min = r.load_max = 1.0;
  r.gen_min = r.gen_max = 1.0;
  const auto s = sample_scenarios(g, r, 1, 9);
  REQUIRE(s.size() == 1);
  const auto reference = default_dispatch(g, g.nominal_loads());
  for (std::size_t i = 0; i < reference.size(); ++i) CHECK(s[0].group_outputs[i] == doctest::Approx(reference[i]));
  for (double l : s[0].load_scales) CHECK(l == 1.0);
  const auto c = credible_contingencies(g);
  CHECK(std::find(c.begin(), c.end(), s[0].tripped) != c.end());
}

TEST_CASE("sampling is deterministic and covers the load range uniformly") {
  const auto& g = fixture::bundled();
  const SamplingConfig r;
  const auto a = sample_scenarios(g, r, 10000, 4);
  const auto b = sample_scenarios(g, r, 10000, 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].load_scales == b[i].load_scales);
    REQUIRE(a[i].group_outputs == b[i].group_outputs);
    REQUIRE(a[i].tripped == b[i].tripped);
  }
  double lo = 1e9, hi = -1e9;
  std::vector<double> counts(10, 0.0);
  for (const auto& s : a) {
    for (double x : s.load_scales) lo = std::min(lo, x), hi = std::max(hi, x);
    const auto bin = static_cast<std::size_t>((s.load_scales[0] - 0.9) / 0.2 * 10);
    counts[std::min<std::size_t>(bin, 9)] += 1;
  }
  CHECK(lo >= 0.90);
  CHECK(hi <= 1.10);
  double chi2 = 0;
  for (double c : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
  CHECK(chi2 < 21.666);  // 9 degrees of freedom, p = 0.01

  std::vector<std::size_t> trips(3, 0);
  const auto credible = credible_contingencies(g);
  for (const auto& s : a) ++trips[std::find(credible.begin(), credible.end(), s.tripped) - credible.begin()];
  for (auto t : trips) CHECK(t > 3000);
}

TEST_CASE("sampled scenarios are balanced and within limits") {
  const auto& g = fixture::bundled();
  for (const auto& s : sample_scenarios(g, SamplingConfig{}, 500, 8)) {
    std::vector<double> loads(g.loads.size());
    for (std::size_t l = 0; l < loads.size(); ++l) loads[l] = s.load_scales[l] * g.loads[l].p;
    CHECK(check_operating_point(g, make_operating_point(g, s.group_outputs, loads)).empty());
  }
}

TEST_CASE("infeasible sampling ranges are reported") {
  const auto& g = fixture::bundled();
  SamplingConfig r;
  r.load_min = r.load_max = 3.0;
  r.max_attempts = 5;
  CHECK_THROWS_AS(sample_scenarios(g, r, 1, 1), Error);
}

TEST_CASE("zero tripped output labels to an undisturbed system") {
  GridCase g = fixture::bundled();
  g.gen_groups[2].p_min = 0.0;
  Scenario s;
  s.load_scales.assign(3, 1.0);
  s.group_outputs = default_dispatch(g, g.nominal_loads());
  s.group_outputs[0] += s.group_outputs[2] * 3 / 2;
  s.group_outputs[2] = 0.0;
  s.tripped = UnitId{2, 0};
  const auto row = label_scenario(g, s, SimConfig{});
  CHECK(row.nadir == doctest::Approx(60.0).epsilon(1e-12));
  CHECK(std::fabs(row.rocof) < 1e-9);
}

TEST_CASE("labels compose simulate and measure") {
  const auto& g = fixture::bundled();
  const auto loads = g.nominal_loads();
  Scenario s;
  s.load_scales.assign(3, 1.0);
  s.group_outputs = default_dispatch(g, loads);
  s.tripped = UnitId{0, 0};
  const SimConfig sim;
  const auto row = label_scenario(g, s, sim);
  const auto m = measure(simulate_trip(g, make_operating_point(g, s.group_outputs, loads), s.tripped, sim), sim);
  CHECK(row.nadir == m.nadir);
  CHECK(row.rocof == m.rocof);

  Scenario t = s;
  t.tripped = UnitId{1, 0};
  const auto other = label_scenario(g, t, sim);
  const auto layout = FeatureLayout::for_case(g, credible_contingencies(g));
  REQUIRE(row.features.size() == layout.arity());
  for (std::size_t j = 0; j < layout.trip_offset(); ++j) CHECK(row.features[j] == other.features[j]);
  CHECK(row.features[layout.trip_offset()] == 1.0);
  CHECK(other.features[layout.trip_offset() + 1] == 1.0);
}

TEST_CASE("label physics, arity and parallel labeling") {
  const auto& g = fixture::bundled();
  const auto scenarios = sample_scenarios(g, SamplingConfig{}, 240, 21);
  const SimConfig sim;
  const auto rows = label_scenarios(g, scenarios, sim, Execution::parallel);
  const auto serial = label_scenarios(g, scenarios, sim, Execution::serial);
  CHECK(rows == serial);
  const auto arity = FeatureLayout::for_case(g, credible_contingencies(g)).arity();
  std::vector<double> lost, steepness;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].features.size() == arity);
    CHECK(rows[i].rocof <= 0.0);
    CHECK(rows[i].nadir <= g.f0);
    lost.push_back(scenarios[i].group_outputs[scenarios[i].tripped.group]);
    steepness.push_back(-rows[i].rocof);
  }
  CHECK(pearson(ranks(lost), ranks(steepness)) > 0.8);
}

TEST_CASE("dataset files round trip") {
  const auto& g = fixture::bundled();
  const auto m0 = make_manifest(g, SamplingConfig{}, SimConfig{}, 3, 0);
  CHECK(dataset_roundtrip({}, m0, temp_path("empty.tsv")).empty());

  const auto arity = m0.layout.arity();
  const auto rows = synthetic_rows(1000, arity, 5);
  const auto m = make_manifest(g, SamplingConfig{}, SimConfig{}, 3, rows.size());
  CHECK(dataset_roundtrip(rows, m, temp_path("rows.tsv")) == rows);

  const auto ds = read_dataset(temp_path("rows.tsv"), g.fingerprint);
  CHECK(ds.manifest.layout.names == m.layout.names);
  CHECK(ds.manifest.seed == 3);
  try {
    read_dataset(temp_path("rows.tsv"), "0000000000000000");
    FAIL("fingerprint mismatch was accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::mismatch);
  }

  write_dataset(temp_path("a.tsv"), m, rows);
  write_dataset(temp_path("b.tsv"), m, rows);
  CHECK(read_file(temp_path("a.tsv")) == read_file(temp_path("b.tsv")));
}

TEST_CASE("split sizes, disjointness and determinism") {
  auto rows = synthetic_rows(10, 4, 1);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].nadir = static_cast<double>(i);
  const auto s = split(rows, 0.8, 2);
  CHECK(s.train.size() == 8);
  CHECK(s.validation.size() == 2);
  for (const auto& v : s.validation)
    for (const auto& t : s.train) CHECK(v.nadir != t.nadir);
  const auto again = split(rows, 0.8, 2);
  CHECK(again.train == s.train);
  CHECK(again.validation == s.validation);

  auto big = synthetic_rows(5000, 3, 2);
  for (std::size_t i = 0; i < big.size(); ++i) big[i].nadir = static_cast<double>(i);
  const auto b = split(big, 0.9, 3);
  REQUIRE(b.train.size() == 4500);
  REQUIRE(b.validation.size() == 500);
  std::vector<double> seen;
  for (const auto& r : b.train) seen.push_back(r.nadir);
  for (const auto& r : b.validation) seen.push_back(r.nadir);
  std::sort(seen.begin(), seen.end());
  for (std::size_t i = 0; i < seen.size(); ++i) CHECK(seen[i] == static_cast<double>(i));

  CHECK_THROWS_AS(split(rows, 1.0, 1), Error);
}
