// Copyright 2026 The cogstream Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cogstream/tuner.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "test_support.hpp"

namespace cogstream {
namespace {

TrialResult result(const LoaderConfig& c, double mbps) {
  TrialResult t;
  t.config = c;
  t.mean_mbps = mbps;
  return t;
}

TEST(SearchSpace, FullSpaceHasAllLoaderValues) {
  const auto s = SearchSpace::full();
  EXPECT_EQ(s.size(), 10080u);
  EXPECT_GE(s.size(), 10000u);
  EXPECT_EQ(s.domain_size(Param::Compression), 6u);
  EXPECT_EQ(s.domain_size(Param::NumWorkers), 7u);
  SamplerRng rng(1);
  for (int i = 0; i < 500; ++i) {
    const Point p = s.uniform_point(rng);
    const LoaderConfig c = s.config(p, LoaderConfig{});
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(s.point(c), p);
  }
  LoaderConfig odd;
  odd.num_workers = 3;
  EXPECT_FALSE(s.point(odd).has_value());
}

TEST(SearchSpace, EmptyDomainIsRejected) {
  auto s = SearchSpace::full();
  s.blocked.clear();
  EXPECT_COG_ERROR(s.validate(), ErrorCode::EmptySpace);
  Study study;
  study.space = s;
  EXPECT_COG_ERROR(tpe_suggest(study), ErrorCode::EmptySpace);
  EXPECT_COG_ERROR(run_study(s, [](const LoaderConfig& c, std::uint64_t) { return result(c, 1); }, 1, 0),
                   ErrorCode::EmptySpace);
}

TEST(SearchSpace, ParamNames) {
  for (Param p : kAllParams) EXPECT_EQ(parse_param(param_name(p)), p);
  EXPECT_EQ(parse_param("workers"), Param::NumWorkers);
  EXPECT_EQ(parse_param("threads"), Param::NumThreads);
  EXPECT_FALSE(parse_param("cache").has_value());
}

TEST(Tpe, GoodSetIsCeilOfGammaN) {
  EXPECT_EQ(tpe_good_count(20, 0.25), 5u);
  EXPECT_EQ(tpe_good_count(21, 0.25), 6u);
  EXPECT_EQ(tpe_good_count(1, 0.25), 1u);
  EXPECT_EQ(tpe_good_count(4, 0.25), 1u);
  EXPECT_EQ(tpe_good_count(0, 0.25), 0u);
}

Study study_with(const std::vector<std::pair<Point, double>>& obs, std::uint64_t seed = 0) {
  Study s;
  s.seed = seed;
  for (const auto& [p, y] : obs) {
    Observation o;
    o.config = s.space.config(p, s.base);
    o.objective = y;
    o.trial_index = static_cast<std::uint32_t>(s.observations.size());
    s.observations.push_back(o);
  }
  return s;
}

TEST(Tpe, DensitiesSplitGoodAndBadWithPrior) {
  // 20 observations, objective = index: the top 5 are good.
  std::vector<std::pair<Point, double>> obs;
  for (int i = 0; i < 20; ++i) obs.push_back({Point{i >= 15 ? 5u : 0u, 0, 0, 0, 0, 0}, double(i)});
  const auto d = tpe_densities(study_with(obs));
  // Compression: good = 5 x zstd, bad = 15 x none, prior 1 per value (6 values).
  EXPECT_NEAR(d.good[0][5], (1.0 + 5) / (6 + 5), 1e-12);
  EXPECT_NEAR(d.good[0][0], 1.0 / 11, 1e-12);
  EXPECT_NEAR(d.bad[0][0], (1.0 + 15) / (6 + 15), 1e-12);
  EXPECT_NEAR(d.bad[0][5], 1.0 / 21, 1e-12);
  for (std::size_t j = 0; j < kParamCount; ++j) {
    for (double v : d.good[j]) EXPECT_GT(v, 0.0);
    for (double v : d.bad[j]) EXPECT_GT(v, 0.0);
  }
}

TEST(Tpe, OldObservationsAreForgottenLinearly) {
  // 30 bad observations of "none", newest last; good set of 10 all "zstd".
  std::vector<std::pair<Point, double>> obs;
  for (int i = 0; i < 30; ++i) obs.push_back({Point{0, 0, 0, 0, 0, 0}, 0.0});
  for (int i = 0; i < 10; ++i) obs.push_back({Point{5, 0, 0, 0, 0, 0}, 1.0});
  auto s = study_with(obs);
  // Bad set: 30 members, 5 ramped (1/30 .. 1 over 5 steps), 25 at full weight.
  double ramp = 0;
  for (int r = 0; r < 5; ++r) ramp += 1.0 / 30 + (1 - 1.0 / 30) * r / 4.0;
  const auto d = tpe_densities(s);
  EXPECT_NEAR(d.bad[0][0], (1 + 25 + ramp) / (6 + 25 + ramp), 1e-12);
  s.tpe.linear_forgetting = 0;
  EXPECT_NEAR(tpe_densities(s).bad[0][0], 31.0 / 36, 1e-12);
}

TEST(Tpe, BoundaryTiesStraddlingTheSplitJoinNeitherSet) {
  // 4 distinct winners, then 8 tied, then 8 losers: good set size 5 cuts the
  // tie group, which is left out.
  std::vector<std::pair<Point, double>> obs;
  for (int i = 0; i < 4; ++i) obs.push_back({Point{5, 0, 0, 0, 0, 0}, 10.0 + i});
  for (int i = 0; i < 8; ++i) obs.push_back({Point{1, 0, 0, 0, 0, 0}, 3.0});
  for (int i = 0; i < 8; ++i) obs.push_back({Point{0, 0, 0, 0, 0, 0}, 1.0});
  auto s = study_with(obs);
  const auto d = tpe_densities(s);
  EXPECT_NEAR(d.good[0][5], (1.0 + 4) / (6 + 4), 1e-12);
  EXPECT_NEAR(d.good[0][1], 1.0 / 10, 1e-12);
  EXPECT_NEAR(d.bad[0][1], 1.0 / 14, 1e-12);
  EXPECT_NEAR(d.bad[0][0], (1.0 + 8) / 14, 1e-12);
  // Reordering the observations changes nothing.
  std::reverse(s.observations.begin(), s.observations.end());
  const auto d2 = tpe_densities(s);
  EXPECT_EQ(d.good, d2.good);
  EXPECT_EQ(d.bad, d2.bad);
  // A tie group that fits entirely joins the good set.
  obs.resize(4);
  obs.push_back({Point{1, 0, 0, 0, 0, 0}, 3.0});
  for (int i = 0; i < 15; ++i) obs.push_back({Point{0, 0, 0, 0, 0, 0}, 1.0});
  EXPECT_NEAR(tpe_densities(study_with(obs)).good[0][1], 2.0 / 11, 1e-12);
}

TEST(Tpe, PlateauOfBestValuesLargerThanTheQuotaIsLeftOut) {
  // 12 observations share the best value, more than the quota of 5. The
  // group straddles the split like any other tie and joins neither set.
  std::vector<std::pair<Point, double>> obs;
  for (int i = 0; i < 12; ++i) obs.push_back({Point{2, 0, 0, 0, 0, 0}, 9.0});
  for (int i = 0; i < 8; ++i) obs.push_back({Point{0, 0, 0, 0, 0, 0}, 1.0});
  const auto d = tpe_densities(study_with(obs));
  for (double v : d.good[0]) EXPECT_NEAR(v, 1.0 / 6, 1e-12);
  EXPECT_NEAR(d.bad[0][2], 1.0 / (6 + 8), 1e-12);
  EXPECT_NEAR(d.bad[0][0], (1.0 + 8) / (6 + 8), 1e-12);
}

TEST(Tpe, AllEqualObjectivesLeaveBothDensitiesAtThePrior) {
  std::vector<std::pair<Point, double>> obs;
  SamplerRng rng(3);
  for (int i = 0; i < 40; ++i) obs.push_back({SearchSpace::full().uniform_point(rng), 2.5});
  const auto d = tpe_densities(study_with(obs));
  EXPECT_EQ(d.good, d.bad);
  for (double v : d.good[2]) EXPECT_NEAR(v, 1.0 / 7, 1e-12);
}

TEST(Tpe, ConstantObjectiveGivesNearUniformSuggestions) {
  // Uniformly drawn history, as after the start-up phase.
  const auto space = SearchSpace::full();
  std::vector<std::pair<Point, double>> obs;
  SamplerRng history(17);
  for (std::size_t i = 0; i < 60; ++i) obs.push_back({space.uniform_point(history), 7.0});
  std::array<std::map<std::size_t, int>, kParamCount> counts;
  const int draws = 1200;
  for (int s = 0; s < draws; ++s) {
    auto study = study_with(obs, 1000 + s);
    const auto p = *space.point(tpe_suggest(study));
    for (std::size_t j = 0; j < kParamCount; ++j) ++counts[j][p[j]];
  }
  for (std::size_t j = 0; j < kParamCount; ++j) {
    const double expected = double(draws) / double(space.domain_size(kAllParams[j]));
    ASSERT_EQ(counts[j].size(), space.domain_size(kAllParams[j])) << param_name(kAllParams[j]);
    for (auto [v, c] : counts[j]) {
      EXPECT_GT(c, 0.6 * expected) << param_name(kAllParams[j]) << " value " << v;
      EXPECT_LT(c, 1.4 * expected) << param_name(kAllParams[j]) << " value " << v;
    }
  }
}

TEST(Tpe, SuggestionsStayInsideARestrictedSpace) {
  SearchSpace space = SearchSpace::full();
  space.patch_size = {512};
  space.num_workers = {2, 8};
  space.compression = {Variant::Lzw, Variant::None};
  const Objective f = [](const LoaderConfig& c, std::uint64_t) { return result(c, c.num_threads); };
  const Study s = run_study(space, f, 40, 3);
  for (const auto& o : s.observations) {
    EXPECT_TRUE(space.point(o.config).has_value()) << o.config.canonical();
  }
}

// Separable objective whose optimum sits on (patch_size, num_workers).
double separable(const LoaderConfig& c) {
  static const std::map<std::uint32_t, double> patch = {{128, 1}, {256, 4}, {512, 9}, {1024, 3}};
  static const std::map<std::uint32_t, double> workers = {{1, 0},  {2, 1},  {4, 2}, {8, 3},
                                                          {16, 7}, {32, 5}, {64, 4}};
  return patch.at(c.patch_size) + workers.at(c.num_workers);
}

TEST(Tpe, FindsSeparableOptimumInMostSeeds) {
  // Brute force over the subspace gives the reference optimum.
  LoaderConfig truth;
  double best = -1;
  for (auto p : domain::kPatchSizes) {
    for (auto w : domain::kWorkers) {
      LoaderConfig c;
      c.patch_size = p;
      c.num_workers = w;
      if (separable(c) > best) {
        best = separable(c);
        truth = c;
      }
    }
  }
  ASSERT_EQ(truth.patch_size, 512u);
  ASSERT_EQ(truth.num_workers, 16u);
  const Objective f = [](const LoaderConfig& c, std::uint64_t) { return result(c, separable(c)); };
  int found = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto b = run_study(SearchSpace::full(), f, 100, seed).best();
    ASSERT_TRUE(b);
    found += b->config.patch_size == truth.patch_size && b->config.num_workers == truth.num_workers;
  }
  EXPECT_GE(found, 18) << found << " of 20";
}

TEST(Study, ZeroTrialsIsEmpty) {
  const Objective f = [](const LoaderConfig& c, std::uint64_t) { return result(c, 1); };
  const Study s = run_study(SearchSpace::full(), f, 0, 1);
  EXPECT_TRUE(s.observations.empty());
  EXPECT_FALSE(s.best().has_value());
}

TEST(Study, DeterministicForAFixedSeed) {
  const Objective f = [](const LoaderConfig& c, std::uint64_t seed) {
    return result(c, separable(c) + double(seed % 1000) * 1e-6);
  };
  for (auto strategy : {SearchStrategy::Tpe, SearchStrategy::Random}) {
    StudyOptions opts;
    opts.strategy = strategy;
    const Study a = run_study(SearchSpace::full(), f, 30, 5, opts);
    const Study b = run_study(SearchSpace::full(), f, 30, 5, opts);
    ASSERT_EQ(a.observations.size(), 30u);
    for (std::size_t i = 0; i < 30; ++i) {
      EXPECT_EQ(a.observations[i].config, b.observations[i].config);
      EXPECT_EQ(a.observations[i].objective, b.observations[i].objective);
      EXPECT_EQ(a.observations[i].trial_index, i);
    }
  }
}

TEST(Study, FailedTrialsAreRecordedAndSkipped) {
  const Objective f = [](const LoaderConfig& c, std::uint64_t) -> TrialResult {
    if (c.num_workers == 64) throw Error(ErrorCode::SourceFailure, "boom");
    TrialResult t = result(c, separable(c));
    if (c.patch_size == 128) {
      t.valid = false;
      t.error = "SourceFailure: gone";
    }
    return t;
  };
  const Study s = run_study(SearchSpace::full(), f, 60, 2);
  ASSERT_EQ(s.observations.size(), 60u);
  int invalid = 0;
  for (const auto& o : s.observations) {
    if (o.config.num_workers == 64 || o.config.patch_size == 128) {
      EXPECT_FALSE(o.valid);
      EXPECT_FALSE(o.error.empty());
      ++invalid;
    } else {
      EXPECT_TRUE(o.valid);
    }
  }
  EXPECT_GT(invalid, 0);
  ASSERT_TRUE(s.best());
  EXPECT_TRUE(s.best()->valid);
  const auto trace = s.best_trace();
  EXPECT_TRUE(std::is_sorted(trace.begin(), trace.end()));
  EXPECT_EQ(trace.back(), s.best()->objective);
}

TEST(Study, ResumesFromItsLog) {
  testing::TempDir dir;
  const auto log = dir / "study.jsonl";
  const Objective f = [](const LoaderConfig& c, std::uint64_t) { return result(c, separable(c)); };
  StudyOptions opts;
  opts.log_path = log;
  run_study(SearchSpace::full(), f, 12, 9, opts);
  EXPECT_EQ(load_observations(log).size(), 12u);
  int calls = 0;
  const Objective counting = [&](const LoaderConfig& c, std::uint64_t s) {
    ++calls;
    return f(c, s);
  };
  const Study resumed = run_study(SearchSpace::full(), counting, 25, 9, opts);
  EXPECT_EQ(calls, 13);
  const Study fresh = run_study(SearchSpace::full(), f, 25, 9);
  ASSERT_EQ(resumed.observations.size(), 25u);
  for (std::size_t i = 0; i < 25; ++i) {
    EXPECT_EQ(resumed.observations[i].config, fresh.observations[i].config) << i;
  }
  EXPECT_EQ(load_observations(log).size(), 25u);
}

TEST(Study, LogLinesCarryTheObservation) {
  Study s;
  s.seed = 4;
  Observation o;
  o.config = remote_optimized_config();
  o.objective = 123.5;
  o.objective_std = 2.25;
  o.trial_index = 7;
  o.seed = 99;
  testing::TempDir dir;
  const std::string line = observation_json(o, s) + "\n";
  testing::write_file(dir / "s.jsonl", Bytes(line.begin(), line.end()));
  const auto back = load_observations(dir / "s.jsonl");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].config, o.config);
  EXPECT_EQ(back[0].objective, 123.5);
  EXPECT_EQ(back[0].objective_std, 2.25);
  EXPECT_EQ(back[0].trial_index, 7u);
  EXPECT_EQ(back[0].seed, 99u);
  const std::string bad = "{\"schema_version\": 1}\n";
  testing::write_file(dir / "bad.jsonl", Bytes(bad.begin(), bad.end()));
  EXPECT_COG_ERROR(load_observations(dir / "bad.jsonl"), ErrorCode::InvalidArgument);
}

TEST(Grid, ShapeRepsAndCsv) {
  std::uint64_t calls = 0;
  const Objective f = [&](const LoaderConfig& c, std::uint64_t seed) {
    ++calls;
    return result(c, double(c.num_workers * 10 + c.num_threads) + double(seed % 7));
  };
  LoaderConfig fixed;
  const auto g = grid_search(Param::NumWorkers, Param::NumThreads, fixed, 1, f, 3);
  EXPECT_EQ(calls, 42u);
  ASSERT_EQ(g.cells.size(), 7u);
  ASSERT_EQ(g.cells[0].size(), 6u);
  for (const auto& row : g.cells)
    for (const auto& cell : row) EXPECT_EQ(cell.std, 0.0);

  LoaderConfig patchy;
  const auto g5 = grid_search(Param::NumWorkers, Param::PatchSize, patchy, 5, f, 3);
  const std::string csv = g5.to_csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 28);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "num_workers,patch_size,mean_mbps,std_mbps,reps,valid,best_in_column,best_overall");
  // The largest worker count wins every column; the overall best is unique.
  const auto best = g5.best();
  ASSERT_TRUE(best);
  EXPECT_EQ(g5.values_a[best->first], "64");
  EXPECT_NE(csv.find("64,128,"), std::string::npos);
  std::size_t overall = 0;
  std::size_t pos = 0;
  while ((pos = csv.find(",best\n", pos)) != std::string::npos) ++overall, ++pos;
  EXPECT_EQ(overall, 1u);
  // Distinct seeds per rep: five different samples.
  const auto& cell = g5.cells[0][0];
  EXPECT_EQ(cell.samples.size(), 5u);
  EXPECT_GT(cell.std, 0.0);
}

TEST(Grid, RejectsSameAxisAndMarksFailedCells) {
  const Objective f = [](const LoaderConfig& c, std::uint64_t) {
    TrialResult t = result(c, 1.0);
    if (c.blocked && c.patch_size == 1024) {
      t.valid = false;
      t.error = "SourceFailure: x";
    }
    return t;
  };
  EXPECT_COG_ERROR(grid_search(Param::Blocked, Param::Blocked, LoaderConfig{}, 1, f),
                   ErrorCode::InvalidArgument);
  const auto g = grid_search(Param::Blocked, Param::PatchSize, LoaderConfig{}, 2, f);
  EXPECT_FALSE(g.cells[1][3].valid);
  EXPECT_TRUE(g.cells[0][3].valid);
  EXPECT_NE(g.to_csv().find("true,1024,0.000,0.000,0,false"), std::string::npos);
}

Study random_study(std::size_t n, const std::function<double(const LoaderConfig&, SamplerRng&)>& f,
                   std::uint64_t seed) {
  Study s;
  SamplerRng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    Observation o;
    o.config = s.space.config(s.space.uniform_point(rng), s.base);
    o.objective = f(o.config, rng);
    o.trial_index = static_cast<std::uint32_t>(i);
    s.observations.push_back(o);
  }
  return s;
}

double percent_of(const std::vector<ParamImportance>& imp, Param p) {
  for (const auto& i : imp)
    if (i.param == p) return i.percent;
  return -1;
}

TEST(Importance, NeedsThirtyObservations) {
  const auto s = random_study(29, [](const LoaderConfig&, SamplerRng&) { return 1.0; }, 1);
  EXPECT_COG_ERROR(importance(s), ErrorCode::InsufficientData);
}

TEST(Importance, SingleActiveParameterDominates) {
  const auto s = random_study(
      150,
      [](const LoaderConfig& c, SamplerRng& rng) {
        return 100.0 * std::log2(double(c.num_workers)) + double(rng() % 1000) * 1e-3;
      },
      2);
  const auto imp = importance(s);
  EXPECT_EQ(imp.front().param, Param::NumWorkers);
  EXPECT_GE(imp.front().percent, 80.0);
  double total = 0;
  for (const auto& i : imp) total += i.percent;
  EXPECT_NEAR(total, 100.0, 0.1);
}

TEST(Importance, ConstantObjectiveSpreadsEvenly) {
  const auto s = random_study(60, [](const LoaderConfig&, SamplerRng&) { return 5.0; }, 3);
  const auto imp = importance(s);
  double lo = 1e9;
  double hi = 0;
  for (const auto& i : imp) {
    lo = std::min(lo, i.percent);
    hi = std::max(hi, i.percent);
  }
  EXPECT_LE(hi, 2 * lo);
}

TEST(Importance, AdditiveObjectiveMatchesEnumeratedShares) {
  // g over patch_size, h over blocked; enumerate both to get the true ratio.
  const std::map<std::uint32_t, double> g = {{128, -std::sqrt(3.0)}, {256, -std::sqrt(3.0)},
                                             {512, std::sqrt(3.0)},  {1024, std::sqrt(3.0)}};
  const auto h = [](bool b) { return b ? 1.0 : -1.0; };
  double mg = 0, vg = 0, mh = 0, vh = 0;
  for (auto [p, v] : g) mg += v / 4;
  for (auto [p, v] : g) vg += (v - mg) * (v - mg) / 4;
  for (bool b : {false, true}) mh += h(b) / 2;
  for (bool b : {false, true}) vh += (h(b) - mh) * (h(b) - mh) / 2;
  ASSERT_NEAR(vg / vh, 3.0, 1e-12);

  const auto s = random_study(
      300, [&](const LoaderConfig& c, SamplerRng&) { return g.at(c.patch_size) + h(c.blocked); }, 4);
  const auto imp = importance(s);
  const double ratio = percent_of(imp, Param::PatchSize) / percent_of(imp, Param::Blocked);
  EXPECT_GE(ratio, 2.0);
  EXPECT_LE(ratio, 4.0);
}

TEST(Report, MarkdownTablesWithMeanAndStd) {
  const Objective f = [](const LoaderConfig& c, std::uint64_t) {
    TrialResult t = result(c, separable(c));
    t.std_mbps = 0.5;
    return t;
  };
  const Study s = run_study(SearchSpace::full(), f, 35, 1);
  Observation base;
  base.config = baseline_config();
  base.objective = 2.0;
  const std::string md = study_report(s, 3, base);
  EXPECT_NE(md.find("| rank | trial | compression |"), std::string::npos);
  EXPECT_NE(md.find("mean MB/s | std MB/s | vs baseline |"), std::string::npos);
  EXPECT_NE(md.find("| baseline |"), std::string::npos);
  EXPECT_NE(md.find("## Parameter importance"), std::string::npos);
  const auto g = grid_search(Param::Blocked, Param::PatchSize, LoaderConfig{}, 1, f);
  const std::string gm = grid_report(g);
  EXPECT_NE(gm.find("| blocked | patch_size | mean MB/s | std MB/s | best |"), std::string::npos);
}

TEST(GridReport, MarksColumnAndOverallBestFromCsv) {
  const std::string csv =
      "num_workers,num_threads,mean_mbps,std_mbps,reps,valid,best_in_column,best_overall\n"
      "1,1,10.000,1.000,5,true,,\n"
      "1,2,30.000,2.000,5,true,best,best\n"
      "2,1,20.000,0.500,5,true,best,\n"
      "2,2,0.000,0.000,4,false,,\n";
  const std::string md = grid_csv_report(csv);
  EXPECT_NE(md.find("| 1 | 2 | 30.0 | 2.0 | best overall |"), std::string::npos) << md;
  EXPECT_NE(md.find("| 2 | 1 | 20.0 | 0.5 | best |"), std::string::npos) << md;
  EXPECT_NE(md.find("| 1 | 1 | 10.0 | 1.0 |  |"), std::string::npos) << md;
  EXPECT_NE(md.find("| 2 | 2 | failed |"), std::string::npos) << md;
  EXPECT_COG_ERROR(grid_csv_report("a,b\n1,2\n"), ErrorCode::InvalidArgument);
  EXPECT_COG_ERROR(grid_csv_report(csv + "3,3\n"), ErrorCode::InvalidArgument);
}

}  // namespace
}  // namespace cogstream
