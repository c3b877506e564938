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

// Configuration search: TPE and uniform random studies, two-parameter grid
// sweeps, and forest-surrogate parameter importance.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cogstream/config.hpp"
#include "cogstream/model.hpp"
#include "cogstream/pipeline.hpp"
#include "cogstream/sampler.hpp"

namespace cogstream {

/// The searchable loader parameters, in a fixed order.
enum class Param : std::uint8_t { Compression, PatchSize, NumWorkers, NumThreads, Blocked, Prefetch };

inline constexpr std::size_t kParamCount = 6;
inline constexpr std::array<Param, kParamCount> kAllParams = {
    Param::Compression, Param::PatchSize, Param::NumWorkers,
    Param::NumThreads,  Param::Blocked,   Param::Prefetch};

/// Config key of a parameter ("num_workers", ...).
std::string_view param_name(Param p) noexcept;
/// Accepts config keys and the short forms compression|patch|workers|threads|blocked|prefetch.
std::optional<Param> parse_param(std::string_view name) noexcept;

/// A point of the space as one domain index per parameter.
using Point = std::array<std::size_t, kParamCount>;

/// Finite domains per parameter.
struct SearchSpace {
  std::vector<Variant> compression;
  std::vector<std::uint32_t> patch_size;
  std::vector<std::uint32_t> num_workers;
  std::vector<std::uint32_t> num_threads;
  std::vector<bool> blocked;
  std::vector<std::uint32_t> prefetch_factor;

  /// Every value the loader accepts: 6 x 4 x 7 x 6 x 2 x 5 = 10080 points.
  static SearchSpace full();

  /// Throws EmptySpace if any domain is empty.
  void validate() const;
  std::size_t domain_size(Param p) const;
  std::size_t size() const;

  /// Applies `point` on top of `base` (which supplies batch size, epochs and
  /// patches per epoch).
  LoaderConfig config(const Point& point, const LoaderConfig& base) const;
  /// Inverse of config(); nullopt when a value lies outside this space.
  std::optional<Point> point(const LoaderConfig& config) const;
  std::string value_text(Param p, std::size_t index) const;

  Point uniform_point(SamplerRng& rng) const;
};

struct Observation {
  LoaderConfig config;
  double objective = 0.0;  // mean MB/s, maximised
  double objective_std = 0.0;
  std::uint32_t trial_index = 0;
  std::uint64_t seed = 0;
  bool valid = true;
  std::string error;
};

enum class SearchStrategy : std::uint8_t { Tpe, Random };

struct TpeParams {
  double gamma = 0.25;
  std::uint32_t n_startup = 10;
  std::uint32_t n_candidates = 24;
  double prior_weight = 1.0;
  /// Newest members of each set kept at full weight; older ones ramp down
  /// linearly with age. 0 disables.
  std::uint32_t linear_forgetting = 25;
};

struct Study {
  SearchSpace space = SearchSpace::full();
  LoaderConfig base;  // non-searched fields of every trial
  std::uint64_t seed = 0;
  SearchStrategy strategy = SearchStrategy::Tpe;
  TpeParams tpe;
  std::vector<Observation> observations;

  /// Highest-objective valid observation (earliest on ties).
  std::optional<Observation> best() const;
  /// Best objective after each trial (0 before the first valid one).
  std::vector<double> best_trace() const;
};

/// ceil(gamma * n): size of the good set for n valid observations.
std::size_t tpe_good_count(std::size_t n_valid, double gamma);

/// Categorical densities l (good) and g (bad) per parameter.
struct TpeDensities {
  std::array<std::vector<double>, kParamCount> good;
  std::array<std::vector<double>, kParamCount> bad;
};

/// Builds l and g from the study's valid observations. Objectives are
/// negated and sorted ascending and the first tpe_good_count() form the good
/// set. When the observations tied at the boundary value do not all fit in
/// the good set they are left out of both sets, so ties never depend on trial
/// order (and an all-equal history leaves both densities at the prior).
TpeDensities tpe_densities(const Study& study);

/// Next configuration to try. Uniform during the first n_startup trials;
/// afterwards the best of n_candidates draws from l by sum of log(l/g).
/// Deterministic given the study (its seed and observations).
LoaderConfig tpe_suggest(const Study& study);
LoaderConfig random_suggest(const Study& study);

/// Produces one trial of a configuration. Should not throw; invalid results
/// (or exceptions) are recorded as invalid observations.
using Objective = std::function<TrialResult(const LoaderConfig& config, std::uint64_t seed)>;

/// Measures with the real engine on the catalog's dataset for the
/// configuration's compression variant.
Objective engine_objective(DatasetCatalog& catalog, EngineOptions options = {});
/// Evaluates the virtual-time model instead; fast and fully deterministic.
Objective model_objective(std::shared_ptr<const ThroughputModel> model);

/// Trial seed shared by every study with the same seed, per configuration,
/// so strategies compared under one seed see the same objective values.
std::uint64_t trial_seed(std::uint64_t study_seed, const LoaderConfig& config);

struct StudyOptions {
  LoaderConfig base;
  SearchStrategy strategy = SearchStrategy::Tpe;
  TpeParams tpe;
  /// JSON-lines file, one observation per line. Existing lines are loaded
  /// and the study resumes after them.
  std::optional<std::filesystem::path> log_path;
  std::function<void(const Observation&)> on_trial;
};

/// Runs trials until the study holds n_trials observations.
Study run_study(const SearchSpace& space, const Objective& objective, std::uint32_t n_trials,
                std::uint64_t seed, const StudyOptions& options = {});

inline constexpr int kStudyLogSchemaVersion = 1;
std::string observation_json(const Observation& obs, const Study& study);
/// Reads a study log. Throws Io or InvalidArgument on malformed lines.
std::vector<Observation> load_observations(const std::filesystem::path& path);

// --- Grid search ---------------------------------------------------------------

struct GridCell {
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> samples;
  bool valid = true;
  std::string error;
};

struct GridResult {
  Param param_a = Param::NumWorkers;
  Param param_b = Param::NumThreads;
  LoaderConfig fixed;
  std::vector<std::string> values_a;
  std::vector<std::string> values_b;
  std::vector<std::vector<GridCell>> cells;  // [a][b]

  /// Index of the best valid cell, or nullopt if none is valid.
  std::optional<std::pair<std::size_t, std::size_t>> best() const;
  /// One row per cell: param_a, param_b, mean_mbps, std_mbps, reps, valid,
  /// best_in_column (best over param_a for that param_b value), best_overall.
  std::string to_csv() const;
};

/// Sweeps param_a x param_b with every other parameter pinned by `fixed`.
/// Each cell is reps trials with distinct seeds; a cell whose trial fails is
/// marked invalid and the sweep continues.
GridResult grid_search(Param param_a, Param param_b, const LoaderConfig& fixed, std::uint32_t reps,
                       const Objective& objective, std::uint64_t seed = 0,
                       const SearchSpace& space = SearchSpace::full());

// --- Importance ----------------------------------------------------------------

struct ImportanceParams {
  std::uint32_t n_trees = 64;
  std::uint32_t max_depth = 10;
  std::uint32_t min_samples_leaf = 1;
  std::uint64_t seed = 0;
};

struct ParamImportance {
  Param param;
  double percent;
};

/// First-order functional-ANOVA shares of a bootstrap ensemble of regression
/// trees fit to (configuration, objective). Each tree's marginal variance of
/// every parameter under a uniform distribution over the space is divided by
/// its total variance; shares are averaged over trees and normalised to sum
/// to 100. Sorted by descending share. Throws InsufficientData below 30 valid
/// observations.
std::vector<ParamImportance> importance(const Study& study, const ImportanceParams& params = {});

// --- Reports -------------------------------------------------------------------

/// Markdown: best configurations (with mean ± std MB/s and improvement over
/// `baseline` when given), then importance when there is enough data.
std::string study_report(const Study& study, std::size_t top_n = 5,
                         const std::optional<Observation>& baseline = std::nullopt);
/// Markdown table of a grid; the best column marks each column's best cell
/// ("best") and the overall best ("best overall").
std::string grid_report(const GridResult& grid);
/// The same table rendered from GridResult::to_csv() output. Throws
/// InvalidArgument on anything else.
std::string grid_csv_report(std::string_view csv);

}  // namespace cogstream
