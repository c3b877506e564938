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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "cogstream/error.hpp"

namespace cogstream {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double unit_double(SamplerRng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t sample_categorical(const std::vector<double>& weights, SamplerRng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = unit_double(rng) * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<const Observation*> valid_observations(const Study& study) {
  std::vector<const Observation*> out;
  for (const auto& o : study.observations) {
    if (o.valid && std::isfinite(o.objective)) out.push_back(&o);
  }
  return out;
}

}  // namespace

// --- Space -----------------------------------------------------------------------

std::string_view param_name(Param p) noexcept {
  switch (p) {
    case Param::Compression: return "compression";
    case Param::PatchSize: return "patch_size";
    case Param::NumWorkers: return "num_workers";
    case Param::NumThreads: return "num_threads";
    case Param::Blocked: return "blocked";
    case Param::Prefetch: return "prefetch_factor";
  }
  return "?";
}

std::optional<Param> parse_param(std::string_view name) noexcept {
  for (Param p : kAllParams) {
    if (name == param_name(p)) return p;
  }
  if (name == "patch") return Param::PatchSize;
  if (name == "workers") return Param::NumWorkers;
  if (name == "threads") return Param::NumThreads;
  if (name == "prefetch") return Param::Prefetch;
  return std::nullopt;
}

SearchSpace SearchSpace::full() {
  SearchSpace s;
  s.compression.assign(kAllVariants.begin(), kAllVariants.end());
  s.patch_size.assign(domain::kPatchSizes.begin(), domain::kPatchSizes.end());
  s.num_workers.assign(domain::kWorkers.begin(), domain::kWorkers.end());
  s.num_threads.assign(domain::kThreads.begin(), domain::kThreads.end());
  s.blocked = {false, true};
  s.prefetch_factor.assign(domain::kPrefetch.begin(), domain::kPrefetch.end());
  return s;
}

std::size_t SearchSpace::domain_size(Param p) const {
  switch (p) {
    case Param::Compression: return compression.size();
    case Param::PatchSize: return patch_size.size();
    case Param::NumWorkers: return num_workers.size();
    case Param::NumThreads: return num_threads.size();
    case Param::Blocked: return blocked.size();
    case Param::Prefetch: return prefetch_factor.size();
  }
  return 0;
}

void SearchSpace::validate() const {
  for (Param p : kAllParams) {
    if (domain_size(p) == 0) {
      throw Error(ErrorCode::EmptySpace,
                  "search space has no values for " + std::string(param_name(p)));
    }
  }
}

std::size_t SearchSpace::size() const {
  std::size_t n = 1;
  for (Param p : kAllParams) n *= domain_size(p);
  return n;
}

LoaderConfig SearchSpace::config(const Point& point, const LoaderConfig& base) const {
  LoaderConfig c = base;
  c.compression = compression.at(point[0]);
  c.patch_size = patch_size.at(point[1]);
  c.num_workers = num_workers.at(point[2]);
  c.num_threads = num_threads.at(point[3]);
  c.blocked = blocked.at(point[4]);
  c.prefetch_factor = prefetch_factor.at(point[5]);
  return c;
}

std::optional<Point> SearchSpace::point(const LoaderConfig& c) const {
  const auto index_of = [](const auto& domain, const auto& value) -> std::optional<std::size_t> {
    const auto it = std::find(domain.begin(), domain.end(), value);
    if (it == domain.end()) return std::nullopt;
    return static_cast<std::size_t>(it - domain.begin());
  };
  const std::array<std::optional<std::size_t>, kParamCount> idx = {
      index_of(compression, c.compression),   index_of(patch_size, c.patch_size),
      index_of(num_workers, c.num_workers),   index_of(num_threads, c.num_threads),
      index_of(blocked, c.blocked),           index_of(prefetch_factor, c.prefetch_factor)};
  Point p{};
  for (std::size_t i = 0; i < kParamCount; ++i) {
    if (!idx[i]) return std::nullopt;
    p[i] = *idx[i];
  }
  return p;
}

std::string SearchSpace::value_text(Param p, std::size_t i) const {
  switch (p) {
    case Param::Compression: return std::string(variant_name(compression.at(i)));
    case Param::PatchSize: return std::to_string(patch_size.at(i));
    case Param::NumWorkers: return std::to_string(num_workers.at(i));
    case Param::NumThreads: return std::to_string(num_threads.at(i));
    case Param::Blocked: return blocked.at(i) ? "true" : "false";
    case Param::Prefetch: return std::to_string(prefetch_factor.at(i));
  }
  return {};
}

Point SearchSpace::uniform_point(SamplerRng& rng) const {
  validate();
  Point p{};
  for (std::size_t i = 0; i < kParamCount; ++i) p[i] = uniform_below(rng, domain_size(kAllParams[i]));
  return p;
}

// --- Study -----------------------------------------------------------------------

std::optional<Observation> Study::best() const {
  std::optional<Observation> best;
  for (const Observation* o : valid_observations(*this)) {
    if (!best || o->objective > best->objective) best = *o;
  }
  return best;
}

std::vector<double> Study::best_trace() const {
  std::vector<double> trace;
  double best = 0.0;
  bool any = false;
  for (const auto& o : observations) {
    if (o.valid && std::isfinite(o.objective) && (!any || o.objective > best)) {
      best = o.objective;
      any = true;
    }
    trace.push_back(any ? best : 0.0);
  }
  return trace;
}

std::size_t tpe_good_count(std::size_t n_valid, double gamma) {
  if (n_valid == 0) return 0;
  const auto n = static_cast<std::size_t>(std::ceil(gamma * static_cast<double>(n_valid) - 1e-12));
  return std::clamp<std::size_t>(n, 1, n_valid);
}

TpeDensities tpe_densities(const Study& study) {
  study.space.validate();
  const auto valid = valid_observations(study);
  const std::size_t n = valid.size();
  const std::size_t n_good = tpe_good_count(n, study.tpe.gamma);

  // Good-set membership per observation.
  std::vector<double> good_weight(n, 0.0);
  std::vector<double> bad_weight(n, 1.0);
  if (n > 0) {
    std::vector<double> losses;
    for (const Observation* o : valid) losses.push_back(-o->objective);
    std::vector<double> sorted = losses;
    std::sort(sorted.begin(), sorted.end());
    const double boundary = sorted[n_good - 1];
    const auto below = static_cast<std::size_t>(
        std::lower_bound(sorted.begin(), sorted.end(), boundary) - sorted.begin());
    const auto tied = static_cast<std::size_t>(
        std::upper_bound(sorted.begin(), sorted.end(), boundary) - sorted.begin()) - below;
    // A tie group that straddles the split says nothing about which of its
    // members is better, so it joins neither set.
    const bool straddles = below + tied > n_good;
    for (std::size_t i = 0; i < n; ++i) {
      if (losses[i] < boundary || (losses[i] == boundary && !straddles)) {
        good_weight[i] = 1.0;
        bad_weight[i] = 0.0;
      } else if (losses[i] == boundary) {
        bad_weight[i] = 0.0;
      }
    }
  }

  // Linear forgetting: within each set, all but the newest `lf` members are
  // ramped down by age, from 1/N for the oldest up to 1.
  const auto age_weights = [lf = study.tpe.linear_forgetting, n](auto in_set) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (in_set(i)) members.push_back(i);
    }
    std::vector<double> w(n, 0.0);
    const std::size_t m = members.size();
    for (std::size_t r = 0; r < m; ++r) {
      double weight = 1.0;
      if (lf > 0 && m > lf && r < m - lf) {
        const std::size_t ramp = m - lf;
        const double lo = 1.0 / static_cast<double>(m);
        weight = ramp == 1 ? lo : lo + (1.0 - lo) * static_cast<double>(r) / static_cast<double>(ramp - 1);
      }
      w[members[r]] = weight;
    }
    return w;
  };
  const auto good_age = age_weights([&](std::size_t i) { return good_weight[i] > 0.0; });
  const auto bad_age = age_weights([&](std::size_t i) { return bad_weight[i] > 0.0; });

  TpeDensities d;
  const double prior = study.tpe.prior_weight;
  for (std::size_t j = 0; j < kParamCount; ++j) {
    const std::size_t k = study.space.domain_size(kAllParams[j]);
    std::vector<double> good(k, prior);
    std::vector<double> bad(k, prior);
    for (std::size_t i = 0; i < n; ++i) {
      const auto point = study.space.point(valid[i]->config);
      if (!point) continue;  // outside this space (e.g. a resumed log)
      good[(*point)[j]] += good_age[i] * good_weight[i];
      bad[(*point)[j]] += bad_age[i] * bad_weight[i];
    }
    const auto normalise = [](std::vector<double>& v) {
      const double total = std::accumulate(v.begin(), v.end(), 0.0);
      for (double& x : v) x /= total;
    };
    normalise(good);
    normalise(bad);
    d.good[j] = std::move(good);
    d.bad[j] = std::move(bad);
  }
  return d;
}

namespace {

SamplerRng suggestion_rng(const Study& study) {
  return SamplerRng(splitmix64(study.seed ^ splitmix64(study.observations.size() + 1)));
}

}  // namespace

LoaderConfig random_suggest(const Study& study) {
  SamplerRng rng = suggestion_rng(study);
  return study.space.config(study.space.uniform_point(rng), study.base);
}

LoaderConfig tpe_suggest(const Study& study) {
  study.space.validate();
  if (study.observations.size() < study.tpe.n_startup || valid_observations(study).empty()) {
    return random_suggest(study);
  }
  const TpeDensities d = tpe_densities(study);
  SamplerRng rng = suggestion_rng(study);
  Point best{};
  double best_score = -std::numeric_limits<double>::infinity();
  const std::uint32_t n_candidates = std::max<std::uint32_t>(1, study.tpe.n_candidates);
  for (std::uint32_t c = 0; c < n_candidates; ++c) {
    Point p{};
    double score = 0.0;
    for (std::size_t j = 0; j < kParamCount; ++j) {
      p[j] = sample_categorical(d.good[j], rng);
      score += std::log(d.good[j][p[j]]) - std::log(d.bad[j][p[j]]);
    }
    if (score > best_score) {
      best_score = score;
      best = p;
    }
  }
  return study.space.config(best, study.base);
}

Objective engine_objective(DatasetCatalog& catalog, EngineOptions options) {
  return [&catalog, options = std::move(options)](const LoaderConfig& config, std::uint64_t seed) {
    return run_trial(config, catalog.get(config.compression), seed, options);
  };
}

Objective model_objective(std::shared_ptr<const ThroughputModel> model) {
  return [model = std::move(model)](const LoaderConfig& config, std::uint64_t seed) {
    return model->simulate_trial(config, seed);
  };
}

std::uint64_t trial_seed(std::uint64_t study_seed, const LoaderConfig& config) {
  return splitmix64(study_seed ^ splitmix64(config.hash()));
}

// --- Persistence -----------------------------------------------------------------

namespace {

nlohmann::json config_json(const LoaderConfig& c) {
  return {{"compression", variant_name(c.compression)},
          {"patch_size", c.patch_size},
          {"num_workers", c.num_workers},
          {"num_threads", c.num_threads},
          {"blocked", c.blocked},
          {"prefetch_factor", c.prefetch_factor},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"patches_per_epoch", c.patches_per_epoch}};
}

LoaderConfig config_from_json(const nlohmann::json& j) {
  LoaderConfig c;
  for (const auto& [key, value] : j.items()) {
    if (value.is_string()) {
      c.set(key, value.get<std::string>());
    } else if (value.is_boolean()) {
      c.set(key, value.get<bool>() ? "true" : "false");
    } else {
      c.set(key, std::to_string(value.get<std::uint64_t>()));
    }
  }
  c.validate();
  return c;
}

}  // namespace

std::string observation_json(const Observation& obs, const Study& study) {
  nlohmann::json j = {{"schema_version", kStudyLogSchemaVersion},
                      {"study_seed", study.seed},
                      {"strategy", study.strategy == SearchStrategy::Tpe ? "tpe" : "random"},
                      {"trial_index", obs.trial_index},
                      {"seed", obs.seed},
                      {"config_hash", obs.config.hash_hex()},
                      {"config", config_json(obs.config)},
                      {"objective", obs.valid ? obs.objective : 0.0},
                      {"objective_std", obs.valid ? obs.objective_std : 0.0},
                      {"valid", obs.valid}};
  if (!obs.valid) j["error"] = obs.error;
  return j.dump();
}

std::vector<Observation> load_observations(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot read study log " + path.string());
  std::vector<Observation> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.at("schema_version").get<int>() != kStudyLogSchemaVersion) {
        throw Error(ErrorCode::InvalidArgument, "unsupported schema_version");
      }
      Observation o;
      o.config = config_from_json(j.at("config"));
      o.trial_index = j.at("trial_index").get<std::uint32_t>();
      o.seed = j.at("seed").get<std::uint64_t>();
      o.objective = j.at("objective").get<double>();
      o.objective_std = j.value("objective_std", 0.0);
      o.valid = j.at("valid").get<bool>();
      o.error = j.value("error", std::string());
      out.push_back(std::move(o));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidArgument,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidArgument,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

Study run_study(const SearchSpace& space, const Objective& objective, std::uint32_t n_trials,
                std::uint64_t seed, const StudyOptions& options) {
  space.validate();
  Study study;
  study.space = space;
  study.base = options.base;
  study.seed = seed;
  study.strategy = options.strategy;
  study.tpe = options.tpe;

  if (options.log_path && std::filesystem::exists(*options.log_path)) {
    study.observations = load_observations(*options.log_path);
    if (study.observations.size() > n_trials) study.observations.resize(n_trials);
  }
  std::ofstream log;
  if (options.log_path) {
    log.open(*options.log_path, std::ios::app);
    if (!log) throw Error(ErrorCode::Io, "cannot append to " + options.log_path->string());
  }

  while (study.observations.size() < n_trials) {
    Observation obs;
    obs.config = study.strategy == SearchStrategy::Tpe ? tpe_suggest(study) : random_suggest(study);
    obs.trial_index = static_cast<std::uint32_t>(study.observations.size());
    obs.seed = trial_seed(seed, obs.config);
    try {
      const TrialResult r = objective(obs.config, obs.seed);
      obs.valid = r.valid && std::isfinite(r.mean_mbps);
      obs.objective = r.mean_mbps;
      obs.objective_std = r.std_mbps;
      if (!r.valid) obs.error = r.error;
    } catch (const std::exception& e) {
      obs.valid = false;
      obs.error = e.what();
    }
    if (!obs.valid) obs.objective = 0.0;
    study.observations.push_back(obs);
    if (log.is_open()) {
      log << observation_json(obs, study) << '\n';
      log.flush();
    }
    if (options.on_trial) options.on_trial(obs);
  }
  return study;
}

// --- Grid ----------------------------------------------------------------------

namespace {

void set_param(LoaderConfig& c, Param p, const SearchSpace& space, std::size_t i) {
  switch (p) {
    case Param::Compression: c.compression = space.compression.at(i); break;
    case Param::PatchSize: c.patch_size = space.patch_size.at(i); break;
    case Param::NumWorkers: c.num_workers = space.num_workers.at(i); break;
    case Param::NumThreads: c.num_threads = space.num_threads.at(i); break;
    case Param::Blocked: c.blocked = space.blocked.at(i); break;
    case Param::Prefetch: c.prefetch_factor = space.prefetch_factor.at(i); break;
  }
}

}  // namespace

GridResult grid_search(Param param_a, Param param_b, const LoaderConfig& fixed, std::uint32_t reps,
                       const Objective& objective, std::uint64_t seed, const SearchSpace& space) {
  if (param_a == param_b) {
    throw Error(ErrorCode::InvalidArgument, "grid axes must differ (both " +
                                                std::string(param_name(param_a)) + ")");
  }
  if (reps == 0) throw Error(ErrorCode::InvalidArgument, "reps must be positive");
  space.validate();
  fixed.validate();
  GridResult g;
  g.param_a = param_a;
  g.param_b = param_b;
  g.fixed = fixed;
  const std::size_t na = space.domain_size(param_a);
  const std::size_t nb = space.domain_size(param_b);
  for (std::size_t a = 0; a < na; ++a) g.values_a.push_back(space.value_text(param_a, a));
  for (std::size_t b = 0; b < nb; ++b) g.values_b.push_back(space.value_text(param_b, b));
  g.cells.assign(na, std::vector<GridCell>(nb));
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t b = 0; b < nb; ++b) {
      LoaderConfig c = fixed;
      set_param(c, param_a, space, a);
      set_param(c, param_b, space, b);
      GridCell& cell = g.cells[a][b];
      for (std::uint32_t r = 0; r < reps && cell.valid; ++r) {
        try {
          const TrialResult t = objective(c, splitmix64(seed ^ splitmix64(r + 1)));
          if (!t.valid) {
            cell.valid = false;
            cell.error = t.error;
          } else {
            cell.samples.push_back(t.mean_mbps);
          }
        } catch (const std::exception& e) {
          cell.valid = false;
          cell.error = e.what();
        }
      }
      std::tie(cell.mean, cell.std) = mean_std(cell.samples);
    }
  }
  return g;
}

std::optional<std::pair<std::size_t, std::size_t>> GridResult::best() const {
  std::optional<std::pair<std::size_t, std::size_t>> best;
  for (std::size_t a = 0; a < cells.size(); ++a) {
    for (std::size_t b = 0; b < cells[a].size(); ++b) {
      if (cells[a][b].valid && (!best || cells[a][b].mean > cells[best->first][best->second].mean)) {
        best = {a, b};
      }
    }
  }
  return best;
}

std::string GridResult::to_csv() const {
  std::ostringstream out;
  out << param_name(param_a) << ',' << param_name(param_b)
      << ",mean_mbps,std_mbps,reps,valid,best_in_column,best_overall\n";
  const auto overall = best();
  for (std::size_t a = 0; a < cells.size(); ++a) {
    for (std::size_t b = 0; b < cells[a].size(); ++b) {
      const GridCell& cell = cells[a][b];
      bool column_best = cell.valid;
      for (std::size_t o = 0; o < cells.size() && column_best; ++o) {
        if (cells[o][b].valid && cells[o][b].mean > cell.mean) column_best = false;
      }
      const bool overall_best = overall && overall->first == a && overall->second == b;
      out << values_a[a] << ',' << values_b[b] << ',' << format_fixed(cell.mean, 3) << ','
          << format_fixed(cell.std, 3) << ',' << cell.samples.size() << ','
          << (cell.valid ? "true" : "false") << ',' << (column_best ? "best" : "") << ','
          << (overall_best ? "best" : "") << '\n';
    }
  }
  return out.str();
}

// --- Importance ------------------------------------------------------------------

namespace {

struct TreeNode {
  int param = -1;  // -1: leaf
  std::size_t value = 0;
  int left = -1;   // x[param] == value
  int right = -1;  // x[param] != value
  double prediction = 0.0;
};

class RegressionTree {
 public:
  RegressionTree(const std::vector<Point>& x, const std::vector<double>& y,
                 const std::array<std::size_t, kParamCount>& domain, const ImportanceParams& params)
      : x_(x), y_(y), domain_(domain), params_(params) {}

  void fit(std::vector<std::size_t> rows) { build(std::move(rows), 0); }

  /// First-order variance shares of this tree under the uniform product
  /// distribution over the space; nullopt when the tree is constant.
  std::optional<std::array<double, kParamCount>> variance_shares() const {
    struct Leaf {
      double value;
      std::array<std::vector<bool>, kParamCount> allowed;
    };
    std::vector<Leaf> leaves;
    Leaf root{0.0, {}};
    for (std::size_t j = 0; j < kParamCount; ++j) root.allowed[j].assign(domain_[j], true);
    collect(0, root, leaves);

    std::vector<std::array<double, kParamCount>> fraction(leaves.size());
    double mean = 0.0;
    double second = 0.0;
    std::vector<double> volume(leaves.size(), 1.0);
    for (std::size_t l = 0; l < leaves.size(); ++l) {
      for (std::size_t j = 0; j < kParamCount; ++j) {
        const auto kept = std::count(leaves[l].allowed[j].begin(), leaves[l].allowed[j].end(), true);
        fraction[l][j] = static_cast<double>(kept) / static_cast<double>(domain_[j]);
        volume[l] *= fraction[l][j];
      }
      mean += leaves[l].value * volume[l];
      second += leaves[l].value * leaves[l].value * volume[l];
    }
    const double total = second - mean * mean;
    if (!(total > 1e-12 * std::max(1.0, mean * mean))) return std::nullopt;

    std::array<double, kParamCount> shares{};
    for (std::size_t j = 0; j < kParamCount; ++j) {
      double sum_sq = 0.0;
      for (std::size_t v = 0; v < domain_[j]; ++v) {
        double marginal = 0.0;
        for (std::size_t l = 0; l < leaves.size(); ++l) {
          if (!leaves[l].allowed[j][v]) continue;
          marginal += leaves[l].value * volume[l] / fraction[l][j];
        }
        sum_sq += marginal * marginal;
      }
      const double vj = sum_sq / static_cast<double>(domain_[j]) - mean * mean;
      shares[j] = std::max(0.0, vj) / total;
    }
    return shares;
  }

 private:
  int build(std::vector<std::size_t> rows, std::uint32_t depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    double sum = 0.0;
    for (auto r : rows) sum += y_[r];
    const double n = static_cast<double>(rows.size());
    nodes_[id].prediction = sum / n;
    if (depth >= params_.max_depth || rows.size() < 2 * std::max<std::uint32_t>(1, params_.min_samples_leaf)) {
      return id;
    }
    double sse = 0.0;
    for (auto r : rows) sse += (y_[r] - nodes_[id].prediction) * (y_[r] - nodes_[id].prediction);
    if (sse <= 1e-12 * std::max(1.0, nodes_[id].prediction * nodes_[id].prediction) * n) return id;

    // Best one-hot split by sum of squares: maximise S_l^2/n_l + S_r^2/n_r.
    double best_gain = 0.0;
    int best_param = -1;
    std::size_t best_value = 0;
    const double base = sum * sum / n;
    for (std::size_t j = 0; j < kParamCount; ++j) {
      std::vector<double> s(domain_[j], 0.0);
      std::vector<std::size_t> c(domain_[j], 0);
      for (auto r : rows) {
        s[x_[r][j]] += y_[r];
        ++c[x_[r][j]];
      }
      for (std::size_t v = 0; v < domain_[j]; ++v) {
        const std::size_t nl = c[v];
        const std::size_t nr = rows.size() - nl;
        if (nl < params_.min_samples_leaf || nr < params_.min_samples_leaf || nl == 0 || nr == 0) continue;
        const double sl = s[v];
        const double sr = sum - sl;
        const double gain = sl * sl / static_cast<double>(nl) + sr * sr / static_cast<double>(nr) - base;
        if (gain > best_gain * (1 + 1e-12) + 1e-12 * sse) {
          best_gain = gain;
          best_param = static_cast<int>(j);
          best_value = v;
        }
      }
    }
    if (best_param < 0) return id;
    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (auto r : rows) (x_[r][best_param] == best_value ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = build(std::move(left), depth + 1);
    const int r = build(std::move(right), depth + 1);
    nodes_[id].param = best_param;
    nodes_[id].value = best_value;
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  template <typename Leaf>
  void collect(int id, Leaf region, std::vector<Leaf>& out) const {
    const TreeNode& node = nodes_[id];
    if (node.param < 0) {
      region.value = node.prediction;
      out.push_back(std::move(region));
      return;
    }
    Leaf left = region;
    for (std::size_t v = 0; v < domain_[node.param]; ++v) {
      if (v != node.value) left.allowed[node.param][v] = false;
    }
    if (std::find(left.allowed[node.param].begin(), left.allowed[node.param].end(), true) !=
        left.allowed[node.param].end()) {
      collect(node.left, std::move(left), out);
    }
    region.allowed[node.param][node.value] = false;
    if (std::find(region.allowed[node.param].begin(), region.allowed[node.param].end(), true) !=
        region.allowed[node.param].end()) {
      collect(node.right, std::move(region), out);
    }
  }

  const std::vector<Point>& x_;
  const std::vector<double>& y_;
  std::array<std::size_t, kParamCount> domain_;
  ImportanceParams params_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

std::vector<ParamImportance> importance(const Study& study, const ImportanceParams& params) {
  study.space.validate();
  std::vector<Point> x;
  std::vector<double> y;
  for (const Observation* o : valid_observations(study)) {
    if (const auto p = study.space.point(o->config)) {
      x.push_back(*p);
      y.push_back(o->objective);
    }
  }
  constexpr std::size_t kMinObservations = 30;
  if (x.size() < kMinObservations) {
    throw Error(ErrorCode::InsufficientData,
                "importance needs at least 30 valid observations, got " + std::to_string(x.size()));
  }
  std::array<std::size_t, kParamCount> domain{};
  for (std::size_t j = 0; j < kParamCount; ++j) domain[j] = study.space.domain_size(kAllParams[j]);

  SamplerRng rng(splitmix64(params.seed));
  std::array<double, kParamCount> acc{};
  std::size_t counted = 0;
  for (std::uint32_t t = 0; t < std::max<std::uint32_t>(1, params.n_trees); ++t) {
    std::vector<std::size_t> rows(x.size());
    for (auto& r : rows) r = uniform_below(rng, x.size());
    RegressionTree tree(x, y, domain, params);
    tree.fit(std::move(rows));
    if (const auto shares = tree.variance_shares()) {
      for (std::size_t j = 0; j < kParamCount; ++j) acc[j] += (*shares)[j];
      ++counted;
    }
  }
  const double total = std::accumulate(acc.begin(), acc.end(), 0.0);
  std::vector<ParamImportance> out;
  for (std::size_t j = 0; j < kParamCount; ++j) {
    // Nothing to attribute: spread evenly rather than invent a ranking.
    const double pct = (counted == 0 || total <= 0.0) ? 100.0 / kParamCount : 100.0 * acc[j] / total;
    out.push_back({kAllParams[j], pct});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ParamImportance& a, const ParamImportance& b) { return a.percent > b.percent; });
  return out;
}

// --- Reports -----------------------------------------------------------------------

namespace {

std::string config_cells(const LoaderConfig& c) {
  return std::string(variant_name(c.compression)) + " | " + std::to_string(c.patch_size) + " | " +
         std::to_string(c.num_workers) + " | " + std::to_string(c.num_threads) + " | " +
         (c.blocked ? "true" : "false") + " | " + std::to_string(c.prefetch_factor);
}

}  // namespace

std::string study_report(const Study& study, std::size_t top_n,
                         const std::optional<Observation>& baseline) {
  std::ostringstream out;
  const auto valid = valid_observations(study);
  out << "## Best configurations\n\n";
  out << valid.size() << " valid of " << study.observations.size() << " trials.\n\n";
  out << "| rank | trial | compression | patch_size | num_workers | num_threads | blocked | "
         "prefetch_factor | mean MB/s | std MB/s |";
  if (baseline) out << " vs baseline |";
  out << "\n|---|---|---|---|---|---|---|---|---|---|";
  if (baseline) out << "---|";
  out << "\n";
  if (baseline) {
    out << "| baseline | - | " << config_cells(baseline->config) << " | "
        << format_fixed(baseline->objective, 1) << " | " << format_fixed(baseline->objective_std, 1)
        << " | 1.0x |\n";
  }
  std::vector<const Observation*> ranked = valid;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Observation* a, const Observation* b) { return a->objective > b->objective; });
  for (std::size_t i = 0; i < std::min(top_n, ranked.size()); ++i) {
    const Observation& o = *ranked[i];
    out << "| " << i + 1 << " | " << o.trial_index << " | " << config_cells(o.config) << " | "
        << format_fixed(o.objective, 1) << " | " << format_fixed(o.objective_std, 1) << " |";
    if (baseline) {
      out << ' '
          << (baseline->objective > 0 ? format_fixed(o.objective / baseline->objective, 1) + "x" : "-")
          << " |";
    }
    out << "\n";
  }
  try {
    const auto imp = importance(study);
    out << "\n## Parameter importance\n\n| parameter | importance (%) |\n|---|---|\n";
    for (const auto& p : imp) out << "| " << param_name(p.param) << " | " << format_fixed(p.percent, 1) << " |\n";
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InsufficientData) throw;
    out << "\nParameter importance needs at least 30 valid trials.\n";
  }
  return out.str();
}

std::string grid_report(const GridResult& grid) { return grid_csv_report(grid.to_csv()); }

std::string grid_csv_report(std::string_view csv) {
  auto split = [](std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.emplace_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return fields;
  };
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    std::size_t eol = csv.find('\n', pos);
    if (eol == std::string_view::npos) eol = csv.size();
    std::string_view line = csv.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) rows.push_back(split(line));
    pos = eol + 1;
  }
  constexpr std::size_t kColumns = 8;
  if (rows.empty() || rows.front().size() != kColumns || rows.front()[2] != "mean_mbps") {
    throw Error(ErrorCode::InvalidArgument, "not a grid CSV (expected header a,b,mean_mbps,...)");
  }
  const auto& header = rows.front();
  std::ostringstream out;
  out << "## " << header[0] << " x " << header[1] << "\n\n";
  out << "| " << header[0] << " | " << header[1]
      << " | mean MB/s | std MB/s | best |\n|---|---|---|---|---|\n";
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    if (f.size() != kColumns) {
      throw Error(ErrorCode::InvalidArgument, "grid CSV row " + std::to_string(r + 1) + " has " +
                                                  std::to_string(f.size()) + " fields");
    }
    double mean = 0.0;
    double sd = 0.0;
    try {
      mean = std::stod(f[2]);
      sd = std::stod(f[3]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "grid CSV row " + std::to_string(r + 1) + ": bad number");
    }
    std::string marker = f[7] == "best" ? "best overall" : (f[6] == "best" ? "best" : "");
    out << "| " << f[0] << " | " << f[1] << " | " << (f[5] == "true" ? format_fixed(mean, 1) : "failed")
        << " | " << format_fixed(sd, 1) << " | " << marker << " |\n";
  }
  return out.str();
}

}  // namespace cogstream
