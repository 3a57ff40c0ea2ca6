#include "dreval/shift.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "dreval/core.hpp"
#include "dreval/error.hpp"
#include "dreval/estimators.hpp"
#include "dreval/numeric.hpp"
#include "dreval/reward_models.hpp"
#include "dreval/text.hpp"

namespace dreval {

namespace {

constexpr double power_tolerance = 1e-8;
constexpr std::size_t power_max_iterations = 500000;

void normalize_sign(std::vector<double>& v) {
  std::size_t big = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[big])) big = i;
  if (v[big] < 0.0)
    for (double& x : v) x = -x;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace

std::vector<double> principal_axis_of_covariance(std::span<const double> cov, std::size_t d) {
  require(d >= 1 && cov.size() == d * d, "principal axis: covariance must be d x d");
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) trace += cov[i * d + i];
  if (!(trace > 0.0)) fail(ErrorCode::degenerate_distribution, "principal axis: data has zero variance");

  std::vector<double> v(d), next(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = 1.0 / std::sqrt(static_cast<double>(i) + 2.0);
  const double n0 = norm2(v);
  for (double& x : v) x /= n0;

  auto multiply = [&](const std::vector<double>& in, std::vector<double>& out) {
    for (std::size_t i = 0; i < d; ++i) out[i] = dot(cov.subspan(i * d, d), in);
  };
  for (std::size_t it = 0; it < power_max_iterations; ++it) {
    multiply(v, next);
    const double eigenvalue = dot(v, next);
    double residual = 0.0;
    for (std::size_t i = 0; i < d; ++i) residual += (next[i] - eigenvalue * v[i]) * (next[i] - eigenvalue * v[i]);
    const double nn = norm2(next);
    if (!(nn > 0.0)) {
      // the start vector lies in the null space; restart along a coordinate axis
      std::fill(v.begin(), v.end(), 0.0);
      v[it % d] = 1.0;
      continue;
    }
    if (std::sqrt(residual) <= power_tolerance * std::abs(eigenvalue)) break;
    for (std::size_t i = 0; i < d; ++i) v[i] = next[i] / nn;
  }
  normalize_sign(v);
  return v;
}

std::vector<double> first_principal_component(std::span<const double> rows, std::size_t d) {
  require(d >= 1 && rows.size() % d == 0, "first_principal_component: row data does not match the dimension");
  const std::size_t n = rows.size() / d;
  if (n < 2) fail(ErrorCode::degenerate_distribution, "first_principal_component: need at least 2 rows");
  std::vector<double> mean(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    CompensatedSum s;
    for (std::size_t i = 0; i < n; ++i) s.add(rows[i * d + j]);
    mean[j] = s.value() / static_cast<double>(n);
  }
  std::vector<double> cov(d * d, 0.0);
  std::vector<double> centred(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) centred[j] = rows[i * d + j] - mean[j];
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = a; b < d; ++b) cov[a * d + b] += centred[a] * centred[b];
  }
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      cov[a * d + b] /= static_cast<double>(n);
      cov[b * d + a] = cov[a * d + b];
    }
  return principal_axis_of_covariance(cov, d);
}

std::vector<double> sampling_probabilities(std::span<const double> projections, SamplingLaw law) {
  require(!projections.empty(), "sampling_probabilities: no projections");
  for (double p : projections) require(std::isfinite(p), "sampling_probabilities: projections must be finite");
  const double m = *std::min_element(projections.begin(), projections.end());
  const double mbar = compensated_mean(projections);
  if (!(mbar > m))
    fail(ErrorCode::degenerate_distribution, "sampling_probabilities: all projections are equal (mean == minimum)");
  const double mu = m + (mbar - m) / 3.0;
  const double sigma = (mbar - m) / 4.0;
  std::vector<double> out;
  out.reserve(projections.size());
  for (double x : projections) {
    const double z = (x - mu) / sigma;
    double p;
    if (law == SamplingLaw::density)
      p = std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
    else
      p = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    out.push_back(std::max(std::min(p, 1.0), sampling_probability_floor));
  }
  return out;
}

void ShiftConfig::validate() const {
  require(population_size >= 2, "shift config: population_size must be >= 2");
  require(feature_dimension >= 1, "shift config: feature_dimension must be >= 1");
  require(core_features <= feature_dimension, "shift config: more core features than features");
  require(linked_interest_features <= feature_dimension - core_features,
          "shift config: more linked features than interest features");
  require(sparsity >= 0.0 && std::isfinite(sparsity), "shift config: sparsity must be >= 0");
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  require(prob(inactive_fraction) && prob(core_rate_active) && prob(core_rate_inactive) &&
              prob(interest_rate_min) && prob(interest_rate_max) && interest_rate_min <= interest_rate_max,
          "shift config: activation rates must lie in [0,1]");
  require(interest_coefficient_min <= interest_coefficient_max, "shift config: coefficient range is empty");
  require(!fractions.empty(), "shift config: no fractions");
  for (double f : fractions) require(f > 0.0 && f <= 1.0, "shift config: fractions must lie in (0,1]");
  require(replicates >= 1, "shift config: replicates must be >= 1");
  require(ridge_lambda > 0.0 && std::isfinite(ridge_lambda), "shift config: ridge_lambda must be positive");
}

double ShiftPopulation::mean_visits() const {
  CompensatedSum s;
  for (const auto& u : units) s.add(u.visits);
  return units.empty() ? 0.0 : s.value() / static_cast<double>(units.size());
}

VisitMoments visit_moments(const VisitLink& link) {
  // E[exp(t * log-rate)] for t = 1, 2; features are independent given the
  // unit's core state.
  auto moment = [&](double t) {
    double core_active = 1.0, core_inactive = 1.0;
    for (std::size_t j = 0; j < link.core_features; ++j) {
      const double g = std::exp(t * link.coefficients[j]);
      core_active *= 1.0 - link.core_rate_active + link.core_rate_active * g;
      core_inactive *= 1.0 - link.core_rate_inactive + link.core_rate_inactive * g;
    }
    double rest = 1.0;
    for (std::size_t j = link.core_features; j < link.coefficients.size(); ++j) {
      const double q = link.interest_rates[j - link.core_features];
      rest *= 1.0 - q + q * std::exp(t * link.coefficients[j]);
    }
    const double core = link.inactive_fraction * core_inactive + (1.0 - link.inactive_fraction) * core_active;
    return std::exp(t * link.intercept) * core * rest;
  };
  VisitMoments m;
  m.mean = moment(1.0);
  // Poisson given the rate: Var = E[rate] + Var[rate]
  m.variance = m.mean + moment(2.0) - m.mean * m.mean;
  return m;
}

ShiftPopulation synth_population(const ShiftConfig& config) {
  config.validate();
  const std::size_t d = config.feature_dimension;
  const std::size_t core = config.core_features;
  const std::size_t interest = d - core;
  auto scaled = [&](double p) { return std::min(1.0, p * config.sparsity); };

  VisitLink link;
  link.intercept = config.log_rate_intercept;
  link.core_features = core;
  link.inactive_fraction = config.inactive_fraction;
  link.core_rate_active = scaled(config.core_rate_active);
  link.core_rate_inactive = scaled(config.core_rate_inactive);
  link.coefficients.assign(d, 0.0);
  {
    Rng rng(config.seed, "shift-link");
    for (std::size_t j = 0; j < interest; ++j)
      link.interest_rates.push_back(scaled(rng.uniform(config.interest_rate_min, config.interest_rate_max)));
    for (std::size_t j = 0; j < core; ++j) link.coefficients[j] = config.core_coefficient;
    std::vector<std::size_t> pick(interest);
    std::iota(pick.begin(), pick.end(), core);
    rng.shuffle(std::span<std::size_t>(pick));
    for (std::size_t j = 0; j < config.linked_interest_features; ++j)
      link.coefficients[pick[j]] = rng.uniform(config.interest_coefficient_min, config.interest_coefficient_max);
  }

  ShiftPopulation pop;
  pop.dimension = d;
  pop.units.resize(config.population_size);
  Rng rng(config.seed, "shift-units");
  for (auto& unit : pop.units) {
    const bool inactive = rng.bernoulli(link.inactive_fraction);
    const double core_rate = inactive ? link.core_rate_inactive : link.core_rate_active;
    double log_rate = link.intercept;
    for (std::size_t j = 0; j < d; ++j) {
      const double q = j < core ? core_rate : link.interest_rates[j - core];
      if (rng.bernoulli(q)) {
        unit.features.push_back(j);
        log_rate += link.coefficients[j];
      }
    }
    unit.visits = static_cast<double>(rng.poisson(std::exp(log_rate)));
  }
  pop.link = std::move(link);
  compute_sampling(pop, config.law);
  return pop;
}

void compute_projections(ShiftPopulation& pop) {
  const std::size_t d = pop.dimension;
  const std::size_t n = pop.units.size();
  if (n < 2) fail(ErrorCode::degenerate_distribution, "shift population: need at least 2 units");
  // Covariance of sparse binary rows without densifying them.
  std::vector<double> counts(d, 0.0), co(d * d, 0.0);
  for (const auto& u : pop.units)
    for (std::size_t a : u.features) {
      counts[a] += 1.0;
      for (std::size_t b : u.features)
        if (b >= a) co[a * d + b] += 1.0;
    }
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> cov(d * d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      cov[a * d + b] = co[a * d + b] * inv_n - counts[a] * inv_n * counts[b] * inv_n;
      cov[b * d + a] = cov[a * d + b];
    }
  pop.principal_axis = principal_axis_of_covariance(cov, d);
  pop.projections.clear();
  for (const auto& u : pop.units) {
    double s = 0.0;
    for (std::size_t j : u.features) s += pop.principal_axis[j];
    pop.projections.push_back(s);
  }
}

void compute_sampling(ShiftPopulation& pop, SamplingLaw law) {
  compute_projections(pop);
  pop.sampling_probs = sampling_probabilities(pop.projections, law);
}

ShiftOutcome shift_experiment(const ShiftPopulation& pop, double fraction, double ridge_lambda, Rng& rng) {
  require(fraction > 0.0 && fraction <= 1.0, "shift_experiment: fraction must lie in (0,1]");
  require(ridge_lambda > 0.0, "shift_experiment: ridge lambda must be positive");
  const std::size_t total = pop.units.size();
  require(pop.sampling_probs.size() == total, "shift_experiment: population has no sampling probabilities");
  const double target = fraction * static_cast<double>(total);
  const double nearest = std::round(target);
  std::size_t n = static_cast<std::size_t>(std::abs(target - nearest) <= 1e-9 * std::max(1.0, target)
                                               ? nearest
                                               : std::ceil(target));
  n = std::min(n, total);
  if (n == 0) fail(ErrorCode::invalid_input, "shift_experiment: empty subsample");

  std::vector<std::size_t> index(total);
  std::iota(index.begin(), index.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) std::swap(index[i], index[i + rng.index(total - i)]);
  index.resize(n);

  const std::size_t d = pop.dimension;
  const std::size_t dim = d + 1;  // trailing intercept
  std::vector<bool> observed(n);
  RidgeAccumulator acc(dim);
  ShiftOutcome out;
  out.sample_size = n;
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& u = pop.units[index[i]];
    observed[i] = rng.bernoulli(pop.sampling_probs[index[i]]);
    if (!observed[i]) continue;
    ++out.observed;
    active.assign(u.features.begin(), u.features.end());
    active.push_back(d);
    acc.add_binary(active, u.visits);
  }

  // Two actions: 1 = observe, 0 = miss. The target policy always observes.
  PayoffModel model{WeightMatrix(2, dim, 0.0), ridge_lambda};
  const auto w = acc.solve(ridge_lambda);
  std::copy(w.begin(), w.end(), model.weights.row(1).begin());
  Policy always_observe{WeightMatrix(2, dim, 0.0)};
  always_observe.weights(1, d) = 1.0;

  CompensatedSum ips, dr, truth;
  Context x(dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& u = pop.units[index[i]];
    std::fill(x.begin(), x.end(), 0.0);
    for (std::size_t j : u.features) x[j] = 1.0;
    x[d] = 1.0;
    const double p = pop.sampling_probs[index[i]];
    const LoggedRecord rec{x, observed[i] ? Action{1} : Action{0}, observed[i] ? u.visits : 0.0,
                           observed[i] ? p : 1.0 - p};
    ips.add(ips_term(rec, always_observe));
    dr.add(dr_term(rec, model, always_observe));
    truth.add(u.visits);
  }
  const double inv = 1.0 / static_cast<double>(n);
  out.ips = ips.value() * inv;
  out.dr = dr.value() * inv;
  out.truth = truth.value() * inv;
  return out;
}

std::string format_population_csv(const ShiftPopulation& pop) {
  require(pop.sampling_probs.size() == pop.units.size(), "population export: missing sampling probabilities");
  std::ostringstream os;
  os << "# dreval-population v1 dimension=" << pop.dimension << " units=" << pop.units.size() << "\n";
  os << "unit,features,visits,probability\n";
  for (std::size_t i = 0; i < pop.units.size(); ++i) {
    os << i << ',';
    const auto& f = pop.units[i].features;
    for (std::size_t j = 0; j < f.size(); ++j) os << (j ? " " : "") << f[j];
    os << ',' << format_double(pop.units[i].visits) << ',' << format_double(pop.sampling_probs[i]) << '\n';
  }
  return os.str();
}

void save_population_csv(const ShiftPopulation& pop, const std::filesystem::path& path) {
  const std::string text = format_population_csv(pop);
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::io_error, "cannot write population file " + path.string());
  f << text;
  if (!f) fail(ErrorCode::io_error, "error writing population file " + path.string());
}

ShiftPopulation parse_population_csv(std::string_view text, const std::string& source) {
  ShiftPopulation pop;
  std::size_t declared_units = 0;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t start = 0;
  auto bad = [&](const std::string& msg) {
    fail(ErrorCode::parse_error, source + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    start = end == std::string_view::npos ? text.size() : end + 1;
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (!have_header) {
      const auto tok = split_whitespace(line);
      if (tok.size() < 5 || tok[0] != "#" || tok[1] != "dreval-population" || tok[2] != "v1")
        bad("expected '# dreval-population v1 dimension=D units=N'");
      for (std::size_t t = 3; t < tok.size(); ++t) {
        const auto kv = split(tok[t], '=');
        if (kv.size() != 2) bad("malformed header field '" + std::string(tok[t]) + "'");
        const auto v = parse_unsigned(kv[1]);
        if (!v) bad("malformed header value '" + std::string(tok[t]) + "'");
        if (kv[0] == "dimension")
          pop.dimension = *v;
        else if (kv[0] == "units")
          declared_units = *v;
      }
      if (pop.dimension == 0) bad("header lacks a positive dimension");
      have_header = true;
      continue;
    }
    if (line.front() == '#' || line == "unit,features,visits,probability") continue;
    const auto cols = split(line, ',');
    if (cols.size() != 4) bad("expected 4 columns, found " + std::to_string(cols.size()));
    const auto id = parse_unsigned(cols[0]);
    if (!id || *id != pop.units.size()) bad("unit ids must run 0,1,2,... in order");
    ShiftUnit unit;
    for (auto tok : split_whitespace(cols[1])) {
      const auto j = parse_unsigned(tok);
      if (!j || *j >= pop.dimension) bad("feature index '" + std::string(tok) + "' out of range");
      if (!unit.features.empty() && *j <= unit.features.back()) bad("feature indices must be strictly increasing");
      unit.features.push_back(*j);
    }
    const auto visits = parse_double(cols[2]);
    if (!visits || !(*visits >= 0.0) || !std::isfinite(*visits)) bad("visits must be a nonnegative number");
    const auto p = parse_double(cols[3]);
    if (!p || !(*p > 0.0 && *p <= 1.0)) bad("probability must lie in (0,1]");
    unit.visits = *visits;
    pop.units.push_back(std::move(unit));
    pop.sampling_probs.push_back(*p);
  }
  if (!have_header) fail(ErrorCode::parse_error, source + ": empty population file");
  if (declared_units != pop.units.size())
    fail(ErrorCode::parse_error, source + ": header declares " + std::to_string(declared_units) + " units, found " +
                                     std::to_string(pop.units.size()));
  // The axis is recovered for reference; the stored probabilities are what count.
  try {
    compute_projections(pop);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::degenerate_distribution) throw;
    pop.principal_axis.clear();
    pop.projections.clear();
  }
  return pop;
}

ShiftPopulation load_population_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::io_error, "cannot open population file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_population_csv(ss.str(), path.string());
}

}  // namespace dreval
