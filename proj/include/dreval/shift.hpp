#pragma once

// Covariate-shift mean estimation on a synthetic population: units with sparse
// binary features and visit counts are observed with a probability that
// depends on their projection onto the first principal axis.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dreval/random.hpp"

namespace dreval {

/// Top eigenvector of the mean-centred covariance of `rows` (N x d, row-major),
/// found by power iteration. Sign fixed so the largest-magnitude entry is positive.
std::vector<double> first_principal_component(std::span<const double> rows, std::size_t dimension);

/// Same for a d x d covariance matrix (row-major).
std::vector<double> principal_axis_of_covariance(std::span<const double> covariance, std::size_t dimension);

enum class SamplingLaw { density, cdf };

/// p_i = min{N(proj_i; mu, sigma), 1} floored at 1e-12 where, with m = min and
/// mbar = mean of the projections, mu = m + (mbar - m)/3 and sigma = (mbar - m)/4.
/// `law` selects the Gaussian density (default) or its CDF.
std::vector<double> sampling_probabilities(std::span<const double> projections,
                                           SamplingLaw law = SamplingLaw::density);

inline constexpr double sampling_probability_floor = 1e-12;

struct ShiftConfig {
  std::size_t population_size = 100000;
  std::size_t feature_dimension = 64;
  std::size_t core_features = 4;         // a block of features active together for most units
  double sparsity = 1.0;                 // multiplies every activation probability; 0 leaves all features off
  double inactive_fraction = 0.05;       // units with the core block mostly off
  double core_rate_active = 0.97;
  double core_rate_inactive = 0.02;
  double interest_rate_min = 0.02;
  double interest_rate_max = 0.2;
  double log_rate_intercept = 0.5;
  double core_coefficient = 0.3;
  std::size_t linked_interest_features = 10;
  double interest_coefficient_min = 0.1;
  double interest_coefficient_max = 0.5;
  std::vector<double> fractions{0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05};
  std::size_t replicates = 100;
  double ridge_lambda = 1.0;
  SamplingLaw law = SamplingLaw::density;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Parameters of the visit-rate link, kept so that analytic moments can be checked.
struct VisitLink {
  double intercept = 0.0;
  std::vector<double> coefficients;      // log-rate = intercept + coefficients . x
  std::vector<double> interest_rates;    // activation probability of each non-core feature
  std::size_t core_features = 0;
  double inactive_fraction = 0.0;
  double core_rate_active = 0.0;
  double core_rate_inactive = 0.0;
};

struct ShiftUnit {
  std::vector<std::size_t> features;  // indices of the active features, ascending
  double visits = 0.0;
};

struct ShiftPopulation {
  std::size_t dimension = 0;
  std::vector<ShiftUnit> units;
  std::vector<double> principal_axis;
  std::vector<double> projections;
  std::vector<double> sampling_probs;
  VisitLink link;  // empty for imported populations

  double mean_visits() const;
};

/// Analytic mean and variance of a unit's visit count under the generating link.
struct VisitMoments {
  double mean = 0.0;
  double variance = 0.0;
};
VisitMoments visit_moments(const VisitLink& link);

ShiftPopulation synth_population(const ShiftConfig& config);

/// Fills in the principal axis and the projections onto it.
void compute_projections(ShiftPopulation& pop);
/// compute_projections, then the sampling probabilities.
void compute_sampling(ShiftPopulation& pop, SamplingLaw law = SamplingLaw::density);

struct ShiftOutcome {
  double ips = 0.0;
  double dr = 0.0;
  double truth = 0.0;  // mean visits of the subsample
  std::size_t sample_size = 0;
  std::size_t observed = 0;
};

/// Draws ceil(f N) units without replacement, observes each with its sampling
/// probability, fits ridge (with intercept) on the observed units and returns
/// IPS and DR estimates of the subsample's mean visits.
ShiftOutcome shift_experiment(const ShiftPopulation& pop, double fraction, double ridge_lambda, Rng& rng);

/// CSV with a header comment, then `unit,features,visits,probability` where
/// features are space-separated indices.
std::string format_population_csv(const ShiftPopulation& pop);
void save_population_csv(const ShiftPopulation& pop, const std::filesystem::path& path);
/// Probabilities are taken from the file; the principal axis is recomputed.
ShiftPopulation parse_population_csv(std::string_view text, const std::string& source = "<string>");
ShiftPopulation load_population_csv(const std::filesystem::path& path);

}  // namespace dreval
