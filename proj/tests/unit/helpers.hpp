#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "dreval/core.hpp"
#include "dreval/random.hpp"
#include "dreval/reward_models.hpp"

namespace testing_support {

inline dreval::WeightMatrix matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  dreval::WeightMatrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline dreval::Policy policy(std::initializer_list<std::initializer_list<double>> rows) {
  return dreval::Policy{matrix(rows)};
}

inline dreval::PayoffModel model(std::initializer_list<std::initializer_list<double>> rows) {
  return dreval::PayoffModel{matrix(rows), 0.0};
}

/// Policy always picking `action`, via a constant feature at index 0.
inline dreval::Policy constant_policy(std::size_t actions, std::size_t dim, std::size_t action) {
  dreval::Policy p{dreval::WeightMatrix(actions, dim)};
  p.weights(action, 0) = 1.0;
  return p;
}

inline dreval::WeightMatrix random_matrix(std::size_t r, std::size_t c, dreval::Rng& rng, double scale = 1.0) {
  dreval::WeightMatrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(-scale, scale);
  return m;
}

inline std::vector<double> random_vector(std::size_t n, dreval::Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace testing_support
