#include "dreval/reward_models.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <string>

#include "dreval/error.hpp"
#include "dreval/numeric.hpp"

namespace dreval {

PayoffModel zero_model(std::size_t actions, std::size_t dimension) {
  return PayoffModel{WeightMatrix(actions, dimension, 0.0), 0.0};
}

double predict_payoff(const PayoffModel& model, std::span<const double> x, Action a) {
  if (a >= model.actions()) fail(ErrorCode::invalid_input, "predict_payoff: action " + std::to_string(a) + " out of range");
  require(x.size() == model.dimension(), "predict_payoff: context dimension mismatch");
  return dot(model.weights.row(a), x);
}

RidgeAccumulator::RidgeAccumulator(std::size_t dimension)
    : dim_(dimension), gram_(dimension * dimension, 0.0), rhs_(dimension, 0.0) {}

void RidgeAccumulator::add(std::span<const double> x, double y) {
  require(x.size() == dim_, "ridge: row dimension mismatch");
  for (std::size_t i = 0; i < dim_; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    rhs_[i] += xi * y;
    double* g = gram_.data() + i * dim_;
    for (std::size_t j = i; j < dim_; ++j) g[j] += xi * x[j];
  }
  ++count_;
}

void RidgeAccumulator::add_binary(std::span<const std::size_t> active, double y) {
  for (std::size_t p = 0; p < active.size(); ++p) {
    const std::size_t i = active[p];
    require(i < dim_, "ridge: feature index out of range");
    rhs_[i] += y;
    for (std::size_t q = 0; q < active.size(); ++q) {
      const std::size_t j = active[q];
      if (j >= i) gram_[i * dim_ + j] += 1.0;
    }
  }
  ++count_;
}

std::vector<double> RidgeAccumulator::solve(double lambda) const {
  require(lambda >= 0.0 && std::isfinite(lambda), "ridge: lambda must be finite and >= 0");
  Eigen::MatrixXd a(dim_, dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = i; j < dim_; ++j) {
      a(i, j) = gram_[i * dim_ + j];
      a(j, i) = a(i, j);
    }
  a.diagonal().array() += lambda;
  const Eigen::Map<const Eigen::VectorXd> b(rhs_.data(), static_cast<Eigen::Index>(dim_));

  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14))
    fail(ErrorCode::singular_system, "ridge: normal matrix is singular (lambda=" + std::to_string(lambda) + ")");
  const Eigen::VectorXd w = llt.solve(b);
  return {w.data(), w.data() + w.size()};
}

PayoffModel fit_ridge_per_action(const LoggedDataset& data, double lambda) {
  require(lambda >= 0.0, "fit_ridge_per_action: lambda must be >= 0");
  const std::size_t k = data.actions(), d = data.dimension();
  std::vector<RidgeAccumulator> acc(k, RidgeAccumulator(d));
  for (const auto& r : data.records()) acc[r.action].add(r.context, r.payoff);

  PayoffModel model{WeightMatrix(k, d, 0.0), lambda};
  for (Action a = 0; a < k; ++a) {
    if (acc[a].count() == 0) continue;
    const auto w = acc[a].solve(lambda);
    std::copy(w.begin(), w.end(), model.weights.row(a).begin());
  }
  return model;
}

PayoffModel fit_ridge_full_information(std::span<const CostVectorExample> examples, double lambda) {
  require(!examples.empty(), "fit_ridge_full_information: no examples");
  const std::size_t k = examples.front().losses.size();
  std::vector<LoggedRecord> records;
  records.reserve(examples.size() * k);
  for (const auto& ex : examples) {
    require(ex.losses.size() == k, "fit_ridge_full_information: inconsistent loss vector length");
    for (Action a = 0; a < k; ++a) records.push_back({ex.context, a, ex.losses[a], 1.0});
  }
  return fit_ridge_per_action(LoggedDataset(std::move(records), k), lambda);
}

double ridge_objective(const LoggedDataset& data, Action a, std::span<const double> w, double lambda) {
  double obj = 0.0;
  for (const auto& r : data.records()) {
    if (r.action != a) continue;
    const double e = dot(w, r.context) - r.payoff;
    obj += e * e;
  }
  return obj + lambda * dot(w, w);
}

PropensityModel PropensityModel::uniform(std::size_t actions) {
  require(actions >= 1, "uniform_propensity: k must be >= 1");
  return PropensityModel(Uniform{actions});
}

PropensityModel PropensityModel::table(std::map<Context, std::vector<double>> entries) {
  for (const auto& [x, ps] : entries)
    for (double p : ps)
      if (!(p > 0.0 && p <= 1.0)) fail(ErrorCode::invalid_propensity, "propensity table entry outside (0,1]");
  return PropensityModel(Table{std::move(entries)});
}

PropensityModel PropensityModel::per_record() { return PropensityModel(PerRecord{}); }

double PropensityModel::operator()(std::span<const double> x, Action a) const {
  if (const auto* u = std::get_if<Uniform>(&kind_)) {
    require(a < u->actions, "propensity: action out of range");
    return 1.0 / static_cast<double>(u->actions);
  }
  if (const auto* t = std::get_if<Table>(&kind_)) {
    const auto it = t->entries.find(Context(x.begin(), x.end()));
    require(it != t->entries.end(), "propensity: context not in table");
    require(a < it->second.size(), "propensity: action out of range");
    return it->second[a];
  }
  fail(ErrorCode::invalid_input, "propensity: per-record model has no context lookup");
}

double PropensityModel::for_record(const LoggedRecord& r) const {
  if (std::holds_alternative<PerRecord>(kind_)) return r.propensity;
  return (*this)(r.context, r.action);
}

}  // namespace dreval
