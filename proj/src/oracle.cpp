#include "dreval/oracle.hpp"

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dreval/error.hpp"
#include "dreval/numeric.hpp"

namespace dreval {

namespace {

constexpr double sum_tolerance = 1e-12;

std::string ctx_label(std::size_t i) { return "context " + std::to_string(i); }

void check_distribution(const std::vector<double>& ps, const std::string& what) {
  double s = 0.0;
  for (double p : ps) {
    require(std::isfinite(p) && p >= 0.0 && p <= 1.0, what + ": probability outside [0,1]");
    s += p;
  }
  require(std::abs(s - 1.0) <= sum_tolerance, what + ": probabilities sum to " + std::to_string(s));
}

}  // namespace

void FiniteInstance::validate() const {
  require(!contexts.empty(), "instance has no contexts");
  require(actions >= 1, "instance needs at least one action");
  const std::size_t d = dimension();
  require(d >= 1, "instance contexts need at least one feature");
  std::vector<double> cp;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    require(contexts[i].features.size() == d, ctx_label(i) + ": dimension mismatch");
    for (double v : contexts[i].features) require(std::isfinite(v), ctx_label(i) + ": non-finite feature");
    cp.push_back(contexts[i].probability);
  }
  check_distribution(cp, "context distribution");

  require(rewards.size() == contexts.size() && logging.size() == contexts.size() &&
              propensities.size() == contexts.size(),
          "reward/logging/propensity tables must cover every context");
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    require(rewards[i].size() == actions, ctx_label(i) + ": missing reward entries");
    require(logging[i].size() == actions, ctx_label(i) + ": logging row has wrong length");
    require(propensities[i].size() == actions, ctx_label(i) + ": propensity row has wrong length");
    check_distribution(logging[i], ctx_label(i) + " logging");
    for (Action a = 0; a < actions; ++a) {
      const auto& atoms = rewards[i][a];
      const std::string where = ctx_label(i) + " action " + std::to_string(a);
      require(!atoms.empty(), where + ": no reward given");
      require(atoms.size() <= max_reward_atoms, where + ": more than 8 reward atoms");
      std::vector<double> ap;
      for (const auto& at : atoms) {
        require(std::isfinite(at.value), where + ": non-finite reward");
        ap.push_back(at.probability);
      }
      check_distribution(ap, where + " reward");
      const double q = propensities[i][a];
      require(std::isfinite(q) && q >= 0.0 && q <= 1.0, where + ": propensity outside [0,1]");
      require(!(logging[i][a] > 0.0 && q <= 0.0), where + ": modeled propensity is 0 where logging is positive");
    }
  }
  require(outcome_count() <= max_oracle_outcomes, "instance exceeds the oracle outcome cap");
}

double FiniteInstance::expected_reward(std::size_t ctx, Action a) const {
  double m = 0.0;
  for (const auto& at : rewards[ctx][a]) m += at.probability * at.value;
  return m;
}

double FiniteInstance::reward_variance(std::size_t ctx, Action a) const {
  const double m = expected_reward(ctx, a);
  double v = 0.0;
  for (const auto& at : rewards[ctx][a]) v += at.probability * (at.value - m) * (at.value - m);
  return v;
}

std::size_t FiniteInstance::outcome_count() const {
  std::size_t n = 0;
  for (const auto& row : rewards)
    for (const auto& atoms : row) n += atoms.size();
  return n;
}

double policy_value(const FiniteInstance& inst, const Policy& policy) {
  inst.validate();
  CompensatedSum v;
  for (std::size_t i = 0; i < inst.contexts.size(); ++i) {
    const auto& c = inst.contexts[i];
    v.add(c.probability * inst.expected_reward(i, policy_apply(policy, c.features)));
  }
  return v.value();
}

namespace {

// Calls visit(probability, term) for every outcome with positive probability.
template <class Visit>
void for_each_outcome(const FiniteInstance& inst, const Policy& policy, const PayoffModel& model,
                      EstimatorKind kind, Visit&& visit) {
  inst.validate();
  require(policy.actions() == inst.actions && policy.dimension() == inst.dimension(),
          "oracle: policy shape does not match the instance");
  require(model.actions() == inst.actions && model.dimension() == inst.dimension(),
          "oracle: model shape does not match the instance");
  for (std::size_t i = 0; i < inst.contexts.size(); ++i) {
    const auto& c = inst.contexts[i];
    if (c.probability == 0.0) continue;
    if (kind == EstimatorKind::dm) {
      visit(c.probability, estimate_dm(std::span<const Context>(&c.features, 1), model, policy).value);
      continue;
    }
    for (Action a = 0; a < inst.actions; ++a) {
      const double pa = inst.logging[i][a];
      if (pa == 0.0) continue;
      for (const auto& at : inst.rewards[i][a]) {
        if (at.probability == 0.0) continue;
        const LoggedRecord rec{c.features, a, at.value, inst.propensities[i][a]};
        const double t = kind == EstimatorKind::dr ? dr_term(rec, model, policy) : ips_term(rec, policy);
        visit(c.probability * pa * at.probability, t);
      }
    }
  }
}

}  // namespace

double enumerate_expected_value(const FiniteInstance& inst, const Policy& policy, const PayoffModel& model,
                                EstimatorKind kind) {
  CompensatedSum m;
  for_each_outcome(inst, policy, model, kind, [&](double w, double t) { m.add(w * t); });
  return m.value();
}

double enumerate_variance(const FiniteInstance& inst, const Policy& policy, const PayoffModel& model,
                          EstimatorKind kind) {
  const double mean = enumerate_expected_value(inst, policy, model, kind);
  CompensatedSum v;
  for_each_outcome(inst, policy, model, kind, [&](double w, double t) { v.add(w * (t - mean) * (t - mean)); });
  return v.value();
}

DatasetMoments enumerate_dataset_moments(const FiniteInstance& inst, const Policy& policy, const PayoffModel& model,
                                         EstimatorKind kind, std::size_t n) {
  require(n >= 1, "enumerate_dataset_moments: n must be >= 1");
  return {enumerate_expected_value(inst, policy, model, kind),
          enumerate_variance(inst, policy, model, kind) / static_cast<double>(n)};
}

PayoffModel exact_payoff_model(const FiniteInstance& inst) {
  inst.validate();
  const auto m = static_cast<Eigen::Index>(inst.contexts.size());
  const auto d = static_cast<Eigen::Index>(inst.dimension());
  Eigen::MatrixXd x(m, d);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = inst.contexts[static_cast<std::size_t>(i)].features[static_cast<std::size_t>(j)];
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(x);
  if (cod.rank() < m) fail(ErrorCode::singular_system, "exact_payoff_model: contexts are not linearly independent");

  PayoffModel model{WeightMatrix(inst.actions, inst.dimension()), 0.0};
  for (Action a = 0; a < inst.actions; ++a) {
    Eigen::VectorXd rho(m);
    for (Eigen::Index i = 0; i < m; ++i) rho(i) = inst.expected_reward(static_cast<std::size_t>(i), a);
    const Eigen::VectorXd w = cod.solve(rho);
    for (Eigen::Index j = 0; j < d; ++j) model.weights(a, static_cast<std::size_t>(j)) = w(j);
  }
  return model;
}

FiniteInstance with_exact_propensities(FiniteInstance inst) {
  inst.propensities = inst.logging;
  return inst;
}

LoggedDataset sample_dataset(const FiniteInstance& inst, std::size_t n, Rng& rng) {
  inst.validate();
  require(n >= 1, "sample_dataset: n must be >= 1");
  auto draw = [&](auto&& weight_of, std::size_t count) {
    const double u = rng.uniform();
    double c = 0.0;
    std::size_t last = 0;
    for (std::size_t j = 0; j < count; ++j) {
      const double w = weight_of(j);
      if (w <= 0.0) continue;
      last = j;
      c += w;
      if (u < c) return j;
    }
    return last;
  };
  std::vector<LoggedRecord> recs;
  recs.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t i = draw([&](std::size_t j) { return inst.contexts[j].probability; }, inst.contexts.size());
    const Action a = draw([&](std::size_t j) { return inst.logging[i][j]; }, inst.actions);
    const auto& atoms = inst.rewards[i][a];
    const std::size_t r = draw([&](std::size_t j) { return atoms[j].probability; }, atoms.size());
    recs.push_back({inst.contexts[i].features, a, atoms[r].value, inst.propensities[i][a]});
  }
  return LoggedDataset(std::move(recs), inst.actions);
}

// ---- text format ----

namespace {

double parse_double(std::string_view tok, const std::string& where) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  const auto res = std::from_chars(tok.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) fail(ErrorCode::parse_error, where + ": bad number '" + std::string(tok) + "'");
  return v;
}

std::size_t parse_index(std::string_view tok, const std::string& where) {
  std::size_t v = 0;
  const auto* end = tok.data() + tok.size();
  const auto res = std::from_chars(tok.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) fail(ErrorCode::parse_error, where + ": bad index '" + std::string(tok) + "'");
  return v;
}

}  // namespace

OracleCase parse_oracle_case(std::string_view text, const std::string& source) {
  OracleCase oc;
  auto& inst = oc.instance;
  struct Pending {
    std::size_t ctx;
    Action a;
    std::vector<RewardAtom> atoms;
  };
  std::vector<Pending> rewards;
  std::vector<std::pair<std::size_t, std::vector<double>>> logging, propensity, policy_rows, model_rows;

  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno);
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string& key = tok[0];
    auto numbers_from = [&](std::size_t first) {
      std::vector<double> v;
      for (std::size_t j = first; j < tok.size(); ++j) v.push_back(parse_double(tok[j], where));
      return v;
    };
    if (key == "name") {
      if (tok.size() != 2) fail(ErrorCode::parse_error, where + ": name takes one token");
      oc.name = tok[1];
    } else if (key == "actions") {
      if (tok.size() != 2) fail(ErrorCode::parse_error, where + ": actions takes one count");
      inst.actions = parse_index(tok[1], where);
    } else if (key == "context") {
      if (tok.size() < 3) fail(ErrorCode::parse_error, where + ": context needs a probability and features");
      inst.contexts.push_back({numbers_from(2), parse_double(tok[1], where)});
    } else if (key == "reward") {
      if (tok.size() < 4) fail(ErrorCode::parse_error, where + ": reward needs ctx, action and values");
      Pending p{parse_index(tok[1], where), parse_index(tok[2], where), {}};
      if (tok.size() == 4 && tok[3].find(':') == std::string::npos) {
        p.atoms.push_back({parse_double(tok[3], where), 1.0});
      } else {
        for (std::size_t j = 3; j < tok.size(); ++j) {
          const auto colon = tok[j].find(':');
          if (colon == std::string::npos) fail(ErrorCode::parse_error, where + ": expected value:probability");
          p.atoms.push_back({parse_double(std::string_view(tok[j]).substr(0, colon), where),
                             parse_double(std::string_view(tok[j]).substr(colon + 1), where)});
        }
      }
      rewards.push_back(std::move(p));
    } else if (key == "logging" || key == "propensity" || key == "policy" || key == "model") {
      if (tok.size() < 3) fail(ErrorCode::parse_error, where + ": " + key + " needs an index and values");
      auto& dst = key == "logging" ? logging : key == "propensity" ? propensity : key == "policy" ? policy_rows : model_rows;
      dst.emplace_back(parse_index(tok[1], where), numbers_from(2));
    } else {
      fail(ErrorCode::parse_error, where + ": unknown directive '" + key + "'");
    }
  }

  if (inst.actions == 0) fail(ErrorCode::parse_error, source + ": missing 'actions'");
  if (inst.contexts.empty()) fail(ErrorCode::parse_error, source + ": no contexts");
  const std::size_t m = inst.contexts.size(), k = inst.actions, d = inst.dimension();
  inst.rewards.assign(m, std::vector<std::vector<RewardAtom>>(k));
  inst.logging.assign(m, {});
  inst.propensities.assign(m, {});
  for (auto& p : rewards) {
    if (p.ctx >= m || p.a >= k) fail(ErrorCode::parse_error, source + ": reward for unknown context/action");
    if (!inst.rewards[p.ctx][p.a].empty()) fail(ErrorCode::parse_error, source + ": duplicate reward entry");
    inst.rewards[p.ctx][p.a] = std::move(p.atoms);
  }
  auto place_rows = [&](auto& rows, auto& table, std::size_t limit, const char* what) {
    for (auto& [i, v] : rows) {
      if (i >= limit) fail(ErrorCode::parse_error, source + ": " + what + " row index out of range");
      table[i] = std::move(v);
    }
  };
  place_rows(logging, inst.logging, m, "logging");
  place_rows(propensity, inst.propensities, m, "propensity");
  for (std::size_t i = 0; i < m; ++i)
    if (inst.propensities[i].empty()) inst.propensities[i] = inst.logging[i];

  oc.policy = Policy{WeightMatrix(k, d)};
  oc.model = PayoffModel{WeightMatrix(k, d), 0.0};
  for (auto& [a, v] : policy_rows) {
    if (a >= k || v.size() != d) fail(ErrorCode::parse_error, source + ": policy row has wrong action or length");
    std::copy(v.begin(), v.end(), oc.policy.weights.row(a).begin());
  }
  for (auto& [a, v] : model_rows) {
    if (a >= k || v.size() != d) fail(ErrorCode::parse_error, source + ": model row has wrong action or length");
    std::copy(v.begin(), v.end(), oc.model.weights.row(a).begin());
  }
  try {
    inst.validate();
  } catch (const Error& e) {
    fail(ErrorCode::parse_error, source + ": " + e.what());
  }
  if (oc.name.empty()) oc.name = source;
  return oc;
}

OracleCase load_oracle_case(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::io_error, "cannot open instance file " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  auto oc = parse_oracle_case(buf.str(), path.string());
  if (oc.name == path.string()) oc.name = path.stem().string();
  return oc;
}

std::string format_oracle_case(const OracleCase& c) {
  std::ostringstream out;
  out.precision(17);
  const auto& inst = c.instance;
  if (!c.name.empty()) out << "name " << c.name << "\n";
  out << "actions " << inst.actions << "\n";
  for (const auto& ctx : inst.contexts) {
    out << "context " << ctx.probability;
    for (double v : ctx.features) out << ' ' << v;
    out << "\n";
  }
  for (std::size_t i = 0; i < inst.contexts.size(); ++i) {
    for (Action a = 0; a < inst.actions; ++a) {
      out << "reward " << i << ' ' << a;
      for (const auto& at : inst.rewards[i][a]) out << ' ' << at.value << ':' << at.probability;
      out << "\n";
    }
    out << "logging " << i;
    for (double p : inst.logging[i]) out << ' ' << p;
    out << "\npropensity " << i;
    for (double p : inst.propensities[i]) out << ' ' << p;
    out << "\n";
  }
  for (Action a = 0; a < inst.actions; ++a) {
    out << "policy " << a;
    for (double v : c.policy.weights.row(a)) out << ' ' << v;
    out << "\nmodel " << a;
    for (double v : c.model.weights.row(a)) out << ' ' << v;
    out << "\n";
  }
  return out.str();
}

}  // namespace dreval
