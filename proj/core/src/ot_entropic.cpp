#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "torusot/ot.hpp"

namespace torusot {

namespace {

// indices of atoms carrying mass; zero-weight atoms are invisible to the plan
std::vector<std::int64_t> support(const DiscreteMeasure& m) {
  std::vector<std::int64_t> idx;
  for (std::int64_t i = 0; i < m.count(); ++i) {
    if (m.weights[static_cast<std::size_t>(i)] > 0.0) idx.push_back(i);
  }
  return idx;
}

double logsumexp(const double* vals, std::size_t n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, vals[k]);
  if (!std::isfinite(mx)) return mx;
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += std::exp(vals[k] - mx);
  return mx + std::log(acc);
}

}  // namespace

OTResult entropic_wasserstein(const DiscreteMeasure& a, const DiscreteMeasure& b, double p,
                              double epsilon, int max_iter) {
  if (a.d != b.d) throw std::invalid_argument("entropic_wasserstein: dimension mismatch");
  if (!(p >= 1.0)) throw std::invalid_argument("entropic_wasserstein: need p >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("entropic_wasserstein: need epsilon > 0");
  a.validate();
  b.validate();

  const std::vector<std::int64_t> ia = support(a);
  const std::vector<std::int64_t> ib = support(b);
  const std::int64_t na = static_cast<std::int64_t>(ia.size());
  const std::int64_t nb = static_cast<std::int64_t>(ib.size());

  std::vector<double> c(static_cast<std::size_t>(na * nb));
  double mean_cost = 0.0;
  for (std::int64_t i = 0; i < na; ++i) {
    const TorusPoint x = a.atom(ia[static_cast<std::size_t>(i)]);
    for (std::int64_t j = 0; j < nb; ++j) {
      const double v = std::pow(periodic_distance(x, b.atom(ib[static_cast<std::size_t>(j)])), p);
      c[static_cast<std::size_t>(i * nb + j)] = v;
      mean_cost += v;
    }
  }
  mean_cost /= static_cast<double>(na * nb);

  std::vector<double> log_a(static_cast<std::size_t>(na)), log_b(static_cast<std::size_t>(nb));
  for (std::int64_t i = 0; i < na; ++i) {
    log_a[static_cast<std::size_t>(i)] = std::log(a.weights[static_cast<std::size_t>(ia[static_cast<std::size_t>(i)])]);
  }
  for (std::int64_t j = 0; j < nb; ++j) {
    log_b[static_cast<std::size_t>(j)] = std::log(b.weights[static_cast<std::size_t>(ib[static_cast<std::size_t>(j)])]);
  }

  // epsilon-scaling: halve from half the mean cost down to the target
  std::vector<double> levels;
  for (double e = 0.5 * mean_cost; e > epsilon; e *= 0.5) levels.push_back(e);
  levels.push_back(epsilon);

  std::vector<double> f(static_cast<std::size_t>(na), 0.0), g(static_cast<std::size_t>(nb), 0.0);
  std::vector<double> buf(static_cast<std::size_t>(std::max(na, nb)));
  std::vector<double> row(static_cast<std::size_t>(na)), col(static_cast<std::size_t>(nb));

  const auto marginal_violation = [&](double eps) {
    std::fill(row.begin(), row.end(), 0.0);
    std::fill(col.begin(), col.end(), 0.0);
    for (std::int64_t i = 0; i < na; ++i) {
      for (std::int64_t j = 0; j < nb; ++j) {
        const double pi = std::exp((f[static_cast<std::size_t>(i)] + g[static_cast<std::size_t>(j)] -
                                    c[static_cast<std::size_t>(i * nb + j)]) /
                                   eps);
        row[static_cast<std::size_t>(i)] += pi;
        col[static_cast<std::size_t>(j)] += pi;
      }
    }
    double viol = 0.0;
    for (std::int64_t i = 0; i < na; ++i) {
      viol += std::fabs(row[static_cast<std::size_t>(i)] - a.weights[static_cast<std::size_t>(ia[static_cast<std::size_t>(i)])]);
    }
    for (std::int64_t j = 0; j < nb; ++j) {
      viol += std::fabs(col[static_cast<std::size_t>(j)] - b.weights[static_cast<std::size_t>(ib[static_cast<std::size_t>(j)])]);
    }
    return viol;
  };

  int iter_budget = max_iter;
  int sweeps_used = 0;
  double viol = std::numeric_limits<double>::infinity();
  for (std::size_t lvl = 0; lvl < levels.size(); ++lvl) {
    const double eps = levels[lvl];
    const bool final_level = lvl + 1 == levels.size();
    const double target = final_level ? 1e-7 : 1e-3;
    const int level_cap = final_level ? iter_budget : std::min(iter_budget, 60);
    for (int it = 0; it < level_cap; ++it) {
      for (std::int64_t i = 0; i < na; ++i) {
        for (std::int64_t j = 0; j < nb; ++j) {
          buf[static_cast<std::size_t>(j)] =
              (g[static_cast<std::size_t>(j)] - c[static_cast<std::size_t>(i * nb + j)]) / eps;
        }
        f[static_cast<std::size_t>(i)] =
            eps * (log_a[static_cast<std::size_t>(i)] - logsumexp(buf.data(), static_cast<std::size_t>(nb)));
      }
      for (std::int64_t j = 0; j < nb; ++j) {
        for (std::int64_t i = 0; i < na; ++i) {
          buf[static_cast<std::size_t>(i)] =
              (f[static_cast<std::size_t>(i)] - c[static_cast<std::size_t>(i * nb + j)]) / eps;
        }
        g[static_cast<std::size_t>(j)] =
            eps * (log_b[static_cast<std::size_t>(j)] - logsumexp(buf.data(), static_cast<std::size_t>(na)));
      }
      ++sweeps_used;
      --iter_budget;
      viol = marginal_violation(eps);
      if (viol < target) break;
    }
  }

  // marginal-repair rounding to an exactly feasible plan
  const double eps = epsilon;
  viol = marginal_violation(eps);  // also refreshes row/col sums
  std::vector<double> x(static_cast<std::size_t>(na)), y(static_cast<std::size_t>(nb));
  for (std::int64_t i = 0; i < na; ++i) {
    const double ai = a.weights[static_cast<std::size_t>(ia[static_cast<std::size_t>(i)])];
    x[static_cast<std::size_t>(i)] = row[static_cast<std::size_t>(i)] > 0.0
                                         ? std::min(1.0, ai / row[static_cast<std::size_t>(i)])
                                         : 0.0;
  }
  std::fill(col.begin(), col.end(), 0.0);
  for (std::int64_t i = 0; i < na; ++i) {
    for (std::int64_t j = 0; j < nb; ++j) {
      col[static_cast<std::size_t>(j)] +=
          x[static_cast<std::size_t>(i)] *
          std::exp((f[static_cast<std::size_t>(i)] + g[static_cast<std::size_t>(j)] -
                    c[static_cast<std::size_t>(i * nb + j)]) /
                   eps);
    }
  }
  for (std::int64_t j = 0; j < nb; ++j) {
    const double bj = b.weights[static_cast<std::size_t>(ib[static_cast<std::size_t>(j)])];
    y[static_cast<std::size_t>(j)] = col[static_cast<std::size_t>(j)] > 0.0
                                         ? std::min(1.0, bj / col[static_cast<std::size_t>(j)])
                                         : 0.0;
  }

  std::vector<double> err_a(static_cast<std::size_t>(na)), err_b(static_cast<std::size_t>(nb));
  std::fill(row.begin(), row.end(), 0.0);
  std::fill(col.begin(), col.end(), 0.0);
  double cost = 0.0;
  for (std::int64_t i = 0; i < na; ++i) {
    for (std::int64_t j = 0; j < nb; ++j) {
      const double pi = x[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)] *
                        std::exp((f[static_cast<std::size_t>(i)] + g[static_cast<std::size_t>(j)] -
                                  c[static_cast<std::size_t>(i * nb + j)]) /
                                 eps);
      row[static_cast<std::size_t>(i)] += pi;
      col[static_cast<std::size_t>(j)] += pi;
      cost += pi * c[static_cast<std::size_t>(i * nb + j)];
    }
  }
  double missing = 0.0;
  for (std::int64_t i = 0; i < na; ++i) {
    err_a[static_cast<std::size_t>(i)] =
        a.weights[static_cast<std::size_t>(ia[static_cast<std::size_t>(i)])] - row[static_cast<std::size_t>(i)];
    missing += err_a[static_cast<std::size_t>(i)];
  }
  for (std::int64_t j = 0; j < nb; ++j) {
    err_b[static_cast<std::size_t>(j)] =
        b.weights[static_cast<std::size_t>(ib[static_cast<std::size_t>(j)])] - col[static_cast<std::size_t>(j)];
  }
  if (missing > 1e-300) {
    double cross = 0.0;
    for (std::int64_t i = 0; i < na; ++i) {
      if (err_a[static_cast<std::size_t>(i)] <= 0.0) continue;
      double inner = 0.0;
      for (std::int64_t j = 0; j < nb; ++j) {
        inner += std::max(err_b[static_cast<std::size_t>(j)], 0.0) * c[static_cast<std::size_t>(i * nb + j)];
      }
      cross += err_a[static_cast<std::size_t>(i)] * inner;
    }
    cost += cross / missing;
  }

  OTResult out;
  out.method = SolverKind::entropic;
  out.epsilon = epsilon;
  out.iterations = sweeps_used;
  out.marginal_violation = viol;
  out.converged = viol < 1e-6;
  out.cost_p = cost;
  out.wasserstein = std::pow(cost, 1.0 / p);

  out.plan.n_source = a.count();
  out.plan.n_target = b.count();
  if (na * nb <= 262144) {
    for (std::int64_t i = 0; i < na; ++i) {
      for (std::int64_t j = 0; j < nb; ++j) {
        double pi = x[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)] *
                    std::exp((f[static_cast<std::size_t>(i)] + g[static_cast<std::size_t>(j)] -
                              c[static_cast<std::size_t>(i * nb + j)]) /
                             eps);
        if (missing > 1e-300) {
          pi += std::max(err_a[static_cast<std::size_t>(i)], 0.0) *
                std::max(err_b[static_cast<std::size_t>(j)], 0.0) / missing;
        }
        if (pi > 0.0) {
          out.plan.entries.push_back({ia[static_cast<std::size_t>(i)], ib[static_cast<std::size_t>(j)], pi});
        }
      }
    }
    out.plan_available = true;
  }
  return out;
}

}  // namespace torusot
