#pragma once

#include <Eigen/Core>
#include <deque>
#include <functional>

namespace solmplan {

// Limited-memory BFGS with monotone (Armijo backtracking) line search.
// Returns the best iterate seen; curvature pairs failing y's > 0 are skipped.
namespace lbfgs {

struct Params {
  int memory = 8;
  int max_iterations = 500;
  double grad_tol = 1e-6;
  int max_linesearch = 20;
  // relative-decrease test over a trailing window; the practical stopping
  // rule when the objective has C0 creases (grid interpolants)
  int past = 3;
  double delta = 1e-5;
};

struct Result {
  double fx = 0.0;
  int iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
};

using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

inline Result minimize(const Objective& f, Eigen::VectorXd& x, const Params& p) {
  Result res;
  const auto n = x.size();
  Eigen::VectorXd g(n), g_new(n), x_new(n), d(n);
  double fx = f(x, g);

  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;  // (s, y)
  std::deque<double> rho;

  Eigen::VectorXd best_x = x;
  double best_fx = fx;
  std::deque<double> history;

  for (int it = 0; it < p.max_iterations; ++it) {
    res.iterations = it;
    if (g.lpNorm<Eigen::Infinity>() <= p.grad_tol * std::max(1.0, x.lpNorm<Eigen::Infinity>())) {
      res.converged = true;
      break;
    }
    history.push_back(fx);
    if (p.past > 0 && static_cast<int>(history.size()) > p.past) {
      const double before = history.front();
      history.pop_front();
      if (before - fx <= p.delta * std::max(1.0, std::abs(fx))) {
        res.converged = true;
        break;
      }
    }

    // two-loop recursion
    d = -g;
    std::vector<double> alpha(pairs.size());
    for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
      alpha[i] = rho[i] * pairs[i].first.dot(d);
      d -= alpha[i] * pairs[i].second;
    }
    if (!pairs.empty()) {
      const auto& [s_last, y_last] = pairs.back();
      d *= s_last.dot(y_last) / y_last.squaredNorm();
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const double beta = rho[i] * pairs[i].second.dot(d);
      d += (alpha[i] - beta) * pairs[i].first;
    }
    double gd = g.dot(d);
    if (!(gd < 0.0)) {  // not a descent direction; restart from steepest descent
      pairs.clear();
      rho.clear();
      d = -g;
      gd = g.dot(d);
    }

    // strong Wolfe line search (bracket + bisection zoom); falls back to the
    // best sufficient-decrease point if curvature cannot be met
    const double c1 = 1e-4, c2 = 0.9;
    double step = (it == 0 && pairs.empty()) ? 1.0 / std::max(1.0, g.norm()) : 1.0;
    double lo = 0.0, hi = 0.0;
    bool bracketed = false, accepted = false;
    double best_armijo_step = -1.0, best_armijo_fx = fx;
    Eigen::VectorXd best_armijo_x, best_armijo_g;
    double fx_new = fx;
    for (int ls = 0; ls < p.max_linesearch; ++ls) {
      x_new = x + step * d;
      fx_new = f(x_new, g_new);
      const double gd_new = g_new.dot(d);
      const bool armijo = fx_new <= fx + c1 * step * gd;
      if (armijo && fx_new < best_armijo_fx) {
        best_armijo_fx = fx_new;
        best_armijo_step = step;
        best_armijo_x = x_new;
        best_armijo_g = g_new;
      }
      if (!armijo || (bracketed && fx_new >= best_armijo_fx)) {
        hi = step;
        bracketed = true;
        step = 0.5 * (lo + hi);
        continue;
      }
      if (std::abs(gd_new) <= -c2 * gd) {
        accepted = true;
        break;
      }
      if (gd_new >= 0.0) {
        hi = lo;
        lo = step;
        bracketed = true;
        step = 0.5 * (lo + hi);
        continue;
      }
      lo = step;
      step = bracketed ? 0.5 * (lo + hi) : 2.0 * step;
    }
    if (!accepted) {
      if (best_armijo_step > 0.0) {
        x_new = best_armijo_x;
        g_new = best_armijo_g;
        fx_new = best_armijo_fx;
      } else {
        res.line_search_failed = true;
        break;
      }
    }

    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      pairs.emplace_back(std::move(s), std::move(y));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(pairs.size()) > p.memory) {
        pairs.pop_front();
        rho.pop_front();
      }
    }
    x.swap(x_new);
    g.swap(g_new);
    fx = fx_new;
    if (fx < best_fx) {
      best_fx = fx;
      best_x = x;
    }
  }

  if (best_fx < fx) {
    x = best_x;
    fx = best_fx;
  }
  res.fx = fx;
  return res;
}

}  // namespace lbfgs
}  // namespace solmplan
