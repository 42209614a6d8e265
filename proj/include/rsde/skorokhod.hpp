#pragma once

// Discrete Skorokhod problem: x = y + k, x in the closure, k pushing along
// inward normals only. Each grid step projects the free move back onto the
// domain closure.

#include "rsde/driver.hpp"
#include "rsde/geometry.hpp"

#include <span>
#include <utility>
#include <vector>

namespace rsde {

/// Pre-projection points must stay this fraction of rho0 away from the closure.
inline constexpr double kExcursionSafety = 0.99;

struct Reflection {
  Vec x;        // projected point
  Vec push;     // x - pre-projection point
  bool pushed;  // pre-projection point was outside the closure
};

inline Reflection reflect(const Domain& domain, const Vec& p) {
  const double dist = domain.distance(p);
  const double rho0 = domain.rho0();
  if (std::isfinite(rho0) && dist >= kExcursionSafety * rho0) {
    throw Error(ErrorCode::ProjectionOutOfRange,
                "excursion " + std::to_string(dist) + " reaches the projection radius " +
                    std::to_string(rho0));
  }
  if (dist <= 0.0) return {p, Vec::Zero(p.size()), false};
  Vec x = domain.project(p);
  Vec push = x - p;
  return {std::move(x), std::move(push), true};
}

struct SkorokhodSolution {
  GridPath x;
  GridPath k;
  std::vector<double> k_variation;  // |k|_t at each grid time
  std::size_t pushes = 0;
};

/// Solves the discrete problem for the input y shifted to start at y0:
/// the effective input is y0 + (y - y_0).
inline SkorokhodSolution solve_skorokhod(const Domain& domain, const GridPath& y, const Vec& y0) {
  y.validate();
  require_dim(y0, domain.dimension(), "solve_skorokhod y0");
  require_dim(y.values.front(), domain.dimension(), "solve_skorokhod path");
  if (!domain.in_closure(y0)) {
    throw Error(ErrorCode::StartOutsideDomain, "starting point lies outside the domain closure");
  }
  const auto n = y.size();
  SkorokhodSolution sol;
  sol.x.times = y.times;
  sol.k.times = y.times;
  sol.x.interp = sol.k.interp = Interp::cadlag_step;
  sol.x.values.reserve(n);
  sol.k.values.reserve(n);
  sol.k_variation.reserve(n);

  Vec x = y0;
  Vec k = Vec::Zero(y0.size());
  double kvar = 0.0;
  sol.x.values.push_back(x);
  sol.k.values.push_back(k);
  sol.k_variation.push_back(0.0);
  for (std::size_t i = 1; i < n; ++i) {
    const Vec dy = y.values[i] - y.values[i - 1];
    Reflection r = reflect(domain, x + dy);
    if (r.pushed) {
      ++sol.pushes;
      kvar += r.push.norm();
      k += r.push;
    }
    x = std::move(r.x);
    sol.x.values.push_back(x);
    sol.k.values.push_back(k);
    sol.k_variation.push_back(kvar);
  }
  return sol;
}

inline SkorokhodSolution solve_skorokhod(const Domain& domain, const GridPath& y) {
  return solve_skorokhod(domain, y, y.values.front());
}

/// Sum of increment norms over grid points in (t_from, t_to].
inline double total_variation(const GridPath& path, double t_from, double t_to) {
  const double slack = 1e-12 * (1.0 + std::abs(path.horizon()));
  if (!(t_from <= t_to) || t_from < 0.0 || t_to > path.horizon() + slack) {
    throw Error(ErrorCode::InvalidArgument, "total_variation: bad interval");
  }
  double v = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (path.times[i] > t_from && path.times[i] <= t_to) {
      v += (path.values[i] - path.values[i - 1]).norm();
    }
  }
  return v;
}

struct Interval {
  double from;
  double to;
};

struct Lemma1Row {
  Interval interval;
  double y_variation;
  double k_variation;
  double x_variation;
  bool k_bound;  // |k| <= |y|
  bool x_bound;  // |x| <= 2 |y|
};

struct Lemma1Report {
  bool jump_condition = true;  // every |dy| < rho0
  std::vector<Lemma1Row> rows;

  bool all_hold() const {
    for (const auto& r : rows)
      if (!r.k_bound || !r.x_bound) return false;
    return true;
  }
};

inline bool lemma1_le(double lhs, double rhs, double rel_tol) {
  return lhs <= rhs * (1.0 + rel_tol);
}

/// Both variation inequalities per interval, given the three variations.
inline Lemma1Row lemma1_row(Interval iv, double yv, double kv, double xv, double rel_tol) {
  return {iv, yv, kv, xv, lemma1_le(kv, yv, rel_tol), lemma1_le(xv, 2.0 * yv, rel_tol)};
}

inline Lemma1Report check_lemma1(const Domain& domain, const GridPath& y,
                                 const SkorokhodSolution& sol, std::span<const Interval> intervals,
                                 double rel_tol = 1e-9) {
  Lemma1Report rep;
  const double rho0 = domain.rho0();
  for (std::size_t i = 1; i < y.size(); ++i) {
    if (!((y.values[i] - y.values[i - 1]).norm() < rho0)) rep.jump_condition = false;
  }
  for (const auto& iv : intervals) {
    rep.rows.push_back(lemma1_row(iv, total_variation(y, iv.from, iv.to),
                                  total_variation(sol.k, iv.from, iv.to),
                                  total_variation(sol.x, iv.from, iv.to), rel_tol));
  }
  return rep;
}

}  // namespace rsde
