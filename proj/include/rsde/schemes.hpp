#pragma once

// Approximation schemes for reflected SDEs driven by semimartingales with
// jumps, where the stochastic integral acts on jumps through the flow map.
//
//   projection    X_{k+1} = Pi(phi(f dZ_k, X_k)) on a fixed partition
//   jump_adapted  the same step on a partition that isolates large jumps
//   wz_hat        unreflected flow along the linear interpolation inside a
//                 cell, projection of the left limit at cell ends
//   wz_bar        reflected ODE along the linear interpolation (projected
//                 Euler substeps)
//   marcus_euler  f dZ^c + 1/2 f'f d[Z]^c + exact flow for recorded jumps

#include "rsde/driver.hpp"
#include "rsde/flow.hpp"
#include "rsde/geometry.hpp"
#include "rsde/skorokhod.hpp"

#include <span>
#include <string>
#include <vector>

namespace rsde {

enum class SchemeKind { projection, jump_adapted, wz_hat, wz_bar, marcus_euler };

inline const char* to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::projection: return "projection";
    case SchemeKind::jump_adapted: return "jump-adapted";
    case SchemeKind::wz_hat: return "wz-hat";
    case SchemeKind::wz_bar: return "wz-bar";
    case SchemeKind::marcus_euler: return "marcus-euler";
  }
  return "?";
}

inline SchemeKind scheme_kind_from_string(const std::string& s) {
  for (auto k : {SchemeKind::projection, SchemeKind::jump_adapted, SchemeKind::wz_hat,
                 SchemeKind::wz_bar, SchemeKind::marcus_euler}) {
    if (s == to_string(k)) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown scheme '" + s + "'");
}

struct SchemeSpec {
  SchemeKind kind = SchemeKind::projection;
  Partition partition;
  FlowConfig flow{};
  int substeps_bar = 64;
  int jump_adapted_n = 0;  // 0: derive from the partition mesh
  std::vector<double> observation_times;
};

struct SchemeMeta {
  std::size_t steps = 0;
  std::size_t projections = 0;    // steps whose pre-projection point left the closure
  std::size_t boundary_hits = 0;  // partition points where X lies on the boundary
};

/// x, k and the internal input path y with x = y + k at every output time.
/// The running variations are accumulated at the scheme's internal
/// resolution, which can be finer than the output grid.
struct SchemeOutput : SkorokhodSolution {
  GridPath y;
  std::vector<double> x_variation;
  std::vector<double> y_variation;
  SchemeMeta meta;
};

namespace detail {

/// Collects output samples in time order.
class Recorder {
 public:
  Recorder(Interp interp, Eigen::Index d) : d_(d) {
    out_.x.interp = out_.k.interp = out_.y.interp = interp;
  }

  void push(double t, const Vec& x, const Vec& k, const Vec& y, double xv, double yv, double kv) {
    out_.x.times.push_back(t);
    out_.k.times.push_back(t);
    out_.y.times.push_back(t);
    out_.x.values.push_back(x);
    out_.k.values.push_back(k);
    out_.y.values.push_back(y);
    out_.x_variation.push_back(xv);
    out_.y_variation.push_back(yv);
    out_.k_variation.push_back(kv);
  }

  /// Marks a jump of x and k at the last recorded time (linear output only).
  void mark_jump(const Vec& push) {
    const double t = out_.x.times.back();
    out_.x.jumps.push_back({t, push});
    out_.k.jumps.push_back({t, push});
  }

  SchemeOutput finish(SchemeMeta meta) {
    out_.meta = meta;
    out_.pushes = meta.projections;
    return std::move(out_);
  }

 private:
  Eigen::Index d_;
  SchemeOutput out_;
};

/// Observation times strictly inside (a, b).
inline std::span<const double> obs_inside(std::span<const double> obs, double a, double b) {
  const auto lo = std::upper_bound(obs.begin(), obs.end(), a);
  const auto hi = std::lower_bound(lo, obs.end(), b);
  return {lo, hi};
}

inline void check_start(const Domain& domain, const Coefficient& f, const Vec& x0,
                        const GridPath& z, const SchemeSpec& spec) {
  require_dim(x0, domain.dimension(), "scheme x0");
  require(f.dimension() == domain.dimension() && z.dimension() == domain.dimension(),
          ErrorCode::DimensionMismatch, "domain, coefficient and driver dimensions differ");
  if (!domain.in_closure(x0)) {
    throw Error(ErrorCode::StartOutsideDomain, "x0 lies outside the domain closure");
  }
  spec.partition.validate();
  require(spec.partition.horizon() <= z.horizon() * (1.0 + 1e-12), ErrorCode::InvalidArgument,
          "partition extends beyond the driver horizon");
  require(std::is_sorted(spec.observation_times.begin(), spec.observation_times.end()),
          ErrorCode::InvalidArgument, "observation times must be sorted");
}

/// Jump-size restriction applied per step: |dZ| L < rho0.
inline void check_increment(const Domain& domain, const Coefficient& f, const Vec& dz,
                            const Vec& x, double t) {
  const double rho0 = domain.rho0();
  if (std::isinf(rho0)) return;
  const double L = std::isfinite(f.bounds().sup_f) ? f.bounds().sup_f : f(x).norm();
  if (dz.norm() * L >= rho0) {
    throw Error(ErrorCode::JumpTooLarge,
                "increment |dZ| = " + std::to_string(dz.norm()) + " at t = " + std::to_string(t) +
                    " violates |dZ| < rho0 / L = " + std::to_string(rho0 / L));
  }
}

inline bool on_boundary(const Domain& domain, const Vec& x) {
  return domain.contains(x) == Location::boundary;
}

/// Shared driver for the piecewise-constant schemes: `step` maps (X, dZ, cell)
/// to the pre-projection point.
template <class Step>
SchemeOutput run_step_scheme(const Domain& domain, const Coefficient& f, const Vec& x0,
                             const GridPath& z, const SchemeSpec& spec, Step&& step) {
  check_start(domain, f, x0, z, spec);
  const auto& pts = spec.partition.points;
  Recorder rec(Interp::cadlag_step, x0.size());
  SchemeMeta meta;
  Vec x = x0, k = Vec::Zero(x0.size()), y = x0;
  double xv = 0.0, yv = 0.0, kv = 0.0;
  rec.push(pts[0], x, k, y, xv, yv, kv);
  if (on_boundary(domain, x)) ++meta.boundary_hits;
  Vec z_prev = z.at(pts[0]);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    for (double t : obs_inside(spec.observation_times, pts[i], pts[i + 1])) {
      rec.push(t, x, k, y, xv, yv, kv);
    }
    const Vec z_next = z.at(pts[i + 1]);
    const Vec dz = z_next - z_prev;
    check_increment(domain, f, dz, x, pts[i + 1]);
    const Vec pre = step(x, dz, pts[i], pts[i + 1]);
    Reflection r = reflect(domain, pre);
    const Vec dy = pre - x;
    y += dy;
    yv += dy.norm();
    if (r.pushed) {
      ++meta.projections;
      k += r.push;
      kv += r.push.norm();
    }
    xv += (r.x - x).norm();
    x = std::move(r.x);
    ++meta.steps;
    if (on_boundary(domain, x)) ++meta.boundary_hits;
    rec.push(pts[i + 1], x, k, y, xv, yv, kv);
    z_prev = z_next;
  }
  return rec.finish(meta);
}

}  // namespace detail

inline SchemeOutput run_projection_scheme(const Domain& domain, const Coefficient& f,
                                          const Vec& x0, const GridPath& z,
                                          const SchemeSpec& spec) {
  return detail::run_step_scheme(domain, f, x0, z, spec,
                                 [&](const Vec& x, const Vec& dz, double, double) {
                                   return marcus_jump(f, dz, x, spec.flow);
                                 });
}

inline SchemeOutput run_jump_adapted_scheme(const Domain& domain, const Coefficient& f,
                                            const Vec& x0, const GridPath& z, int n,
                                            SchemeSpec spec) {
  spec.partition = jump_adapted_partition(z, n);
  return run_projection_scheme(domain, f, x0, z, spec);
}

/// Left limits at partition points coincide with the projection scheme's
/// pre-projection points, so partition-point values agree bitwise.
inline SchemeOutput run_wz_hat_scheme(const Domain& domain, const Coefficient& f, const Vec& x0,
                                      const GridPath& z, const SchemeSpec& spec) {
  detail::check_start(domain, f, x0, z, spec);
  const auto& pts = spec.partition.points;
  detail::Recorder rec(Interp::linear, x0.size());
  SchemeMeta meta;
  Vec x = x0, k = Vec::Zero(x0.size()), y = x0;
  double xv = 0.0, yv = 0.0, kv = 0.0;
  rec.push(pts[0], x, k, y, xv, yv, kv);
  if (detail::on_boundary(domain, x)) ++meta.boundary_hits;
  Vec z_prev = z.at(pts[0]);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec z_next = z.at(pts[i + 1]);
    const Vec dz = z_next - z_prev;
    detail::check_increment(domain, f, dz, x, pts[i + 1]);
    const auto field = [&](const Vec& v) -> Vec { return f(v) * dz; };
    const double width = pts[i + 1] - pts[i];
    const Vec start = x, y_start = y;
    Vec last = start;
    for (double t : detail::obs_inside(spec.observation_times, pts[i], pts[i + 1])) {
      const Vec v = dz.isZero(0.0) ? start : flow_to(field, start, (t - pts[i]) / width, spec.flow);
      xv += (v - last).norm();
      yv += (v - last).norm();
      last = v;
      rec.push(t, v, k, y_start + (v - start), xv, yv, kv);
    }
    const Vec left = marcus_jump(f, dz, start, spec.flow);
    xv += (left - last).norm();
    yv += (left - last).norm();
    y = y_start + (left - start);
    Reflection r = reflect(domain, left);
    if (r.pushed) {
      ++meta.projections;
      k += r.push;
      kv += r.push.norm();
      xv += r.push.norm();
    }
    x = std::move(r.x);
    ++meta.steps;
    if (detail::on_boundary(domain, x)) ++meta.boundary_hits;
    rec.push(pts[i + 1], x, k, y, xv, yv, kv);
    if (r.pushed) rec.mark_jump(r.push);
    z_prev = z_next;
  }
  return rec.finish(meta);
}

/// Reflected ODE along the linear interpolation of Z, solved in each cell by
/// substeps_bar projected Euler substeps; K accumulates the substep pushes.
inline SchemeOutput run_wz_bar_scheme(const Domain& domain, const Coefficient& f, const Vec& x0,
                                      const GridPath& z, const SchemeSpec& spec) {
  detail::check_start(domain, f, x0, z, spec);
  require(spec.substeps_bar >= 1, ErrorCode::InvalidArgument, "substeps_bar must be >= 1");
  const auto& pts = spec.partition.points;
  const int m = spec.substeps_bar;
  detail::Recorder rec(Interp::linear, x0.size());
  SchemeMeta meta;
  Vec x = x0, k = Vec::Zero(x0.size()), y = x0;
  double xv = 0.0, yv = 0.0, kv = 0.0;
  rec.push(pts[0], x, k, y, xv, yv, kv);
  if (detail::on_boundary(domain, x)) ++meta.boundary_hits;
  Vec z_prev = z.at(pts[0]);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec z_next = z.at(pts[i + 1]);
    const Vec inc = (z_next - z_prev) / m;
    const double width = pts[i + 1] - pts[i];
    const auto obs = detail::obs_inside(spec.observation_times, pts[i], pts[i + 1]);
    auto next_obs = obs.begin();
    for (int s = 0; s < m; ++s) {
      // observations see the state at the last substep boundary before them
      const double sub_end = pts[i] + width * (s + 1) / m;
      while (next_obs != obs.end() && *next_obs < sub_end) {
        rec.push(*next_obs++, x, k, y, xv, yv, kv);
      }
      const Vec dy = f(x) * inc;
      Reflection r = reflect(domain, x + dy);
      y += dy;
      yv += dy.norm();
      if (r.pushed) {
        ++meta.projections;
        k += r.push;
        kv += r.push.norm();
      }
      xv += (r.x - x).norm();
      x = std::move(r.x);
    }
    ++meta.steps;
    if (detail::on_boundary(domain, x)) ++meta.boundary_hits;
    rec.push(pts[i + 1], x, k, y, xv, yv, kv);
    z_prev = z_next;
  }
  return rec.finish(meta);
}

/// One step per cell: X + f(X) dZ^c + 1/2 f'f(X) dZ^c dZ^c^T, plus
/// phi(f J, X) - X for the recorded jumps J inside the cell, then projection.
inline SchemeOutput run_marcus_euler(const Domain& domain, const Coefficient& f, const Vec& x0,
                                     const GridPath& z, const SchemeSpec& spec) {
  return detail::run_step_scheme(
      domain, f, x0, z, spec, [&](const Vec& x, const Vec& dz, double t0, double t1) {
        const Vec jumps = jumps_between(z, t0, t1);
        const Vec dzc = dz - jumps;
        Vec pre = x + f(x) * dzc + 0.5 * f.ffprime_contract(x, dzc * dzc.transpose());
        if (!jumps.isZero(0.0)) pre += marcus_jump(f, jumps, x, spec.flow) - x;
        return pre;
      });
}

inline SchemeOutput run_scheme(const Domain& domain, const Coefficient& f, const Vec& x0,
                               const GridPath& z, const SchemeSpec& spec) {
  switch (spec.kind) {
    case SchemeKind::projection: return run_projection_scheme(domain, f, x0, z, spec);
    case SchemeKind::jump_adapted: {
      const int n = spec.jump_adapted_n > 0
                        ? spec.jump_adapted_n
                        : static_cast<int>(std::lround(1.0 / spec.partition.mesh()));
      return run_jump_adapted_scheme(domain, f, x0, z, n, spec);
    }
    case SchemeKind::wz_hat: return run_wz_hat_scheme(domain, f, x0, z, spec);
    case SchemeKind::wz_bar: return run_wz_bar_scheme(domain, f, x0, z, spec);
    case SchemeKind::marcus_euler: return run_marcus_euler(domain, f, x0, z, spec);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown scheme kind");
}

/// Flow settings used for reference solutions.
inline FlowConfig reference_flow_config() { return FlowConfig{256, false}; }

/// Ground truth for convergence studies: the projection step on the driver
/// grid with every cell split `refine` times, merged with the experimental
/// partitions. All recorded jump times are driver grid points, so large jumps
/// are isolated exactly.
inline SchemeOutput build_reference(const Domain& domain, const Coefficient& f, const Vec& x0,
                                    const GridPath& z, int refine,
                                    std::span<const Partition> experimental = {},
                                    const FlowConfig& flow = reference_flow_config(),
                                    std::vector<double> observation_times = {}) {
  require(refine >= 1, ErrorCode::InvalidArgument, "refine must be >= 1");
  std::vector<double> pts;
  pts.reserve(z.size() * static_cast<std::size_t>(refine));
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    const double a = z.times[i], b = z.times[i + 1];
    for (int s = 0; s < refine; ++s) pts.push_back(a + (b - a) * s / refine);
  }
  pts.push_back(z.horizon());
  for (const auto& p : experimental) {
    std::vector<double> clipped;
    for (double t : p.points)
      if (t <= z.horizon()) clipped.push_back(t);
    pts = merge_times(pts, clipped);
  }
  SchemeSpec spec;
  spec.kind = SchemeKind::projection;
  spec.partition.points = std::move(pts);
  spec.flow = flow;
  spec.observation_times = std::move(observation_times);
  SchemeOutput ref = run_projection_scheme(domain, f, x0, z, spec);
  // a continuous driver has a continuous solution: interpolate the reference
  // linearly instead of holding values over the refined cells
  if (z.interp == Interp::linear && z.jumps.empty()) {
    ref.x.interp = ref.k.interp = ref.y.interp = Interp::linear;
  }
  return ref;
}

}  // namespace rsde
