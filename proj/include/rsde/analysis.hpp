#pragma once

// Error metrics, Monte Carlo convergence studies, the jump counterexample
// for reflected Wong-Zakai approximations, and variation reports.

#include "rsde/driver.hpp"
#include "rsde/flow.hpp"
#include "rsde/geometry.hpp"
#include "rsde/rng.hpp"
#include "rsde/schemes.hpp"
#include "rsde/skorokhod.hpp"

#include <atomic>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace rsde {

// sup errors -----------------------------------------------------------------

enum class ErrorMode { uniform, grid_points_of_a, fixed_times };

/// Max distance between two paths over [0, horizon]. In uniform mode both
/// right values and left limits are compared at every grid time of either
/// path; between those times the difference is affine, so this is the exact
/// supremum.
inline double sup_error(const GridPath& a, const GridPath& b, double horizon,
                        ErrorMode mode = ErrorMode::uniform,
                        std::span<const double> fixed_times = {}) {
  const double slack = 1e-9 * (1.0 + horizon);
  if (a.horizon() < horizon - slack || b.horizon() < horizon - slack) {
    throw Error(ErrorCode::InvalidArgument, "sup_error: a path does not cover the horizon");
  }
  require(a.dimension() == b.dimension(), ErrorCode::DimensionMismatch, "sup_error dimensions");
  double worst = 0.0;
  const auto right = [&](double t) { worst = std::max(worst, (a.at(t) - b.at(t)).norm()); };
  switch (mode) {
    case ErrorMode::uniform:
      for (double t : merge_times(a.times, b.times, 0.0)) {
        if (t > horizon) break;
        right(t);
        if (t > 0.0) worst = std::max(worst, (a.left_limit(t) - b.left_limit(t)).norm());
      }
      break;
    case ErrorMode::grid_points_of_a:
      for (double t : a.times) {
        if (t > horizon) break;
        right(t);
      }
      break;
    case ErrorMode::fixed_times:
      for (double t : fixed_times) {
        if (t <= horizon) right(t);
      }
      break;
  }
  return worst;
}

/// Linear-interpolated quantile (q in [0, 1]) of a non-empty sample.
inline double quantile(std::vector<double> v, double q) {
  require(!v.empty(), ErrorCode::InvalidArgument, "quantile of empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

struct LineFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double r2 = std::numeric_limits<double>::quiet_NaN();
  bool defined() const { return std::isfinite(slope); }
};

/// Least squares of log2(err) on log2(mesh); rows with err <= 0 are skipped.
inline LineFit fit_rate(std::span<const double> mesh, std::span<const double> err) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    if (err[i] > 0.0 && std::isfinite(err[i])) {
      xs.push_back(std::log2(mesh[i]));
      ys.push_back(std::log2(err[i]));
    }
  }
  LineFit fit;
  if (xs.size() < 2) return fit;
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

// experiments ------------------------------------------------------------------

enum class ReferenceKind { numerical, closed_form_exponential };

enum class ObservationKind { partition_only, driver_grid, explicit_times };

struct ExperimentConfig {
  Domain domain = Domain::half_space(Vec::Ones(1), 0.0);
  Coefficient coefficient = Coefficient::constant(Mat::Identity(1, 1));
  DriverSpec driver{};
  SchemeKind scheme = SchemeKind::projection;
  FlowConfig flow{};
  int substeps_bar = 64;
  Vec x0 = Vec::Ones(1);
  double horizon = 1.0;
  std::vector<double> mesh_ladder;
  int n_paths = 1;
  std::uint64_t seed = 1;
  ReferenceKind reference = ReferenceKind::numerical;
  int refine = 4;
  FlowConfig reference_flow = reference_flow_config();
  ObservationKind observation = ObservationKind::driver_grid;
  std::vector<double> observation_times;
  std::string output_dir = "out";
  int jobs = 0;  // 0: hardware concurrency

  void validate() const {
    require(horizon > 0.0, ErrorCode::InvalidArgument, "horizon must be positive");
    require(driver.horizon >= horizon, ErrorCode::InvalidArgument,
            "driver horizon must cover the experiment horizon");
    require(!mesh_ladder.empty(), ErrorCode::InvalidArgument, "mesh ladder is empty");
    for (std::size_t i = 0; i < mesh_ladder.size(); ++i) {
      require(mesh_ladder[i] > 0.0, ErrorCode::InvalidArgument, "meshes must be positive");
      require(i == 0 || mesh_ladder[i] < mesh_ladder[i - 1], ErrorCode::InvalidArgument,
              "mesh ladder must be strictly decreasing");
    }
    require(n_paths >= 1, ErrorCode::InvalidArgument, "n_paths must be >= 1");
    require(refine >= 1, ErrorCode::InvalidArgument, "refine must be >= 1");
    require(substeps_bar >= 1 && flow.substeps >= 1, ErrorCode::InvalidArgument,
            "substep counts must be >= 1");
    require(x0.size() == domain.dimension() && coefficient.dimension() == domain.dimension() &&
                driver.dimension == domain.dimension(),
            ErrorCode::DimensionMismatch, "x0, coefficient, driver and domain dimensions differ");
    require(domain.in_closure(x0), ErrorCode::StartOutsideDomain, "x0 outside the domain closure");
    if (reference == ReferenceKind::closed_form_exponential) {
      require(coefficient.kind() == CoefficientKind::linear_diagonal, ErrorCode::InvalidArgument,
              "closed-form exponential reference needs a linear-diagonal coefficient");
    }
  }

  std::size_t worker_count() const {
    if (jobs > 0) return static_cast<std::size_t>(jobs);
    return std::max(1u, std::thread::hardware_concurrency());
  }

  Partition partition_for(double mesh) const { return Partition::uniform(horizon, mesh); }

  SchemeSpec scheme_spec(double mesh, const GridPath& z) const {
    SchemeSpec s;
    s.kind = scheme;
    s.partition = partition_for(mesh);
    s.flow = flow;
    s.substeps_bar = substeps_bar;
    s.jump_adapted_n = static_cast<int>(std::lround(1.0 / mesh));
    switch (observation) {
      case ObservationKind::partition_only: break;
      case ObservationKind::driver_grid:
        for (double t : z.times)
          if (t <= horizon) s.observation_times.push_back(t);
        break;
      case ObservationKind::explicit_times: s.observation_times = observation_times; break;
    }
    return s;
  }
};

/// Runs `work(i)` for i in [0, n) on `workers` threads. Every index writes
/// only its own slot, so results do not depend on scheduling.
template <class Work>
void parallel_for(std::size_t n, std::size_t workers, Work&& work) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) work(i);
    });
  }
  for (auto& t : pool) t.join();
}

/// x0 * exp(scale Z_t) componentwise: the exact solution for the
/// linear-diagonal coefficient while the path stays away from the boundary.
inline GridPath exponential_solution(const Vec& x0, double scale, const GridPath& z) {
  GridPath out;
  out.times = z.times;
  out.interp = z.interp;
  out.values.reserve(z.size());
  for (const auto& v : z.values) out.values.push_back(x0.cwiseProduct((scale * v).array().exp().matrix()));
  return out;
}

inline GridPath zero_path_like(const GridPath& z) {
  GridPath out;
  out.times = z.times;
  out.interp = Interp::cadlag_step;
  out.values.assign(z.size(), Vec::Zero(z.dimension()));
  return out;
}

struct PathErrors {
  double uniform = 0.0;
  double grid = 0.0;
  double k = 0.0;
  double k_variation = 0.0;
  bool ok = false;
  std::string error;
};

struct RateRow {
  double mesh = 0.0;
  double err_unif_med = 0.0;
  double err_unif_p90 = 0.0;
  double err_grid_med = 0.0;
  double err_grid_p90 = 0.0;
  double k_err_med = 0.0;
  double kvar_med = 0.0;
  double kvar_max = 0.0;
  double slope_partial = std::numeric_limits<double>::quiet_NaN();
  std::size_t failures = 0;
};

struct RateTable {
  std::vector<RateRow> rows;
  LineFit fit;
  int n_paths = 0;
  std::vector<std::string> failure_messages;  // first failure per path index, in index order
};

/// Per-path errors of the configured scheme against the reference, for
/// every mesh of the ladder. Index = mesh index.
inline std::vector<PathErrors> study_path(const ExperimentConfig& cfg, std::size_t path_index) {
  std::vector<PathErrors> out(cfg.mesh_ladder.size());
  const auto seed = derive_seed(cfg.seed, path_index);
  GridPath z;
  SchemeOutput ref;
  try {
    z = make_driver(cfg.driver, seed);
    if (cfg.reference == ReferenceKind::closed_form_exponential) {
      ref.x = exponential_solution(cfg.x0, cfg.coefficient.params().at(0), z);
      ref.k = zero_path_like(z);
    } else {
      std::vector<Partition> parts;
      for (double h : cfg.mesh_ladder) parts.push_back(cfg.partition_for(h));
      ref = build_reference(cfg.domain, cfg.coefficient, cfg.x0, z, cfg.refine, parts,
                            cfg.reference_flow);
    }
  } catch (const Error& e) {
    for (auto& o : out) o.error = std::string("reference: ") + e.what();
    return out;
  }
  for (std::size_t m = 0; m < cfg.mesh_ladder.size(); ++m) {
    auto& o = out[m];
    try {
      const auto spec = cfg.scheme_spec(cfg.mesh_ladder[m], z);
      const auto run = run_scheme(cfg.domain, cfg.coefficient, cfg.x0, z, spec);
      o.uniform = sup_error(run.x, ref.x, cfg.horizon, ErrorMode::uniform);
      o.grid = sup_error(run.x, ref.x, cfg.horizon, ErrorMode::fixed_times,
                         spec.kind == SchemeKind::jump_adapted
                             ? std::span<const double>(jump_adapted_partition(z, spec.jump_adapted_n).points)
                             : std::span<const double>(spec.partition.points));
      o.k = sup_error(run.k, ref.k, cfg.horizon, ErrorMode::uniform);
      o.k_variation = run.k_variation.back();
      o.ok = true;
    } catch (const Error& e) {
      o.error = e.what();
    }
  }
  return out;
}

inline RateTable summarize(const ExperimentConfig& cfg,
                           const std::vector<std::vector<PathErrors>>& per_path) {
  RateTable table;
  table.n_paths = cfg.n_paths;
  for (std::size_t p = 0; p < per_path.size(); ++p) {
    for (const auto& e : per_path[p]) {
      if (!e.ok) {
        table.failure_messages.push_back("path " + std::to_string(p) + ": " + e.error);
        break;
      }
    }
  }
  for (std::size_t m = 0; m < cfg.mesh_ladder.size(); ++m) {
    RateRow row;
    row.mesh = cfg.mesh_ladder[m];
    std::vector<double> u, g, k, kv;
    for (const auto& path : per_path) {
      const auto& e = path[m];
      if (!e.ok) {
        ++row.failures;
        continue;
      }
      u.push_back(e.uniform);
      g.push_back(e.grid);
      k.push_back(e.k);
      kv.push_back(e.k_variation);
    }
    if (!u.empty()) {
      row.err_unif_med = median(u);
      row.err_unif_p90 = quantile(u, 0.9);
      row.err_grid_med = median(g);
      row.err_grid_p90 = quantile(g, 0.9);
      row.k_err_med = median(k);
      row.kvar_med = median(kv);
      row.kvar_max = *std::max_element(kv.begin(), kv.end());
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.err_unif_med = row.err_unif_p90 = row.err_grid_med = row.err_grid_p90 = nan;
      row.k_err_med = row.kvar_med = row.kvar_max = nan;
    }
    if (!table.rows.empty()) {
      const auto& prev = table.rows.back();
      if (prev.err_unif_med > 0.0 && row.err_unif_med > 0.0) {
        row.slope_partial =
            std::log2(row.err_unif_med / prev.err_unif_med) / std::log2(row.mesh / prev.mesh);
      }
    }
    table.rows.push_back(row);
  }
  std::vector<double> meshes, errs;
  for (const auto& r : table.rows) {
    meshes.push_back(r.mesh);
    errs.push_back(r.err_unif_med);
  }
  table.fit = fit_rate(meshes, errs);
  return table;
}

/// Monte Carlo study: median and 90th percentile of sup errors against the
/// reference for every mesh. Deterministic in cfg.seed for any worker count.
inline RateTable convergence_study(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<std::vector<PathErrors>> per_path(static_cast<std::size_t>(cfg.n_paths));
  parallel_for(per_path.size(), cfg.worker_count(),
               [&](std::size_t i) { per_path[i] = study_path(cfg, i); });
  return summarize(cfg, per_path);
}

// jump counterexample ---------------------------------------------------------

struct Remark4Setup {
  Domain domain;
  Coefficient coefficient;
  Vec x0;
  Vec jump;
  double jump_time = 1.0;
  double horizon = 2.0;

  /// Unit disk, f = identity, x0 = (1, 0), jump (0, 1): a tangential push.
  static Remark4Setup disk() {
    return {Domain::ball(Vec::Zero(2), 1.0), Coefficient::constant(Mat::Identity(2, 2)),
            (Vec(2) << 1.0, 0.0).finished(), (Vec(2) << 0.0, 1.0).finished()};
  }

  /// Half-line [0, inf), f = -1, x0 = 0.5, jump 1.
  static Remark4Setup half_line() {
    return {Domain::half_space(Vec::Ones(1), 0.0), Coefficient::constant(-Mat::Identity(1, 1)),
            Vec::Constant(1, 0.5), Vec::Ones(1)};
  }
};

/// Endpoint of the reflected constant-speed tangential motion on the unit
/// circle started at (1, 0): angle arctan(sinh 1).
inline Vec disk_gudermannian_endpoint() {
  const double theta = std::atan(std::sinh(1.0));
  return (Vec(2) << std::cos(theta), std::sin(theta)).finished();
}

struct Remark4Row {
  double mesh;
  int substeps;
  Vec bar_endpoint;
  Vec projection_endpoint;
  double gap;
};

struct Remark4Report {
  std::vector<Remark4Row> rows;
  Vec projection_endpoint;
  Vec bar_endpoint;            // finest mesh, most substeps
  double gap = 0.0;            // at the finest setting
  double integrator_tol = 0.0; // |bar(M_max) - bar(M_max / 2)| at the finest mesh
  double gap_spread = 0.0;     // max |gap(h) - gap(h/2)| at the largest substep count
  bool gap_stable = false;     // spread < 1e-3
  bool gap_significant = false;  // gap > 10 * integrator_tol
};

inline Remark4Report remark4_report(const Remark4Setup& setup, std::span<const double> meshes,
                                    std::span<const int> substeps) {
  require(!meshes.empty() && !substeps.empty(), ErrorCode::InvalidArgument,
          "remark4_report needs mesh and substep ladders");
  const GridPath z = single_jump_driver(setup.horizon, setup.jump_time, setup.jump);
  Remark4Report rep;
  std::vector<double> finest_gaps;
  for (double h : meshes) {
    SchemeSpec spec;
    spec.partition = Partition::uniform(setup.horizon, h);
    spec.flow = reference_flow_config();
    const auto proj = run_projection_scheme(setup.domain, setup.coefficient, setup.x0, z, spec);
    for (int m : substeps) {
      spec.substeps_bar = m;
      const auto bar = run_wz_bar_scheme(setup.domain, setup.coefficient, setup.x0, z, spec);
      const Vec be = bar.x.values.back();
      const Vec pe = proj.x.values.back();
      rep.rows.push_back({h, m, be, pe, (be - pe).norm()});
    }
    finest_gaps.push_back(rep.rows.back().gap);
  }
  const auto& last = rep.rows.back();
  rep.bar_endpoint = last.bar_endpoint;
  rep.projection_endpoint = last.projection_endpoint;
  rep.gap = last.gap;
  if (substeps.size() >= 2) {
    rep.integrator_tol = (rep.rows[rep.rows.size() - 1].bar_endpoint -
                          rep.rows[rep.rows.size() - 2].bar_endpoint)
                             .norm();
  }
  for (std::size_t i = 1; i < finest_gaps.size(); ++i) {
    rep.gap_spread = std::max(rep.gap_spread, std::abs(finest_gaps[i] - finest_gaps[i - 1]));
  }
  rep.gap_stable = rep.gap_spread < 1e-3;
  rep.gap_significant = rep.gap > 10.0 * rep.integrator_tol;
  return rep;
}

// variation --------------------------------------------------------------------

/// Running variation at time t (last recorded time <= t).
inline double running_at(const GridPath& grid, const std::vector<double>& running, double t) {
  return running[grid.index_at(t)];
}

struct VariationReport {
  Lemma1Report lemma1;
  double k_total = 0.0;  // |K|_q
};

/// The inequalities |k| <= |y| and |x| <= 2|y| per interval, using the scheme's internal-resolution
/// variations, plus |K| over the whole horizon.
inline VariationReport variation_report(const SchemeOutput& out, std::span<const Interval> intervals,
                                        double rel_tol = 1e-9) {
  VariationReport rep;
  for (const auto& iv : intervals) {
    const auto diff = [&](const std::vector<double>& run) {
      return running_at(out.x, run, iv.to) - running_at(out.x, run, iv.from);
    };
    rep.lemma1.rows.push_back(
        lemma1_row(iv, diff(out.y_variation), diff(out.k_variation), diff(out.x_variation), rel_tol));
  }
  rep.k_total = out.k_variation.back();
  return rep;
}

/// |K|_q across a mesh ladder. Boundedness in probability has no finite-sample
/// test; the "within factor" flag is a heuristic.
struct VariationLadder {
  std::vector<double> k_totals;
  double max_k_total = 0.0;
  double ratio_to_coarsest = 0.0;
  bool within_factor = false;
  static constexpr bool heuristic = true;
};

inline VariationLadder variation_ladder(std::span<const SchemeOutput> runs, double factor = 2.0) {
  VariationLadder lad;
  for (const auto& r : runs) lad.k_totals.push_back(r.k_variation.back());
  if (lad.k_totals.empty()) return lad;
  lad.max_k_total = *std::max_element(lad.k_totals.begin(), lad.k_totals.end());
  const double coarse = lad.k_totals.front();
  lad.ratio_to_coarsest = coarse > 0.0 ? lad.max_k_total / coarse : (lad.max_k_total > 0.0 ? kInf : 1.0);
  lad.within_factor = lad.ratio_to_coarsest <= factor;
  return lad;
}

}  // namespace rsde
