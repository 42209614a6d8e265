#pragma once

// Sampled driving paths: Brownian and compound-Poisson generators,
// discretization onto partitions, linear interpolation, jump-adapted
// partitions and the discrete quadratic variation split.

#include "rsde/core.hpp"
#include "rsde/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

namespace rsde {

enum class Interp { cadlag_step, linear };

struct Jump {
  double time;
  Vec size;
};

/// A path sampled on a strictly increasing time grid.
///
/// cadlag_step: value on [t_i, t_{i+1}) is values[i].
/// linear: straight segments between samples. A recorded jump at t_i makes
/// the segment ending at t_i aim for values[i] - size, so piecewise-linear
/// paths with projection jumps are representable too.
struct GridPath {
  std::vector<double> times;
  std::vector<Vec> values;
  Interp interp = Interp::cadlag_step;
  std::vector<Jump> jumps;  // sorted by time, each time is a grid time

  std::size_t size() const noexcept { return times.size(); }
  double horizon() const { return times.back(); }
  Eigen::Index dimension() const { return values.empty() ? 0 : values.front().size(); }

  void validate() const {
    require(!times.empty() && times.size() == values.size(), ErrorCode::InvalidArgument,
            "path needs matching non-empty times and values");
    require(times.front() == 0.0, ErrorCode::InvalidArgument, "path must start at t = 0");
    for (std::size_t i = 1; i < times.size(); ++i) {
      require(times[i] > times[i - 1], ErrorCode::InvalidArgument,
              "path times must be strictly increasing");
      require_dim(values[i], dimension(), "path value");
    }
    for (std::size_t j = 0; j < jumps.size(); ++j) {
      require(std::binary_search(times.begin(), times.end(), jumps[j].time),
              ErrorCode::InvalidArgument, "jump time is not a grid time");
      require(j == 0 || jumps[j].time > jumps[j - 1].time, ErrorCode::InvalidArgument,
              "jump times must be increasing");
    }
  }

  /// Index of the last grid time <= t (0 for t < 0).
  std::size_t index_at(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    return it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
  }

  const Jump* jump_at(double t) const {
    const auto it = std::lower_bound(jumps.begin(), jumps.end(), t,
                                     [](const Jump& j, double v) { return j.time < v; });
    return (it != jumps.end() && it->time == t) ? &*it : nullptr;
  }

  /// Right-continuous value; held constant past the horizon.
  Vec at(double t) const {
    const std::size_t i = index_at(t);
    if (interp == Interp::cadlag_step || i + 1 >= times.size() || t <= times[i]) return values[i];
    return segment(i, t);
  }

  Vec left_limit(double t) const {
    if (t <= times.front()) return values.front();
    const std::size_t i = index_at(t);
    if (times[i] != t) return at(t);
    if (interp == Interp::cadlag_step) return values[i - 1];
    const Jump* j = jump_at(t);
    return j ? Vec(values[i] - j->size) : values[i];
  }

 private:
  Vec segment(std::size_t i, double t) const {
    const double w = (t - times[i]) / (times[i + 1] - times[i]);
    const Jump* j = jump_at(times[i + 1]);
    const Vec end = j ? Vec(values[i + 1] - j->size) : values[i + 1];
    return values[i] + w * (end - values[i]);
  }
};

/// Sum of recorded jump vectors with time in (t0, t1].
inline Vec jumps_between(const GridPath& z, double t0, double t1) {
  Vec acc = Vec::Zero(z.dimension());
  for (const auto& j : z.jumps) {
    if (j.time > t0 && j.time <= t1) acc += j.size;
  }
  return acc;
}

struct Partition {
  std::vector<double> points;

  double horizon() const { return points.back(); }

  double mesh() const {
    double m = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) m = std::max(m, points[i] - points[i - 1]);
    return m;
  }

  void validate() const {
    require(points.size() >= 2 && points.front() == 0.0, ErrorCode::InvalidArgument,
            "partition must start at 0 and have at least one cell");
    for (std::size_t i = 1; i < points.size(); ++i) {
      require(points[i] > points[i - 1], ErrorCode::InvalidArgument,
              "partition points must be strictly increasing");
    }
  }

  /// {0, h, 2h, ...} capped with the horizon itself.
  static Partition uniform(double horizon, double mesh) {
    require(horizon > 0.0 && mesh > 0.0, ErrorCode::InvalidArgument,
            "uniform partition needs positive horizon and mesh");
    Partition p;
    for (std::size_t k = 0;; ++k) {
      const double t = static_cast<double>(k) * mesh;
      if (t >= horizon - 1e-12 * horizon) break;
      p.points.push_back(t);
    }
    p.points.push_back(horizon);
    return p;
  }
};

/// Sorted union; values closer than `merge_tol` to an earlier one are dropped.
inline std::vector<double> merge_times(std::span<const double> a, std::span<const double> b,
                                       double merge_tol = 1e-12) {
  std::vector<double> all;
  all.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(all));
  std::vector<double> out;
  out.reserve(all.size());
  for (double t : all) {
    if (out.empty() || t - out.back() > merge_tol * (1.0 + std::abs(t))) out.push_back(t);
  }
  return out;
}

// sampling ------------------------------------------------------------------

namespace detail {
inline constexpr std::uint64_t kBrownianStream = 0;
inline constexpr std::uint64_t kArrivalStream = 1;
inline constexpr std::uint64_t kJumpSizeStream = 2;

inline std::vector<double> uniform_times(double horizon, int steps) {
  std::vector<double> t(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) t[k] = horizon * k / steps;
  t.back() = horizon;
  return t;
}

inline std::vector<Vec> brownian_values(std::span<const double> times, Eigen::Index d,
                                        double scale, std::uint64_t seed) {
  CounterRng rng(seed, kBrownianStream);
  std::vector<Vec> v;
  v.reserve(times.size());
  v.push_back(Vec::Zero(d));
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double sd = std::sqrt(times[i] - times[i - 1]);
    Vec inc(d);
    for (Eigen::Index c = 0; c < d; ++c) inc[c] = sd * rng.normal();
    v.push_back(v.back() + scale * inc);
  }
  return v;
}
}  // namespace detail

/// Standard d-dimensional Brownian motion on a uniform grid.
inline GridPath sample_brownian(double horizon, int steps, Eigen::Index d, std::uint64_t seed) {
  require(horizon > 0.0 && steps >= 1 && d >= 1, ErrorCode::InvalidArgument,
          "sample_brownian: need horizon > 0, steps >= 1, d >= 1");
  GridPath z;
  z.times = detail::uniform_times(horizon, steps);
  z.values = detail::brownian_values(z.times, d, 1.0, seed);
  z.interp = Interp::linear;
  return z;
}

struct JumpLaw {
  enum class Kind { uniform_ball, fixed_vector };
  Kind kind = Kind::uniform_ball;
  double radius = 0.0;
  Vec vector;

  static JumpLaw uniform_ball(double r) { return {Kind::uniform_ball, r, {}}; }
  static JumpLaw fixed(Vec v) { return {Kind::fixed_vector, 0.0, std::move(v)}; }

  Vec draw(CounterRng& rng, Eigen::Index d) const {
    if (kind == Kind::fixed_vector) return vector;
    Vec dir(d);
    for (Eigen::Index c = 0; c < d; ++c) dir[c] = rng.normal();
    const double n = dir.norm();
    const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    return (r / n) * dir;
  }
};

/// Scaled Brownian motion plus compound Poisson jumps. Arrival times are
/// inserted into the uniform grid so every jump sits on a grid point. The
/// recorded size of a jump is the whole path increment at its grid point,
/// which keeps the record recoverable from the sampled values alone.
inline GridPath sample_jump_driver(double horizon, int steps, Eigen::Index d, double jump_rate,
                                   const JumpLaw& law, double diffusion_scale,
                                   std::uint64_t seed) {
  require(horizon > 0.0 && steps >= 1 && d >= 1, ErrorCode::InvalidArgument,
          "sample_jump_driver: need horizon > 0, steps >= 1, d >= 1");
  require(jump_rate >= 0.0 && std::isfinite(jump_rate), ErrorCode::InvalidArgument,
          "jump rate must be finite and nonnegative");
  require(std::isfinite(diffusion_scale), ErrorCode::InvalidArgument, "diffusion scale must be finite");
  if (law.kind == JumpLaw::Kind::fixed_vector) require_dim(law.vector, d, "fixed jump vector");
  else require(law.radius >= 0.0, ErrorCode::InvalidArgument, "jump radius must be nonnegative");

  std::vector<double> arrivals;
  if (jump_rate > 0.0) {
    CounterRng rng(seed, detail::kArrivalStream);
    for (double t = rng.exponential(jump_rate); t <= horizon; t += rng.exponential(jump_rate)) {
      arrivals.push_back(t);
    }
  }
  const auto grid = detail::uniform_times(horizon, steps);
  GridPath z;
  z.times = merge_times(grid, arrivals, 0.0);
  z.values = detail::brownian_values(z.times, d, diffusion_scale, seed);
  z.interp = Interp::cadlag_step;

  CounterRng sizes(seed, detail::kJumpSizeStream);
  Vec offset = Vec::Zero(d);
  std::size_t next = 0;
  for (std::size_t i = 0; i < z.times.size(); ++i) {
    while (next < arrivals.size() && arrivals[next] == z.times[i]) {
      const Vec s = law.draw(sizes, d);
      offset += s;
      if (!z.jumps.empty() && z.jumps.back().time == z.times[i]) z.jumps.back().size += s;
      else z.jumps.push_back({z.times[i], s});
      ++next;
    }
    z.values[i] += offset;
  }
  for (auto& j : z.jumps) {
    const auto i = z.index_at(j.time);
    j.size = z.values[i] - z.values[i - 1];
  }
  return z;
}

/// Z_t = size * 1{t >= jump_time} on {0, jump_time, horizon}.
inline GridPath single_jump_driver(double horizon, double jump_time, const Vec& size) {
  require(jump_time > 0.0 && jump_time < horizon, ErrorCode::InvalidArgument,
          "single jump must lie strictly inside (0, horizon)");
  GridPath z;
  z.times = {0.0, jump_time, horizon};
  z.values = {Vec::Zero(size.size()), size, size};
  z.interp = Interp::cadlag_step;
  if (!size.isZero(0.0)) z.jumps.push_back({jump_time, size});
  return z;
}

// transformations -------------------------------------------------------------

/// y^{rho}_t = y at the last partition point <= t.
inline GridPath discretize(const GridPath& z, const Partition& p) {
  GridPath out;
  out.times = p.points;
  out.interp = Interp::cadlag_step;
  out.values.reserve(p.points.size());
  for (double t : p.points) out.values.push_back(z.at(t));
  for (std::size_t i = 1; i < out.size(); ++i) {
    Vec inc = out.values[i] - out.values[i - 1];
    if (!inc.isZero(0.0)) out.jumps.push_back({out.times[i], std::move(inc)});
  }
  return out;
}

inline GridPath linear_interpolate(const GridPath& z, const Partition& p) {
  GridPath out;
  out.times = p.points;
  out.interp = Interp::linear;
  out.values.reserve(p.points.size());
  for (double t : p.points) out.values.push_back(z.at(t));
  return out;
}

/// Contains every recorded jump larger than 1/n; otherwise steps of 1/n
/// counted from the last forced jump time.
inline Partition jump_adapted_partition(const GridPath& z, int n) {
  require(n >= 1, ErrorCode::InvalidArgument, "jump_adapted_partition: n must be >= 1");
  const double h = 1.0 / n;
  const double horizon = z.horizon();
  std::vector<double> big;
  for (const auto& j : z.jumps) {
    if (j.size.norm() > h && j.time > 0.0) big.push_back(j.time);
  }
  Partition p;
  p.points.push_back(0.0);
  double anchor = 0.0;
  std::size_t steps_from_anchor = 0;
  std::size_t next_big = 0;
  while (p.points.back() < horizon) {
    const double cand = anchor + static_cast<double>(steps_from_anchor + 1) * h;
    double t = std::min(cand, horizon);
    bool forced = false;
    if (next_big < big.size() && big[next_big] <= t) {
      t = big[next_big++];
      forced = true;
    }
    if (horizon - t <= 1e-12 * horizon) t = horizon;
    if (t > p.points.back()) p.points.push_back(t);
    if (forced) {
      anchor = t;
      steps_from_anchor = 0;
    } else {
      ++steps_from_anchor;
    }
  }
  return p;
}

struct QuadraticVariation {
  GridPath total;       // sum |dZ|^2 over partition cells
  GridPath continuous;  // sum |dZ - jumps in cell|^2
  GridPath jump;        // sum over recorded jumps of |dZ_s|^2
};

inline QuadraticVariation quadratic_variation(const GridPath& z, const Partition& p) {
  QuadraticVariation qv;
  for (GridPath* g : {&qv.total, &qv.continuous, &qv.jump}) {
    g->times = p.points;
    g->interp = Interp::cadlag_step;
    g->values.assign(p.points.size(), Vec::Zero(1));
  }
  Vec prev = z.at(p.points.front());
  for (std::size_t i = 1; i < p.points.size(); ++i) {
    const Vec cur = z.at(p.points[i]);
    const Vec dz = cur - prev;
    double jsum = 0.0;
    Vec jvec = Vec::Zero(z.dimension());
    for (const auto& j : z.jumps) {
      if (j.time > p.points[i - 1] && j.time <= p.points[i]) {
        jsum += j.size.squaredNorm();
        jvec += j.size;
      }
    }
    qv.total.values[i][0] = qv.total.values[i - 1][0] + dz.squaredNorm();
    qv.continuous.values[i][0] = qv.continuous.values[i - 1][0] + (dz - jvec).squaredNorm();
    qv.jump.values[i][0] = qv.jump.values[i - 1][0] + jsum;
    prev = cur;
  }
  return qv;
}

/// Jump-size restriction |dZ| < rho0 / L on every recorded jump.
inline bool check_jump_condition(const GridPath& z, double sup_f, double rho0) {
  if (std::isinf(rho0) || sup_f <= 0.0) return true;
  const double bound = rho0 / sup_f;
  return std::all_of(z.jumps.begin(), z.jumps.end(),
                     [&](const Jump& j) { return j.size.norm() < bound; });
}

// catalog of drivers used by experiments ------------------------------------

struct DriverSpec {
  enum class Kind { brownian, jump, single_jump };
  Kind kind = Kind::brownian;
  double horizon = 1.0;
  int steps = 1024;
  Eigen::Index dimension = 1;
  double jump_rate = 0.0;
  JumpLaw jump_law{};
  double diffusion_scale = 1.0;
  double jump_time = 1.0;  // single_jump
  Vec jump_size;           // single_jump
};

inline GridPath make_driver(const DriverSpec& s, std::uint64_t seed) {
  switch (s.kind) {
    case DriverSpec::Kind::brownian: {
      GridPath z = sample_brownian(s.horizon, s.steps, s.dimension, seed);
      if (s.diffusion_scale != 1.0) {
        for (auto& v : z.values) v *= s.diffusion_scale;
      }
      return z;
    }
    case DriverSpec::Kind::jump:
      return sample_jump_driver(s.horizon, s.steps, s.dimension, s.jump_rate, s.jump_law,
                                s.diffusion_scale, seed);
    case DriverSpec::Kind::single_jump:
      return single_jump_driver(s.horizon, s.jump_time, s.jump_size);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown driver kind");
}

}  // namespace rsde
