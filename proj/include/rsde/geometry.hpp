#pragma once

// Domains in R^d with a uniform exterior-sphere constant and a uniform
// interior direction: membership, metric projection onto the closure,
// inward normals, and the quadratic normal-cone test.

#include "rsde/core.hpp"

#include <algorithm>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace rsde {

enum class Location { interior, boundary, outside };

inline const char* to_string(Location loc) {
  switch (loc) {
    case Location::interior: return "interior";
    case Location::boundary: return "boundary";
    case Location::outside: return "outside";
  }
  return "?";
}

struct DomainConstants {
  double rho0;   // exterior-sphere radius; +inf for convex domains
  double beta;   // >= 1
  double delta;  // > 0
};

/// Sentinel standing in for delta = +inf on convex domains.
inline constexpr double kConvexDelta = 1e300;

/// Open set {x : <normal, x> > offset}; normal is stored normalized.
struct HalfSpace {
  Vec normal;
  double offset = 0.0;
};

struct Ball {
  Vec center;
  double radius = 1.0;
};

struct Box {
  Vec lower;
  Vec upper;
};

/// Intersection of half-spaces.
struct Polyhedron {
  std::vector<HalfSpace> faces;
};

/// Complement of the closed ball; the only non-convex built-in.
struct ExteriorBall {
  Vec center;
  double radius = 1.0;
};

struct DykstraOptions {
  int max_cycles = 10000;
  double tol = 1e-12;
};

class Domain {
 public:
  using Shape = std::variant<HalfSpace, Ball, Box, Polyhedron, ExteriorBall>;

  static Domain half_space(Vec normal, double offset) {
    const double nn = normal.norm();
    require(nn > 0.0 && std::isfinite(nn), ErrorCode::InvalidArgument,
            "half-space normal must be nonzero");
    offset /= nn;
    normal /= nn;
    return Domain(HalfSpace{std::move(normal), offset});
  }

  static Domain ball(Vec center, double radius) {
    require(radius > 0.0, ErrorCode::InvalidArgument, "ball radius must be positive");
    return Domain(Ball{std::move(center), radius});
  }

  static Domain box(Vec lower, Vec upper) {
    require(lower.size() == upper.size() && lower.size() > 0, ErrorCode::DimensionMismatch,
            "box bounds must have equal positive dimension");
    require((upper.array() > lower.array()).all(), ErrorCode::InvalidArgument,
            "box needs lower < upper on every axis");
    return Domain(Box{std::move(lower), std::move(upper)});
  }

  static Domain polyhedron(std::vector<HalfSpace> faces) {
    require(!faces.empty(), ErrorCode::InvalidArgument, "polyhedron needs at least one face");
    const auto d = faces.front().normal.size();
    for (auto& f : faces) {
      require(f.normal.size() == d, ErrorCode::DimensionMismatch, "polyhedron face dimension");
      const double nn = f.normal.norm();
      require(nn > 0.0, ErrorCode::InvalidArgument, "polyhedron face normal must be nonzero");
      f.normal /= nn;
      f.offset /= nn;
    }
    return Domain(Polyhedron{std::move(faces)});
  }

  static Domain exterior_ball(Vec center, double radius) {
    require(radius > 0.0, ErrorCode::InvalidArgument, "exterior-ball radius must be positive");
    return Domain(ExteriorBall{std::move(center), radius});
  }

  const Shape& shape() const noexcept { return shape_; }
  Eigen::Index dimension() const noexcept { return dim_; }

  std::string kind_name() const {
    return std::visit(
        [](const auto& s) -> std::string {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, HalfSpace>) return "half-space";
          else if constexpr (std::is_same_v<S, Ball>) return "ball";
          else if constexpr (std::is_same_v<S, Box>) return "box";
          else if constexpr (std::is_same_v<S, Polyhedron>) return "convex-polyhedron";
          else return "exterior-of-ball";
        },
        shape_);
  }

  bool is_convex() const noexcept { return !std::holds_alternative<ExteriorBall>(shape_); }

  DomainConstants constants() const {
    if (const auto* e = std::get_if<ExteriorBall>(&shape_)) {
      return {e->radius, std::sqrt(2.0), e->radius / 2.0};
    }
    return {kInf, 1.0, kConvexDelta};
  }

  double rho0() const { return constants().rho0; }

  static double default_tol(const Vec& x) { return 1e-10 * (1.0 + x.norm()); }

  /// Positive outside (distance to the closure), negative inside (minus the
  /// distance to the boundary).
  double signed_distance(const Vec& x) const {
    require_dim(x, dim_, "signed_distance");
    return std::visit([&](const auto& s) { return signed_distance_impl(s, x); }, shape_);
  }

  double distance(const Vec& x) const { return std::max(0.0, signed_distance(x)); }

  /// tol < 0 selects the default band 1e-10 * (1 + |x|).
  Location contains(const Vec& x, double tol = -1.0) const {
    if (tol < 0.0) tol = default_tol(x);
    const double sd = signed_distance(x);
    if (sd > tol) return Location::outside;
    if (sd < -tol) return Location::interior;
    return Location::boundary;
  }

  bool in_closure(const Vec& x, double tol = -1.0) const {
    return contains(x, tol) != Location::outside;
  }

  /// Nearest point of the closure. Throws ProjectionOutOfRange when the
  /// distance to the closure reaches rho0.
  Vec project(const Vec& x) const {
    require_dim(x, dim_, "project");
    return std::visit([&](const auto& s) { return project_impl(s, x); }, shape_);
  }

  /// An inward unit normal at a boundary point. At polyhedral corners this is
  /// the normalized mean of the active face normals.
  Vec normal_cone_vector(const Vec& x, double tol = -1.0) const {
    require_dim(x, dim_, "normal_cone_vector");
    if (tol < 0.0) tol = default_tol(x);
    if (contains(x, tol) != Location::boundary) {
      throw Error(ErrorCode::NotOnBoundary, "point is not on the boundary");
    }
    return std::visit([&](const auto& s) { return normal_impl(s, x, tol); }, shape_);
  }

  DykstraOptions dykstra_options{};

 private:
  explicit Domain(Shape s) : shape_(std::move(s)) {
    dim_ = std::visit(
        [](const auto& v) -> Eigen::Index {
          using S = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<S, HalfSpace>) return v.normal.size();
          else if constexpr (std::is_same_v<S, Box>) return v.lower.size();
          else if constexpr (std::is_same_v<S, Polyhedron>) return v.faces.front().normal.size();
          else return v.center.size();
        },
        shape_);
    require(dim_ > 0, ErrorCode::InvalidArgument, "domain dimension must be positive");
  }

  // signed distance --------------------------------------------------------

  static double signed_distance_impl(const HalfSpace& h, const Vec& x) {
    return h.offset - h.normal.dot(x);
  }
  static double signed_distance_impl(const Ball& b, const Vec& x) {
    return (x - b.center).norm() - b.radius;
  }
  static double signed_distance_impl(const Box& b, const Vec& x) {
    const Vec clamped = x.cwiseMax(b.lower).cwiseMin(b.upper);
    const double out = (x - clamped).norm();
    if (out > 0.0) return out;
    const double depth =
        std::min((x - b.lower).minCoeff(), (b.upper - x).minCoeff());
    return -depth;
  }
  double signed_distance_impl(const Polyhedron& p, const Vec& x) const {
    double worst = -kInf;
    for (const auto& f : p.faces) worst = std::max(worst, f.offset - f.normal.dot(x));
    if (worst <= 0.0) return worst;
    return (x - dykstra(p, x)).norm();
  }
  static double signed_distance_impl(const ExteriorBall& e, const Vec& x) {
    return e.radius - (x - e.center).norm();
  }

  // projection ---------------------------------------------------------------

  static Vec project_impl(const HalfSpace& h, const Vec& x) {
    const double gap = h.offset - h.normal.dot(x);
    if (gap <= 0.0) return x;
    return x + gap * h.normal;
  }
  static Vec project_impl(const Ball& b, const Vec& x) {
    const Vec r = x - b.center;
    const double n = r.norm();
    if (n <= b.radius) return x;
    return b.center + (b.radius / n) * r;
  }
  static Vec project_impl(const Box& b, const Vec& x) {
    return x.cwiseMax(b.lower).cwiseMin(b.upper);
  }
  Vec project_impl(const Polyhedron& p, const Vec& x) const {
    bool inside = true;
    for (const auto& f : p.faces) {
      if (f.normal.dot(x) < f.offset) {
        inside = false;
        break;
      }
    }
    return inside ? x : dykstra(p, x);
  }
  static Vec project_impl(const ExteriorBall& e, const Vec& x) {
    const Vec r = x - e.center;
    const double n = r.norm();
    if (n >= e.radius) return x;
    // dist = radius - n reaches rho0 = radius only at the center
    if (n == 0.0) {
      throw Error(ErrorCode::ProjectionOutOfRange,
                  "point at the center of the removed ball has no unique projection");
    }
    return e.center + (e.radius / n) * r;
  }

  // Cyclic Dykstra over the faces.
  Vec dykstra(const Polyhedron& p, const Vec& x0) const {
    const auto m = p.faces.size();
    std::vector<Vec> corr(m, Vec::Zero(dim_));
    Vec x = x0;
    for (int cycle = 0; cycle < dykstra_options.max_cycles; ++cycle) {
      const Vec start = x;
      for (std::size_t i = 0; i < m; ++i) {
        const Vec y = x + corr[i];
        x = project_impl(p.faces[i], y);
        corr[i] = y - x;
      }
      if ((x - start).norm() <= dykstra_options.tol * (1.0 + x.norm())) break;
    }
    return x;
  }

  // normals ------------------------------------------------------------------

  static Vec normal_impl(const HalfSpace& h, const Vec&, double) { return h.normal; }
  static Vec normal_impl(const Ball& b, const Vec& x, double) {
    return (b.center - x).normalized();
  }
  static Vec normal_impl(const Box& b, const Vec& x, double tol) {
    Vec acc = Vec::Zero(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (std::abs(x[i] - b.lower[i]) <= tol) acc[i] += 1.0;
      if (std::abs(b.upper[i] - x[i]) <= tol) acc[i] -= 1.0;
    }
    return acc.normalized();
  }
  static Vec normal_impl(const Polyhedron& p, const Vec& x, double tol) {
    Vec acc = Vec::Zero(x.size());
    const HalfSpace* first = nullptr;
    for (const auto& f : p.faces) {
      if (std::abs(f.normal.dot(x) - f.offset) <= tol) {
        acc += f.normal;
        if (first == nullptr) first = &f;
      }
    }
    if (acc.norm() < 1e-14) return first->normal;
    return acc.normalized();
  }
  static Vec normal_impl(const ExteriorBall& e, const Vec& x, double) {
    return (x - e.center).normalized();
  }

  Shape shape_;
  Eigen::Index dim_ = 0;
};

/// True iff <y - x, n> + |y - x|^2 / (2r) >= -tol for every sample y.
/// r = +inf drops the quadratic term.
inline bool verify_normal_inequality(const Vec& x, const Vec& n, double r,
                                     std::span<const Vec> samples, double tol = 1e-12) {
  for (const auto& y : samples) {
    const Vec dy = y - x;
    const double quad = std::isinf(r) ? 0.0 : dy.squaredNorm() / (2.0 * r);
    if (dy.dot(n) + quad < -tol) return false;
  }
  return true;
}

}  // namespace rsde
