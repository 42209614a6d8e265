#pragma once

// Unit-time flows of autonomous vector fields, matrix coefficient fields,
// and the canonical (Marcus) jump map built from them.

#include "rsde/core.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rsde {

struct FlowConfig {
  int substeps = 32;
  /// Doubles substeps until two successive answers agree to adaptive_tol.
  bool adaptive = false;
  double adaptive_tol = 1e-12;
  int adaptive_max_substeps = 1 << 16;
};

inline constexpr double kBlowUpNorm = 1e12;

namespace detail {

template <class Field>
Vec rk4(const Field& g, Vec y, double u_end, int steps) {
  const double h = u_end / steps;
  for (int i = 0; i < steps; ++i) {
    const Vec k1 = g(y);
    const Vec k2 = g(Vec(y + 0.5 * h * k1));
    const Vec k3 = g(Vec(y + 0.5 * h * k2));
    const Vec k4 = g(Vec(y + h * k3));
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!y.allFinite() || y.norm() > kBlowUpNorm) {
      throw Error(ErrorCode::NonFinite, "flow trajectory left the finite-value region");
    }
  }
  return y;
}

}  // namespace detail

/// Solution at time u_end of dy/du = g(y), y(0) = x. The step count is
/// scaled with u_end so that flow_to(.., 1, ..) and flow(..) agree bitwise.
template <class Field>
Vec flow_to(const Field& g, const Vec& x, double u_end, const FlowConfig& cfg = {}) {
  require(cfg.substeps >= 1, ErrorCode::InvalidArgument, "flow substeps must be >= 1");
  if (u_end == 0.0) return x;
  const auto steps_for = [&](int n) {
    return std::max(1, static_cast<int>(std::ceil(n * std::abs(u_end) - 1e-9)));
  };
  if (!cfg.adaptive) return detail::rk4(g, x, u_end, steps_for(cfg.substeps));
  int n = cfg.substeps;
  Vec coarse = detail::rk4(g, x, u_end, steps_for(n));
  while (2 * n <= cfg.adaptive_max_substeps) {
    n *= 2;
    Vec fine = detail::rk4(g, x, u_end, steps_for(n));
    const bool done = (fine - coarse).norm() <= cfg.adaptive_tol * (1.0 + fine.norm());
    coarse = std::move(fine);
    if (done) break;
  }
  return coarse;
}

/// phi(g, x): value at u = 1 of dy/du = g(y), y(0) = x.
template <class Field>
Vec flow(const Field& g, const Vec& x, const FlowConfig& cfg = {}) {
  return flow_to(g, x, 1.0, cfg);
}

/// Sup-norm bounds of f and its derivatives over the working region, in the
/// Frobenius sense. infinity means "not known".
struct CoefficientBounds {
  double sup_f = kInf;
  double sup_fprime = kInf;
  double sup_ffprime = kInf;
  double lip_ffprime = kInf;
};

struct WorkingRegion {
  Vec center;
  double radius = kInf;
};

enum class CoefficientKind { constant_matrix, linear_diagonal, catalog_smooth, custom };

/// Matrix field f: R^d -> R^{d x d}.
class Coefficient {
 public:
  using Eval = std::function<Mat(const Vec&)>;
  /// Returns the d matrices df/dx_l, l = 0..d-1.
  using Deriv = std::function<std::vector<Mat>(const Vec&)>;

  static Coefficient constant(Mat m) {
    require(m.rows() == m.cols() && m.rows() > 0, ErrorCode::DimensionMismatch,
            "constant coefficient must be square");
    const auto d = m.rows();
    Coefficient c(CoefficientKind::constant_matrix, "constant-matrix", d);
    const double norm = m.norm();
    c.eval_ = [m = std::move(m)](const Vec&) { return m; };
    c.deriv_ = [d](const Vec&) { return std::vector<Mat>(d, Mat::Zero(d, d)); };
    c.bounds_ = {norm, 0.0, 0.0, 0.0};
    return c;
  }

  /// f(x) = scale * diag(x). Unbounded, so a working region is mandatory.
  static Coefficient linear_diagonal(Eigen::Index d, double scale, WorkingRegion region) {
    require(d > 0, ErrorCode::InvalidArgument, "dimension must be positive");
    require(std::isfinite(region.radius) && region.center.size() == d,
            ErrorCode::InvalidArgument, "linear-diagonal coefficient needs a bounded working region");
    Coefficient c(CoefficientKind::linear_diagonal, "linear-diagonal", d);
    c.params_ = {scale};
    c.eval_ = [scale](const Vec& x) { return Mat((scale * x).asDiagonal()); };
    c.deriv_ = [d, scale](const Vec&) {
      std::vector<Mat> out(d, Mat::Zero(d, d));
      for (Eigen::Index l = 0; l < d; ++l) out[l](l, l) = scale;
      return out;
    };
    const double reach = region.center.norm() + region.radius;
    const double s = std::abs(scale);
    // (f'f)_{iii} = scale^2 x_i
    c.bounds_ = {s * reach, s * std::sqrt(double(d)), s * s * reach, s * s * std::sqrt(double(d))};
    c.region_ = std::move(region);
    return c;
  }

  /// Built-in bounded smooth families with analytic derivatives:
  ///   "sin-diag":    f_ii = scale * sin(x_i)
  ///   "cos-coupled": f_ij = scale * cos(x_i - x_j)
  static Coefficient catalog(const std::string& id, Eigen::Index d, double scale) {
    require(d > 0, ErrorCode::InvalidArgument, "dimension must be positive");
    const double s = std::abs(scale);
    const double sd = std::sqrt(double(d));
    if (id == "sin-diag") {
      Coefficient c(CoefficientKind::catalog_smooth, id, d);
      c.params_ = {scale};
      c.eval_ = [scale](const Vec& x) { return Mat((scale * x.array().sin()).matrix().asDiagonal()); };
      c.deriv_ = [d, scale](const Vec& x) {
        std::vector<Mat> out(d, Mat::Zero(d, d));
        for (Eigen::Index l = 0; l < d; ++l) out[l](l, l) = scale * std::cos(x[l]);
        return out;
      };
      // (f'f)_{iii} = scale^2 sin(2 x_i) / 2
      c.bounds_ = {s * sd, s * sd, 0.5 * s * s * sd, s * s * sd};
      return c;
    }
    if (id == "cos-coupled") {
      Coefficient c(CoefficientKind::catalog_smooth, id, d);
      c.params_ = {scale};
      c.eval_ = [d, scale](const Vec& x) {
        Mat m(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
          for (Eigen::Index j = 0; j < d; ++j) m(i, j) = scale * std::cos(x[i] - x[j]);
        return m;
      };
      c.deriv_ = [d, scale](const Vec& x) {
        std::vector<Mat> out(d, Mat::Zero(d, d));
        for (Eigen::Index i = 0; i < d; ++i)
          for (Eigen::Index j = 0; j < d; ++j) {
            const double v = -scale * std::sin(x[i] - x[j]);
            out[i](i, j) += v;
            out[j](i, j) -= v;
          }
        return out;
      };
      const double dd = double(d);
      c.bounds_ = {s * dd, s * dd * std::sqrt(2.0), 2.0 * s * s * dd * sd,
                   4.0 * std::sqrt(2.0) * s * s * dd * sd};
      return c;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown catalog coefficient '" + id + "'");
  }

  static std::vector<std::string> catalog_ids() { return {"sin-diag", "cos-coupled"}; }

  /// User-supplied field; f'f falls back to central differences unless a
  /// derivative is given.
  static Coefficient custom(Eigen::Index d, Eval eval, std::optional<Deriv> deriv = std::nullopt,
                            CoefficientBounds bounds = {}) {
    Coefficient c(CoefficientKind::custom, "custom", d);
    c.eval_ = std::move(eval);
    if (deriv) c.deriv_ = std::move(*deriv);
    c.bounds_ = bounds;
    return c;
  }

  Eigen::Index dimension() const noexcept { return dim_; }
  CoefficientKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  const std::vector<double>& params() const noexcept { return params_; }
  const CoefficientBounds& bounds() const noexcept { return bounds_; }
  const std::optional<WorkingRegion>& working_region() const noexcept { return region_; }
  bool has_derivative() const noexcept { return static_cast<bool>(deriv_); }

  Mat operator()(const Vec& x) const {
    require_dim(x, dim_, "coefficient");
    return eval_(x);
  }

  std::vector<Mat> derivative(const Vec& x) const {
    require_dim(x, dim_, "coefficient derivative");
    if (deriv_) return deriv_(x);
    const double h = 1e-5 * (1.0 + x.norm());
    std::vector<Mat> out;
    out.reserve(dim_);
    for (Eigen::Index l = 0; l < dim_; ++l) {
      Vec xp = x, xm = x;
      xp[l] += h;
      xm[l] -= h;
      out.push_back((eval_(xp) - eval_(xm)) / (2.0 * h));
    }
    return out;
  }

  /// (f'f)_{ijm} = sum_l d f_ij / d x_l * f_lm, returned as d matrices
  /// indexed by i, each holding the (j, m) block.
  std::vector<Mat> ffprime(const Vec& x) const {
    const auto df = derivative(x);
    const Mat fx = (*this)(x);
    std::vector<Mat> out(dim_, Mat::Zero(dim_, dim_));
    for (Eigen::Index i = 0; i < dim_; ++i)
      for (Eigen::Index j = 0; j < dim_; ++j)
        for (Eigen::Index m = 0; m < dim_; ++m) {
          double acc = 0.0;
          for (Eigen::Index l = 0; l < dim_; ++l) acc += df[l](i, j) * fx(l, m);
          out[i](j, m) = acc;
        }
    return out;
  }

  /// Vector with components sum_{j,m} (f'f)_{ijm} q_{jm}.
  Vec ffprime_contract(const Vec& x, const Mat& q) const {
    const auto ff = ffprime(x);
    Vec out(dim_);
    for (Eigen::Index i = 0; i < dim_; ++i) out[i] = ff[i].cwiseProduct(q).sum();
    return out;
  }

 private:
  Coefficient(CoefficientKind kind, std::string name, Eigen::Index d)
      : kind_(kind), name_(std::move(name)), dim_(d) {}

  CoefficientKind kind_;
  std::string name_;
  Eigen::Index dim_;
  std::vector<double> params_;
  Eval eval_;
  Deriv deriv_;
  CoefficientBounds bounds_;
  std::optional<WorkingRegion> region_;
};

/// phi(f dz, x): the flow of the frozen field y -> f(y) dz at unit time.
inline Vec marcus_jump(const Coefficient& f, const Vec& dz, const Vec& x, const FlowConfig& cfg = {}) {
  require_dim(dz, f.dimension(), "marcus_jump dz");
  require_dim(x, f.dimension(), "marcus_jump x");
  require(dz.allFinite(), ErrorCode::NonFinite, "jump vector is not finite");
  if (dz.isZero(0.0)) return x;
  return flow([&](const Vec& y) -> Vec { return f(y) * dz; }, x, cfg);
}

/// phi(f dz, x) - x - f(x) dz.
inline Vec jump_defect(const Coefficient& f, const Vec& dz, const Vec& x, const FlowConfig& cfg = {}) {
  return marcus_jump(f, dz, x, cfg) - x - f(x) * dz;
}

/// C with |jump_defect| <= C |dz|^2 : sup|f'f| * exp(sup|f'| |dz|).
inline double jump_defect_constant(const Coefficient& f, double dz_norm) {
  const auto& b = f.bounds();
  return b.sup_ffprime * std::exp(b.sup_fprime * dz_norm);
}

/// Lipschitz constant in x of jump_defect / |dz|^2 : 1/2 Lip(f'f) exp(sup|f'| |dz|).
inline double jump_defect_lipschitz(const Coefficient& f, double dz_norm) {
  const auto& b = f.bounds();
  return 0.5 * b.lip_ffprime * std::exp(b.sup_fprime * dz_norm);
}

}  // namespace rsde
