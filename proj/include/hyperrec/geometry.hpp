// Copyright 2026 The hyperrec authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Poincare-ball kernel: distances, norms, inner products, origin exp/log
// maps, hyperbolic linear layers, and the analytic gradients the trainers
// consume. Everything is double precision. Points with curvature c > 0 live
// in the open ball c * ||x||^2 < 1; tangent vectors at the origin are
// unconstrained.
//
// Numerical guards, applied in this order where relevant:
//   artanh arguments are clamped to <= 1 - 1e-7 before evaluation,
//   arcosh arguments are clamped to >= 1 (the formula can dip below 1 only
//   by rounding, and d(u, u) must be exactly 0),
//   exp-map radii are clamped so sqrt(c) * ||exp(t)|| <= 1 - 1e-7.

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>

#include "hyperrec/common.hpp"

namespace hyperrec::geometry {

// Radial safety margin keeping points strictly inside the ball.
inline constexpr double kBoundaryEps = 1e-7;

inline double clamped_artanh(double x) {
  const double cap = 1.0 - kBoundaryEps;
  if (x > cap) x = cap;
  if (x < -cap) x = -cap;
  return std::atanh(x);
}

inline double clamped_arcosh(double x) {
  return std::acosh(x < 1.0 ? 1.0 : x);
}

// Curvature magnitude c > 0 of a ball of curvature -c. Validated once at
// construction so the kernels can use value() and sqrt() unchecked.
class Curvature {
 public:
  explicit Curvature(double c = 1.0) : c_(c), sqrt_c_(std::sqrt(c)) {
    require(std::isfinite(c) && c > 0.0, "curvature must be finite and positive, got " + format_double(c));
  }

  double value() const { return c_; }
  double sqrt() const { return sqrt_c_; }

  friend bool operator==(const Curvature& a, const Curvature& b) { return a.c_ == b.c_; }
  friend bool operator!=(const Curvature& a, const Curvature& b) { return a.c_ != b.c_; }

 private:
  double c_;
  double sqrt_c_;
};

// A validated point of the open ball c * ||x||^2 < 1. The raw kernels below
// accept plain vectors and trust the caller; this wrapper is the checked
// entry point for anything user-facing.
class BallPoint {
 public:
  BallPoint(Vec coords, Curvature c) : coords_(std::move(coords)), c_(c) {
    require(coords_.size() >= 1, "ball point must have dimension >= 1");
    require(coords_.allFinite(), "ball point has non-finite coordinates");
    require(c_.value() * coords_.squaredNorm() < 1.0,
            "point lies outside the ball: c * ||x||^2 = " +
                format_double(c_.value() * coords_.squaredNorm()));
  }

  static BallPoint origin(Index dim, Curvature c) { return BallPoint(Vec::Zero(dim), c); }

  const Vec& coords() const { return coords_; }
  Curvature curvature() const { return c_; }
  Index dim() const { return coords_.size(); }

 private:
  Vec coords_;
  Curvature c_;
};

namespace detail {

inline void check_pair(const BallPoint& u, const BallPoint& v) {
  require(u.dim() == v.dim(), "dimension mismatch: " + std::to_string(u.dim()) + " vs " +
                                  std::to_string(v.dim()));
  require(u.curvature() == v.curvature(), "curvature mismatch: " + format_double(u.curvature().value()) +
                                              " vs " + format_double(v.curvature().value()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Raw kernels. Callers guarantee in-ball inputs and matching shapes.
// ---------------------------------------------------------------------------

// Geodesic distance. d(u, v) = arcosh(1 + 2c||u-v||^2 / ((1-c||u||^2)(1-c||v||^2))) / sqrt(c).
template <class DU, class DV>
double poincare_distance(const Eigen::MatrixBase<DU>& u, const Eigen::MatrixBase<DV>& v,
                         const Curvature& c) {
  const double alpha = 1.0 - c.value() * u.squaredNorm();
  const double beta = 1.0 - c.value() * v.squaredNorm();
  const double delta = c.value() * (u - v).squaredNorm();
  const double gamma = 1.0 + 2.0 * delta / (alpha * beta);
  return clamped_arcosh(gamma) / c.sqrt();
}

// Conformal factor lambda_x = 2 / (1 - c||x||^2).
template <class DX>
double conformal_factor(const Eigen::MatrixBase<DX>& x, const Curvature& c) {
  return 2.0 / (1.0 - c.value() * x.squaredNorm());
}

// Distance to the origin; collapses to a radial formula.
template <class DU>
double hyperbolic_norm(const Eigen::MatrixBase<DU>& u, const Curvature& c) {
  return 2.0 / c.sqrt() * clamped_artanh(c.sqrt() * u.norm());
}

// ||u||_D * ||v||_D * cos(angle(u, v)), the distance-scaled inner product.
// Either argument at the origin gives 0 (the angle degenerates there).
template <class DU, class DV>
double hyperbolic_inner(const Eigen::MatrixBase<DU>& u, const Eigen::MatrixBase<DV>& v,
                        const Curvature& c) {
  const double ru = u.norm();
  const double rv = v.norm();
  if (ru == 0.0 || rv == 0.0) return 0.0;
  double cosang = u.dot(v) / (ru * rv);
  if (cosang > 1.0) cosang = 1.0;
  if (cosang < -1.0) cosang = -1.0;
  return hyperbolic_norm(u, c) * hyperbolic_norm(v, c) * cosang;
}

// exp map at the origin: t -> tanh(sqrt(c)||t||) * t / (sqrt(c)||t||).
// The output radius is clamped strictly inside the ball.
template <class DT>
Vec exp_map_origin(const Eigen::MatrixBase<DT>& t, const Curvature& c) {
  const double s = t.norm();
  if (s == 0.0) return Vec::Zero(t.size());
  const double x = c.sqrt() * s;
  double th = std::tanh(x);
  const double cap = 1.0 - kBoundaryEps;
  if (th > cap) th = cap;
  return t * (th / x);
}

// log map at the origin: u -> artanh(sqrt(c)||u||) * u / (sqrt(c)||u||).
template <class DU>
Vec log_map_origin(const Eigen::MatrixBase<DU>& u, const Curvature& c) {
  const double r = u.norm();
  if (r == 0.0) return Vec::Zero(u.size());
  const double y = c.sqrt() * r;
  return u * (clamped_artanh(y) / y);
}

// ---------------------------------------------------------------------------
// Analytic gradients.
// ---------------------------------------------------------------------------

struct PairGrad {
  double value = 0.0;
  Vec grad_u;
  Vec grad_v;
};

// Distance and its gradient with respect to the ball coordinates of both
// endpoints. The distance is not differentiable at u == v; there the
// gradient is reported as zero so optimization loops stay total.
template <class DU, class DV>
PairGrad poincare_distance_grad(const Eigen::MatrixBase<DU>& u, const Eigen::MatrixBase<DV>& v,
                                const Curvature& c) {
  const double cc = c.value();
  const double alpha = 1.0 - cc * u.squaredNorm();
  const double beta = 1.0 - cc * v.squaredNorm();
  const double delta = cc * (u - v).squaredNorm();
  const double gamma = 1.0 + 2.0 * delta / (alpha * beta);
  PairGrad out;
  out.value = clamped_arcosh(gamma) / c.sqrt();
  if (gamma <= 1.0 + 1e-15) {
    out.grad_u = Vec::Zero(u.size());
    out.grad_v = Vec::Zero(v.size());
    return out;
  }
  const double root = std::sqrt(gamma * gamma - 1.0);
  const double ku = 4.0 * c.sqrt() / (alpha * alpha * beta * root);
  const double kv = 4.0 * c.sqrt() / (alpha * beta * beta * root);
  out.grad_u = ku * (alpha * (u - v) + delta * u);
  out.grad_v = kv * (beta * (v - u) + delta * v);
  return out;
}

// Squared distance gradient. Unlike the distance itself this is smooth at
// u == v: arcosh(gamma) / sqrt(gamma^2 - 1) -> 1 as gamma -> 1, so the
// singular factors cancel and the gradient vanishes there.
template <class DU, class DV>
PairGrad poincare_distance_sq_grad(const Eigen::MatrixBase<DU>& u, const Eigen::MatrixBase<DV>& v,
                                   const Curvature& c) {
  const double cc = c.value();
  const double alpha = 1.0 - cc * u.squaredNorm();
  const double beta = 1.0 - cc * v.squaredNorm();
  const double delta = cc * (u - v).squaredNorm();
  const double gamma = 1.0 + 2.0 * delta / (alpha * beta);
  const double dist = clamped_arcosh(gamma) / c.sqrt();
  // ratio = arcosh(gamma) / sqrt(gamma^2 - 1), extended by its limit 1.
  double ratio = 1.0;
  if (gamma > 1.0 + 1e-10) {
    ratio = clamped_arcosh(gamma) / std::sqrt(gamma * gamma - 1.0);
  }
  PairGrad out;
  out.value = dist * dist;
  const double ku = 8.0 * ratio / (alpha * alpha * beta);
  const double kv = 8.0 * ratio / (alpha * beta * beta);
  out.grad_u = ku * (alpha * (u - v) + delta * u);
  out.grad_v = kv * (beta * (v - u) + delta * v);
  return out;
}

// Gradient of hyperbolic_inner with respect to both ball points. At either
// origin the value hits its removable limit; the gradient there is the
// limiting one (zero in the argument that sits at the origin).
template <class DU, class DV>
PairGrad hyperbolic_inner_grad(const Eigen::MatrixBase<DU>& u, const Eigen::MatrixBase<DV>& v,
                               const Curvature& c) {
  PairGrad out;
  const double ru = u.norm();
  const double rv = v.norm();
  const double tiny = 1e-12;
  if (ru < tiny && rv < tiny) {
    out.grad_u = Vec::Zero(u.size());
    out.grad_v = Vec::Zero(v.size());
    return out;
  }
  if (ru < tiny) {
    out.grad_u = (2.0 * hyperbolic_norm(v, c) / rv) * v;
    out.grad_v = Vec::Zero(v.size());
    return out;
  }
  if (rv < tiny) {
    out.grad_u = Vec::Zero(u.size());
    out.grad_v = (2.0 * hyperbolic_norm(u, c) / ru) * u;
    return out;
  }
  const double nu = hyperbolic_norm(u, c);
  const double nv = hyperbolic_norm(v, c);
  const double p = u.dot(v);
  const double cosang = p / (ru * rv);
  out.value = nu * nv * cosang;
  // d||.||_D / dx = lambda_x * x / ||x||.
  const Vec gnu = (conformal_factor(u, c) / ru) * u;
  const Vec gnv = (conformal_factor(v, c) / rv) * v;
  const Vec gcos_u = v / (ru * rv) - (p / (ru * ru * ru * rv)) * u;
  const Vec gcos_v = u / (ru * rv) - (p / (rv * rv * rv * ru)) * v;
  out.grad_u = nv * (cosang * gnu + nu * gcos_u);
  out.grad_v = nu * (cosang * gnv + nv * gcos_v);
  return out;
}

// Pullback of a gradient through the origin exp map: returns J(t)^T * g for
// J the Jacobian of exp_map_origin at t. J = h(s) I + (h'(s)/s) t t^T with
// h(s) = tanh(sqrt(c) s) / (sqrt(c) s); J is symmetric.
template <class DT, class DG>
Vec exp_map_pullback(const Eigen::MatrixBase<DT>& t, const Curvature& c,
                     const Eigen::MatrixBase<DG>& g) {
  const double s = t.norm();
  if (s == 0.0) return g;
  const double x = c.sqrt() * s;
  double h;
  double hp_over_s;
  if (x < 1e-4) {
    // series: h = 1 - x^2/3 + 2x^4/15, h'/s = c(-2/3 + 8x^2/15)
    h = 1.0 - x * x / 3.0 + 2.0 * x * x * x * x / 15.0;
    hp_over_s = c.value() * (-2.0 / 3.0 + 8.0 * x * x / 15.0);
  } else {
    const double th = std::tanh(x);
    h = th / x;
    hp_over_s = c.value() * (x * (1.0 - th * th) - th) / (x * x * x);
  }
  return h * g + (hp_over_s * t.dot(g)) * t;
}

// ---------------------------------------------------------------------------
// Checked wrappers over BallPoint.
// ---------------------------------------------------------------------------

inline double poincare_distance(const BallPoint& u, const BallPoint& v) {
  detail::check_pair(u, v);
  return poincare_distance(u.coords(), v.coords(), u.curvature());
}

inline double conformal_factor(const BallPoint& x) { return conformal_factor(x.coords(), x.curvature()); }

inline double hyperbolic_norm(const BallPoint& u) {
  return poincare_distance(u, BallPoint::origin(u.dim(), u.curvature()));
}

inline double hyperbolic_inner(const BallPoint& u, const BallPoint& v) {
  detail::check_pair(u, v);
  return hyperbolic_inner(u.coords(), v.coords(), u.curvature());
}

inline BallPoint exp_map_origin_point(const Vec& t, const Curvature& c) {
  return BallPoint(exp_map_origin(t, c), c);
}

inline Vec log_map_origin_point(const BallPoint& u) { return log_map_origin(u.coords(), u.curvature()); }

// Radial projection into the ball with a hyperbolic-norm budget: points with
// ||x||_D <= max_hyp_norm pass through unchanged (bitwise), anything else is
// rescaled onto the radius where ||.||_D == max_hyp_norm.
template <class DX>
Vec project_into_ball(const Eigen::MatrixBase<DX>& x, const Curvature& c, double max_hyp_norm) {
  require(std::isfinite(max_hyp_norm) && max_hyp_norm > 0.0, "max_hyp_norm must be finite and positive");
  const double r = x.norm();
  require(std::isfinite(r), "cannot project non-finite point");
  if (r == 0.0) return x;
  const double y = c.sqrt() * r;
  if (y < 1.0 && 2.0 / c.sqrt() * std::atanh(y) <= max_hyp_norm) return x;
  const double r_cap = std::tanh(c.sqrt() * max_hyp_norm / 2.0) / c.sqrt();
  return x * (r_cap / r);
}

inline BallPoint project_into_ball_point(const Vec& x, const Curvature& c, double max_hyp_norm) {
  return BallPoint(project_into_ball(x, c, max_hyp_norm), c);
}

// ---------------------------------------------------------------------------
// Hyperbolic linear layer.
// ---------------------------------------------------------------------------

enum class Activation { identity, relu, sigmoid, tanh };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
  }
  return "identity";
}

inline Activation parse_activation(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  throw invalid_input_error("unknown activation: " + s);
}

inline Vec apply_activation(Activation a, Vec x) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::relu: return x.cwiseMax(0.0);
    case Activation::sigmoid: return (1.0 / (1.0 + (-x.array()).exp())).matrix();
    case Activation::tanh: return x.array().tanh().matrix();
  }
  return x;
}

struct HypLinearParams {
  Mat weight;
  Vec bias;
  Activation activation = Activation::identity;

  void validate() const {
    require(weight.rows() >= 1 && weight.cols() >= 1, "hyp_linear weight must be non-empty");
    require(weight.allFinite(), "hyp_linear weight has non-finite entries");
    require(bias.size() == weight.rows(), "hyp_linear bias size must match weight rows");
    require(bias.allFinite(), "hyp_linear bias has non-finite entries");
  }
};

// Matrix product in the tangent space: exp(W log(u)).
inline BallPoint hyp_matvec(const Mat& w, const BallPoint& u) {
  require(w.cols() == u.dim(), "hyp_matvec: weight cols " + std::to_string(w.cols()) +
                                   " vs point dim " + std::to_string(u.dim()));
  require(w.allFinite(), "hyp_matvec: weight has non-finite entries");
  const Vec t = w * log_map_origin(u.coords(), u.curvature());
  return BallPoint(exp_map_origin(t, u.curvature()), u.curvature());
}

// Bias translation in the tangent space: exp(log(u) + b).
inline BallPoint hyp_bias_add(const BallPoint& u, const Vec& b) {
  require(b.size() == u.dim(), "hyp_bias_add: bias size mismatch");
  require(b.allFinite(), "hyp_bias_add: bias has non-finite entries");
  const Vec t = log_map_origin(u.coords(), u.curvature()) + b;
  return BallPoint(exp_map_origin(t, u.curvature()), u.curvature());
}

// Full layer: exp(act(W log(u) + b)). Matvec, bias and activation compose in
// one tangent round trip, so hyp_linear(W, 0, identity) == hyp_matvec(W, .).
inline BallPoint hyp_linear(const HypLinearParams& p, const BallPoint& u) {
  p.validate();
  require(p.weight.cols() == u.dim(), "hyp_linear: weight cols vs point dim mismatch");
  const Vec t = p.weight * log_map_origin(u.coords(), u.curvature()) + p.bias;
  return BallPoint(exp_map_origin(apply_activation(p.activation, t), u.curvature()), u.curvature());
}

}  // namespace hyperrec::geometry
