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

#include "hyperrec/spaces.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace hyperrec::spaces {

namespace {

constexpr char kMagic[5] = {'H', 'R', 'E', 'C', '1'};

void check_same_dim(const Vec& u, const Vec& v) {
  require(u.size() == v.size(), "dimension mismatch: " + std::to_string(u.size()) + " vs " +
                                    std::to_string(v.size()));
}

}  // namespace

SpaceKind parse_space(const std::string& name, double curvature, double max_hyp_norm) {
  if (name == "euclidean") return SpaceKind::euclidean();
  if (name == "poincare") return SpaceKind::poincare_ball(curvature, max_hyp_norm);
  throw invalid_input_error("unknown space: " + name + " (expected euclidean or poincare)");
}

EmbeddingTable init_embeddings(Index rows, Index dim, double scale, std::uint64_t seed,
                               bool with_biases) {
  require(rows >= 1 && dim >= 1, "init_embeddings needs rows >= 1 and dim >= 1");
  require(std::isfinite(scale) && scale > 0.0, "init scale must be finite and positive");
  EmbeddingTable table(rows, dim, with_biases);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-scale, scale);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < dim; ++c) table.params()(r, c) = unif(rng);
  return table;
}

Vec materialize(const SpaceKind& space, const EmbeddingTable& table, Index row) {
  table.check_row(row);
  if (!space.hyperbolic()) return table.params().row(row);
  const Vec ball = geometry::exp_map_origin(table.params().row(row).transpose(), space.curvature);
  return geometry::project_into_ball(ball, space.curvature, space.max_hyp_norm);
}

Mat materialize_all(const SpaceKind& space, const EmbeddingTable& table) {
  if (!space.hyperbolic()) return table.params();
  Mat out(table.rows(), table.dim());
  for (Index r = 0; r < table.rows(); ++r) out.row(r) = materialize(space, table, r);
  return out;
}

double score_distance(const SpaceKind& space, const Vec& u, const Vec& v) {
  check_same_dim(u, v);
  if (!space.hyperbolic()) return (u - v).norm();
  return geometry::poincare_distance(u, v, space.curvature);
}

double score_projection(const SpaceKind& space, const Vec& u, const Vec& v, double bias) {
  check_same_dim(u, v);
  if (!space.hyperbolic()) return u.dot(v) + bias;
  return geometry::hyperbolic_inner(u, v, space.curvature) + bias;
}

Vec score_distance_batch(const SpaceKind& space, const Mat& points, const Vec& u) {
  require(points.cols() == u.size(), "dimension mismatch in batched distance");
  if (!space.hyperbolic()) {
    return (points.rowwise() - u.transpose()).rowwise().norm();
  }
  const double c = space.curvature.value();
  const double sc = space.curvature.sqrt();
  const double au = 1.0 - c * u.squaredNorm();
  Eigen::ArrayXd beta = 1.0 - c * points.rowwise().squaredNorm().array();
  Eigen::ArrayXd delta = c * (points.rowwise() - u.transpose()).rowwise().squaredNorm().array();
  Eigen::ArrayXd gamma = 1.0 + 2.0 * delta / (au * beta);
  return (gamma.max(1.0).acosh() / sc).matrix();
}

Vec score_projection_batch(const SpaceKind& space, const Mat& points, const Vec& u,
                           const Vec& point_biases, double u_bias) {
  require(points.cols() == u.size(), "dimension mismatch in batched projection");
  require(point_biases.size() == 0 || point_biases.size() == points.rows(),
          "bias vector length must match point count");
  Vec scores;
  if (!space.hyperbolic()) {
    scores = points * u;
  } else {
    const double sc = space.curvature.sqrt();
    const double ru = u.norm();
    if (ru == 0.0) {
      scores = Vec::Zero(points.rows());
    } else {
      const double nu = 2.0 / sc * geometry::clamped_artanh(sc * ru);
      Eigen::ArrayXd r = points.rowwise().norm().array();
      Eigen::ArrayXd nv = (sc * r).min(1.0 - geometry::kBoundaryEps).atanh() * (2.0 / sc);
      Eigen::ArrayXd cosang = ((points * u).array() / (r * ru)).max(-1.0).min(1.0);
      scores = (r > 0.0).select(nu * nv * cosang, 0.0);
    }
  }
  if (point_biases.size() > 0) scores += point_biases;
  if (u_bias != 0.0) scores.array() += u_bias;
  return scores;
}

DistanceSqGrad distance_sq_with_grad(const SpaceKind& space, const EmbeddingTable& ta, Index ia,
                                     const EmbeddingTable& tb, Index ib) {
  ta.check_row(ia);
  tb.check_row(ib);
  require(ta.dim() == tb.dim(), "dimension mismatch between tables");
  DistanceSqGrad out;
  if (!space.hyperbolic()) {
    const Vec diff = ta.params().row(ia) - tb.params().row(ib);
    out.dist = diff.norm();
    out.grad_a = 2.0 * diff;
    out.grad_b = -2.0 * diff;
    return out;
  }
  const Vec theta_a = ta.params().row(ia);
  const Vec theta_b = tb.params().row(ib);
  const Vec pa = geometry::exp_map_origin(theta_a, space.curvature);
  const Vec pb = geometry::exp_map_origin(theta_b, space.curvature);
  const auto g = geometry::poincare_distance_sq_grad(pa, pb, space.curvature);
  out.dist = std::sqrt(g.value);
  out.grad_a = geometry::exp_map_pullback(theta_a, space.curvature, g.grad_u);
  out.grad_b = geometry::exp_map_pullback(theta_b, space.curvature, g.grad_v);
  return out;
}

ProjectionGrad projection_with_grad(const SpaceKind& space, const EmbeddingTable& ta, Index ia,
                                    const EmbeddingTable& tb, Index ib) {
  ta.check_row(ia);
  tb.check_row(ib);
  require(ta.dim() == tb.dim(), "dimension mismatch between tables");
  ProjectionGrad out;
  const double bias = ta.bias(ia) + tb.bias(ib);
  if (!space.hyperbolic()) {
    const Vec u = ta.params().row(ia);
    const Vec v = tb.params().row(ib);
    out.score = u.dot(v) + bias;
    out.grad_a = v;
    out.grad_b = u;
    return out;
  }
  const Vec theta_a = ta.params().row(ia);
  const Vec theta_b = tb.params().row(ib);
  const Vec pa = geometry::exp_map_origin(theta_a, space.curvature);
  const Vec pb = geometry::exp_map_origin(theta_b, space.curvature);
  const auto g = geometry::hyperbolic_inner_grad(pa, pb, space.curvature);
  out.score = g.value + bias;
  out.grad_a = geometry::exp_map_pullback(theta_a, space.curvature, g.grad_u);
  out.grad_b = geometry::exp_map_pullback(theta_b, space.curvature, g.grad_v);
  return out;
}

void save_table(const std::string& path, const SpaceKind& space, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof kMagic);
  const std::uint8_t tag = static_cast<std::uint8_t>(space.tag);
  const double c = space.curvature.value();
  const std::uint64_t rows = static_cast<std::uint64_t>(table.rows());
  const std::uint64_t dim = static_cast<std::uint64_t>(table.dim());
  const std::uint8_t bias_flag = table.has_biases() ? 1 : 0;
  out.write(reinterpret_cast<const char*>(&tag), 1);
  out.write(reinterpret_cast<const char*>(&c), sizeof c);
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  out.write(reinterpret_cast<const char*>(&bias_flag), 1);
  for (Index r = 0; r < table.rows(); ++r) {
    const Vec row = table.params().row(r);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(sizeof(double) * row.size()));
  }
  if (table.has_biases()) {
    out.write(reinterpret_cast<const char*>(table.biases().data()),
              static_cast<std::streamsize>(sizeof(double) * table.biases().size()));
  }
  require(out.good(), "write failed for checkpoint: " + path);
}

LoadedTable load_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open checkpoint: " + path);
  char magic[5];
  in.read(magic, sizeof magic);
  require(in.good() && std::memcmp(magic, kMagic, sizeof kMagic) == 0,
          "bad checkpoint magic in " + path);
  std::uint8_t tag = 0, bias_flag = 0;
  double c = 0.0;
  std::uint64_t rows = 0, dim = 0;
  in.read(reinterpret_cast<char*>(&tag), 1);
  in.read(reinterpret_cast<char*>(&c), sizeof c);
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&dim), sizeof dim);
  in.read(reinterpret_cast<char*>(&bias_flag), 1);
  require(in.good(), "truncated checkpoint header in " + path);
  require(tag <= 1, "unknown space tag in " + path);
  require(bias_flag <= 1, "bad bias flag in " + path);
  require(rows >= 1 && dim >= 1 && rows < (1ULL << 32) && dim < (1ULL << 24),
          "implausible shape in " + path);

  LoadedTable out;
  out.space = tag == 1 ? SpaceKind::poincare_ball(c) : SpaceKind::euclidean();
  out.table = EmbeddingTable(static_cast<Index>(rows), static_cast<Index>(dim), bias_flag == 1);
  for (Index r = 0; r < out.table.rows(); ++r) {
    Vec row(out.table.dim());
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(sizeof(double) * row.size()));
    out.table.params().row(r) = row;
  }
  if (bias_flag == 1) {
    in.read(reinterpret_cast<char*>(out.table.biases().data()),
            static_cast<std::streamsize>(sizeof(double) * out.table.biases().size()));
  }
  require(in.good(), "truncated checkpoint payload in " + path);
  require(out.table.params().allFinite(), "checkpoint contains non-finite parameters: " + path);
  require(!out.table.has_biases() || out.table.biases().allFinite(),
          "checkpoint contains non-finite biases: " + path);
  return out;
}

}  // namespace hyperrec::spaces
