#include "subkalman/subspace.hpp"

#include <Eigen/SVD>

#include "subkalman/kernels.hpp"

namespace subkalman {
namespace {

void fix_sign(Eigen::Ref<Vector> col) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < col.size(); ++i) {
    if (std::abs(col[i]) > std::abs(col[best])) best = i;
  }
  if (col[best] < 0.0) col = -col;
}

}  // namespace

AffineSubspace random_subspace(std::size_t full_dim, std::size_t dim, const ParamVector& offset,
                               std::uint64_t seed) {
  if (dim == 0 || dim > full_dim) {
    throw DimensionError("subspace dimension " + std::to_string(dim) + " must be in [1, " +
                         std::to_string(full_dim) + "]");
  }
  if (static_cast<std::size_t>(offset.size()) != full_dim) {
    throw ShapeError("offset length does not match the full dimension");
  }
  Rng rng(mix_seed(seed, 0x5b5));
  std::normal_distribution<double> normal;
  AffineSubspace sub;
  sub.kind = SubspaceKind::Random;
  sub.offset = offset;
  sub.basis.resize(static_cast<Eigen::Index>(full_dim), static_cast<Eigen::Index>(dim));
  for (Eigen::Index c = 0; c < sub.basis.cols(); ++c) {
    for (Eigen::Index r = 0; r < sub.basis.rows(); ++r) sub.basis(r, c) = normal(rng);
    sub.basis.col(c).normalize();
  }
  return sub;
}

AffineSubspace svd_subspace(const Matrix& iterates, std::size_t dim, const ParamVector& offset,
                            std::size_t thin) {
  if (thin == 0) throw DimensionError("thinning stride must be positive");
  if (iterates.cols() != offset.size()) {
    throw ShapeError("iterates have " + std::to_string(iterates.cols()) + " columns, offset has " +
                     std::to_string(offset.size()));
  }
  const Eigen::Index kept = (iterates.rows() + static_cast<Eigen::Index>(thin) - 1) /
                            static_cast<Eigen::Index>(thin);
  const auto limit = static_cast<std::size_t>(std::min<Eigen::Index>(kept, iterates.cols()));
  if (dim == 0 || dim > limit) {
    throw DimensionError("subspace dimension " + std::to_string(dim) + " must be in [1, " +
                         std::to_string(limit) + "] (min of kept iterates and parameter count)");
  }
  Matrix centered(kept, iterates.cols());
  for (Eigen::Index i = 0; i < kept; ++i) {
    centered.row(i) = iterates.row(i * static_cast<Eigen::Index>(thin)) - offset.transpose();
  }
  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  AffineSubspace sub;
  sub.kind = SubspaceKind::Svd;
  sub.offset = offset;
  sub.basis = svd.matrixV().leftCols(static_cast<Eigen::Index>(dim));
  for (Eigen::Index c = 0; c < sub.basis.cols(); ++c) fix_sign(sub.basis.col(c));
  return sub;
}

AffineSubspace svd_subspace(std::span<const ParamVector> iterates, std::size_t dim,
                            const ParamVector& offset, std::size_t thin) {
  if (iterates.empty()) throw DimensionError("no iterates");
  Matrix m(static_cast<Eigen::Index>(iterates.size()), offset.size());
  for (std::size_t i = 0; i < iterates.size(); ++i) {
    if (iterates[i].size() != offset.size()) throw ShapeError("iterate length mismatch");
    m.row(static_cast<Eigen::Index>(i)) = iterates[i].transpose();
  }
  return svd_subspace(m, dim, offset, thin);
}

AffineSubspace identity_subspace(std::size_t full_dim) {
  if (full_dim == 0) throw DimensionError("identity subspace needs a positive dimension");
  AffineSubspace sub;
  sub.kind = SubspaceKind::Identity;
  sub.basis = Matrix::Identity(static_cast<Eigen::Index>(full_dim),
                               static_cast<Eigen::Index>(full_dim));
  sub.offset = Vector::Zero(static_cast<Eigen::Index>(full_dim));
  return sub;
}

ParamVector lift(const AffineSubspace& sub, std::span<const double> z) {
  if (z.size() != sub.dim()) {
    throw ShapeError("z has " + std::to_string(z.size()) + " entries, subspace dimension is " +
                     std::to_string(sub.dim()));
  }
  ParamVector theta = sub.offset;
  // Column-major D x d basis is the row-major d x D matrix A^T; A z = (A^T)^T z.
  kernels::gemv_t(as_span(sub.basis), sub.dim(), sub.full_dim(), z, as_span(theta));
  return theta;
}

Vector project_gradient(const AffineSubspace& sub, std::span<const double> g) {
  if (g.size() != sub.full_dim()) {
    throw ShapeError("gradient has " + std::to_string(g.size()) + " entries, expected " +
                     std::to_string(sub.full_dim()));
  }
  Vector out(static_cast<Eigen::Index>(sub.dim()));
  kernels::gemv(as_span(sub.basis), sub.dim(), sub.full_dim(), g, as_span(out));
  return out;
}

}  // namespace subkalman
