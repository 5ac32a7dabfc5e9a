#pragma once

// Affine parameter subspaces theta(z) = A z + offset.

#include <iosfwd>

#include "subkalman/common.hpp"
#include "subkalman/mlp.hpp"

namespace subkalman {

enum class SubspaceKind : std::uint32_t { Random = 0, Svd = 1, Identity = 2 };

struct AffineSubspace {
  Matrix basis;   // D x d, column-major
  Vector offset;  // D
  SubspaceKind kind = SubspaceKind::Random;

  std::size_t full_dim() const { return static_cast<std::size_t>(basis.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(basis.cols()); }
};

// Gaussian directions, each column scaled to unit norm.
AffineSubspace random_subspace(std::size_t full_dim, std::size_t dim, const ParamVector& offset,
                               std::uint64_t seed);

// Top-`dim` right singular vectors of the iterates (rows) after subtracting
// `offset` from every row. Keeps rows 0, thin, 2*thin, ... Each column is
// sign-fixed so that its largest-magnitude entry is positive.
AffineSubspace svd_subspace(const Matrix& iterates, std::size_t dim, const ParamVector& offset,
                            std::size_t thin = 1);
AffineSubspace svd_subspace(std::span<const ParamVector> iterates, std::size_t dim,
                            const ParamVector& offset, std::size_t thin = 1);

// A = I_D, offset = 0.
AffineSubspace identity_subspace(std::size_t full_dim);

ParamVector lift(const AffineSubspace& sub, std::span<const double> z);
Vector project_gradient(const AffineSubspace& sub, std::span<const double> g);

// "SKSB" | version u32 | D u64 | d u64 | kind u32 | reserved u32 |
// offset (D x f64) | basis column-major (D*d x f64), little-endian.
void write_subspace(std::ostream& out, const AffineSubspace& sub);
AffineSubspace read_subspace(std::istream& in);

}  // namespace subkalman
