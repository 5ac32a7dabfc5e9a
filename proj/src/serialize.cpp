#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "subkalman/mlp.hpp"
#include "subkalman/subspace.hpp"

namespace subkalman {
namespace {

constexpr std::uint32_t kParamsVersion = 1;
constexpr std::uint32_t kSubspaceVersion = 1;

template <class T>
void put(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), sizeof(T));
}

template <class T>
T get(std::istream& in, const char* what) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), sizeof(T))) throw FormatError(std::string("truncated stream reading ") + what);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

void put_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }

void expect_magic(std::istream& in, const char (&magic)[5]) {
  char got[4];
  if (!in.read(got, 4) || std::memcmp(got, magic, 4) != 0) {
    throw FormatError(std::string("bad magic, expected ") + magic);
  }
}

void put_doubles(std::ostream& out, const double* p, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  } else {
    for (std::size_t i = 0; i < n; ++i) put(out, p[i]);
  }
}

void get_doubles(std::istream& in, double* p, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)))) {
      throw FormatError("truncated payload");
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) p[i] = get<double>(in, "payload");
  }
}

}  // namespace

void write_params(std::ostream& out, const ParamVector& theta) {
  put_magic(out, "SKPV");
  put<std::uint32_t>(out, kParamsVersion);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(theta.size()));
  put_doubles(out, theta.data(), static_cast<std::size_t>(theta.size()));
}

ParamVector read_params(std::istream& in) {
  expect_magic(in, "SKPV");
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kParamsVersion) throw FormatError("unsupported SKPV version " + std::to_string(version));
  const auto n = get<std::uint64_t>(in, "length");
  ParamVector theta(static_cast<Eigen::Index>(n));
  get_doubles(in, theta.data(), n);
  return theta;
}

void write_subspace(std::ostream& out, const AffineSubspace& sub) {
  put_magic(out, "SKSB");
  put<std::uint32_t>(out, kSubspaceVersion);
  put<std::uint64_t>(out, sub.full_dim());
  put<std::uint64_t>(out, sub.dim());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(sub.kind));
  put<std::uint32_t>(out, 0);
  put_doubles(out, sub.offset.data(), sub.full_dim());
  put_doubles(out, sub.basis.data(), sub.full_dim() * sub.dim());
}

AffineSubspace read_subspace(std::istream& in) {
  expect_magic(in, "SKSB");
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kSubspaceVersion) throw FormatError("unsupported SKSB version " + std::to_string(version));
  const auto full = get<std::uint64_t>(in, "full dimension");
  const auto dim = get<std::uint64_t>(in, "dimension");
  const auto kind = get<std::uint32_t>(in, "kind");
  (void)get<std::uint32_t>(in, "reserved");
  if (kind > 2) throw FormatError("unknown subspace kind " + std::to_string(kind));
  AffineSubspace sub;
  sub.kind = static_cast<SubspaceKind>(kind);
  sub.offset.resize(static_cast<Eigen::Index>(full));
  sub.basis.resize(static_cast<Eigen::Index>(full), static_cast<Eigen::Index>(dim));
  get_doubles(in, sub.offset.data(), full);
  get_doubles(in, sub.basis.data(), full * dim);
  return sub;
}

}  // namespace subkalman
