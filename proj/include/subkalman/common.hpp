#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace subkalman {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
inline std::span<double> as_span(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<const double> as_span(const Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
inline std::span<double> as_span(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }

inline Vector to_vector(std::span<const double> s) {
  return Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size()));
}

// splitmix64 finalizer; used to derive independent seeds from (seed, stream).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream = 0) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Error hierarchy. Every failure the library reports derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SUBKALMAN_ERROR(Name)                 \
  class Name : public Error {                 \
   public:                                    \
    explicit Name(const std::string& what)    \
        : Error(std::string(#Name ": ") + what) {} \
  }

SUBKALMAN_ERROR(ShapeError);
SUBKALMAN_ERROR(ActionOutOfRange);
SUBKALMAN_ERROR(NoHiddenLayer);
SUBKALMAN_ERROR(EmptyDataset);
SUBKALMAN_ERROR(DimensionError);
SUBKALMAN_ERROR(SingularPrior);
SUBKALMAN_ERROR(LabelOutOfRange);
SUBKALMAN_ERROR(RankError);
SUBKALMAN_ERROR(HorizonTooShort);
SUBKALMAN_ERROR(MissingOracle);
SUBKALMAN_ERROR(TooFewRecords);
SUBKALMAN_ERROR(FormatError);

#undef SUBKALMAN_ERROR

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error("ParseError: " + source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  SchemaError(const std::string& column, const std::string& what)
      : Error("SchemaError: column '" + column + "': " + what), column_(column) {}
  const std::string& column() const { return column_; }

 private:
  std::string column_;
};

}  // namespace subkalman
