#include "subkalman/agents.hpp"

namespace subkalman {

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw ShapeError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    // NaN never compares greater, and a NaN incumbent is replaced by any number.
    if (values[i] > values[best] || (std::isnan(values[best]) && !std::isnan(values[i]))) best = i;
  }
  return best;
}

std::size_t argmax(const Vector& values) { return argmax(as_span(values)); }

std::size_t ucb_select(const Vector& means, const Vector& stds, double alpha) {
  if (means.size() != stds.size()) throw ShapeError("means and stds differ in length");
  if (!(alpha >= 0.0)) throw ShapeError("alpha must be non-negative");
  if ((stds.array() < 0.0).any()) throw ShapeError("standard deviations must be non-negative");
  const Vector scores = means + alpha * stds;
  return argmax(scores);
}

}  // namespace subkalman
