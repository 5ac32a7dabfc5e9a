#include <charconv>
#include <fstream>

#include <Eigen/SVD>

#include "subkalman/environments.hpp"

namespace subkalman {
namespace {

template <class T>
bool parse_field(std::string_view s, T& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace

std::vector<Rating> read_movielens(std::istream& in, const std::string& source) {
  std::vector<Rating> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto tab = rest.find('\t');
      fields.push_back(rest.substr(0, tab));
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    if (fields.size() != 4) {
      throw ParseError(source, lineno, "expected 4 tab-separated fields, got " + std::to_string(fields.size()));
    }
    Rating r{};
    std::uint64_t stamp;
    if (!parse_field(fields[0], r.user) || r.user == 0) throw ParseError(source, lineno, "bad user id");
    if (!parse_field(fields[1], r.item) || r.item == 0) throw ParseError(source, lineno, "bad item id");
    if (!parse_field(fields[2], r.rating)) throw ParseError(source, lineno, "bad rating");
    if (!parse_field(fields[3], stamp)) throw ParseError(source, lineno, "bad timestamp");
    out.push_back(r);
  }
  return out;
}

std::vector<Rating> load_movielens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return read_movielens(in, path);
}

double MovieLensSim::reconstruction_error() const {
  const double norm = ratings.norm();
  const double diff = (reconstruction - ratings).norm();
  return norm > 0.0 ? diff / norm : diff;
}

MovieLensSim build_movielens(std::span<const Rating> ratings, std::size_t num_movies, std::size_t rank) {
  if (ratings.empty()) throw EmptyDataset("no ratings");
  if (num_movies == 0) throw RankError("need at least one movie");
  std::size_t users = 0;
  for (const auto& r : ratings) users = std::max(users, r.user);
  if (rank == 0 || rank > std::min(users, num_movies)) {
    throw RankError("rank " + std::to_string(rank) + " must be in [1, " +
                    std::to_string(std::min(users, num_movies)) + "]");
  }
  MovieLensSim sim;
  sim.ratings = Matrix::Zero(static_cast<Eigen::Index>(users), static_cast<Eigen::Index>(num_movies));
  for (const auto& r : ratings) {
    if (r.item <= num_movies) {
      sim.ratings(static_cast<Eigen::Index>(r.user - 1), static_cast<Eigen::Index>(r.item - 1)) = r.rating;
    }
  }
  Eigen::BDCSVD<Matrix> svd(sim.ratings, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto k = static_cast<Eigen::Index>(rank);
  sim.user_factors = svd.matrixU().leftCols(k);
  sim.singular_values = svd.singularValues().head(k);
  sim.item_factors = svd.matrixV().leftCols(k);
  sim.contexts = sim.user_factors * sim.singular_values.asDiagonal();
  sim.reconstruction = sim.contexts * sim.item_factors.transpose();
  return sim;
}

MovieLensEnv::MovieLensEnv(std::shared_ptr<const MovieLensSim> sim, std::uint64_t seed)
    : sim_(std::move(sim)), seed_(seed) {
  if (!sim_ || sim_->users() == 0) throw EmptyDataset("movielens simulator has no users");
}

std::size_t MovieLensEnv::user(std::size_t t) const {
  Rng rng(mix_seed(mix_seed(seed_, 0x05e4), t));
  return std::uniform_int_distribution<std::size_t>(0, sim_->users() - 1)(rng);
}

Vector MovieLensEnv::state(std::size_t t) const {
  return sim_->contexts.row(static_cast<Eigen::Index>(user(t))).transpose();
}

double MovieLensEnv::reward(std::size_t t, std::size_t action) const {
  if (action >= num_actions()) throw ActionOutOfRange(std::to_string(action));
  return sim_->reconstruction(static_cast<Eigen::Index>(user(t)), static_cast<Eigen::Index>(action));
}

std::optional<double> MovieLensEnv::optimal_reward(std::size_t t) const {
  return sim_->reconstruction.row(static_cast<Eigen::Index>(user(t))).maxCoeff();
}

std::optional<std::size_t> MovieLensEnv::optimal_action(std::size_t t) const {
  const auto row = sim_->reconstruction.row(static_cast<Eigen::Index>(user(t)));
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return static_cast<std::size_t>(best);
}

}  // namespace subkalman
