#include "flowlab/brownian.hpp"

#include "flowlab/errors.hpp"
#include "flowlab/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace flowlab {

VectorXd BrownianGrid::cumulative(Index k) const {
  VectorXd w = VectorXd::Zero(noise_dim());
  for (Index j = 0; j < k; ++j) w += increments.row(j).transpose();
  return w;
}

BrownianGrid sample_brownian(std::uint64_t master_seed, std::uint64_t path_index, double t0,
                             double t1, Index steps, Index r) {
  if (steps < 1) throw std::invalid_argument("sample_brownian: steps must be >= 1");
  if (r < 1) throw std::invalid_argument("sample_brownian: noise dimension must be >= 1");
  if (!(t1 > t0)) throw std::invalid_argument("sample_brownian: need t1 > t0");
  BrownianGrid g;
  g.t0 = t0;
  g.t1 = t1;
  g.steps = steps;
  g.seed = master_seed;
  g.stream_id = path_index;
  g.increments.resize(steps, r);
  Substream rng(master_seed, path_index);
  const double sd = std::sqrt(g.step());
  for (Index k = 0; k < steps; ++k)
    for (Index j = 0; j < r; ++j) g.increments(k, j) = sd * rng.normal();
  return g;
}

BrownianGrid refine(const BrownianGrid& grid, int factor) {
  if (factor < 2) throw std::invalid_argument("refine: factor must be >= 2");
  BrownianGrid out;
  out.t0 = grid.t0;
  out.t1 = grid.t1;
  out.steps = grid.steps * factor;
  out.seed = grid.seed;
  out.stream_id = grid.stream_id;
  out.level = grid.level + 1;
  const Index r = grid.noise_dim();
  out.increments.resize(out.steps, r);
  const double fine = grid.step() / factor;
  const std::uint64_t level_stream =
      derive_stream(grid.stream_id, static_cast<std::uint64_t>(out.level), stream_tag::refine);
  for (Index k = 0; k < grid.steps; ++k) {
    Substream rng(grid.seed, derive_stream(level_stream, static_cast<std::uint64_t>(k),
                                           stream_tag::refine_node));
    for (Index j = 0; j < r; ++j) {
      double rest = grid.increments(k, j);
      double span = grid.step();
      for (int i = 0; i < factor - 1; ++i) {
        const double mean = fine / span * rest;
        const double sd = std::sqrt(fine * (span - fine) / span);
        const double sub = mean + sd * rng.normal();
        out.increments(k * factor + i, j) = sub;
        rest -= sub;
        span -= fine;
      }
      out.increments(k * factor + factor - 1, j) = rest;
    }
  }
  return out;
}

BrownianGrid coarsen(const BrownianGrid& grid, int factor) {
  if (factor < 1 || grid.steps % factor != 0)
    throw std::invalid_argument("coarsen: factor must divide the step count");
  BrownianGrid out = grid;
  out.steps = grid.steps / factor;
  out.increments = IncrementMatrix::Zero(out.steps, grid.noise_dim());
  for (Index k = 0; k < out.steps; ++k)
    for (int i = 0; i < factor; ++i) out.increments.row(k) += grid.increments.row(k * factor + i);
  return out;
}

Index mesh_ratio(double coarse, double fine, const char* field) {
  if (!(fine > 0) || !(coarse > 0)) throw ConfigError(field, "mesh widths must be positive");
  const double q = coarse / fine;
  const double m = std::round(q);
  if (m < 1 || std::abs(q - m) > 1e-9 * std::max(1.0, m))
    throw ConfigError(field, "estimator mesh " + std::to_string(coarse) +
                                 " is not an integer multiple of the fine step " +
                                 std::to_string(fine));
  return static_cast<Index>(m);
}

}  // namespace flowlab
