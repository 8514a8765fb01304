#pragma once

#include "flowlab/tensor.hpp"

#include <cstdint>

namespace flowlab {

using IncrementMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct BrownianGrid {
  double t0 = 0;
  double t1 = 0;
  Index steps = 0;
  IncrementMatrix increments;  // steps x r
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  int level = 0;

  double step() const { return (t1 - t0) / static_cast<double>(steps); }
  double time(Index k) const {
    return k == steps ? t1 : t0 + static_cast<double>(k) * step();
  }
  Index noise_dim() const { return increments.cols(); }
  // W(node k) - W(node 0), summed left to right.
  VectorXd cumulative(Index k) const;
};

BrownianGrid sample_brownian(std::uint64_t master_seed, std::uint64_t path_index, double t0,
                             double t1, Index steps, Index r);

// Brownian-bridge refinement; each coarse increment is split into factor parts.
BrownianGrid refine(const BrownianGrid& grid, int factor);

// Sum of consecutive blocks of factor increments.
BrownianGrid coarsen(const BrownianGrid& grid, int factor);

// Number of fine steps per estimator step; throws unless coarse is a multiple of fine.
Index mesh_ratio(double coarse, double fine, const char* field = "mesh.H");

}  // namespace flowlab
