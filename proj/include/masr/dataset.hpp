#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "masr/kinematics.hpp"
#include "masr/rng.hpp"
#include "masr/robot.hpp"
#include "masr/se2.hpp"

namespace masr {

/// Occupancy grid over the upper half workspace x in [-l, l], y in [0, l].
/// A cell is marked once the first pose lands in it; later hits are
/// discarded, which is what enforces the dataset's uniform coverage.
class OccupancyGrid {
public:
  OccupancyGrid(std::size_t cells_x, std::size_t cells_y, double half_width)
      : nx_(cells_x), ny_(cells_y), half_width_(half_width),
        dx_(2.0 * half_width / static_cast<double>(cells_x)),
        dy_(half_width / static_cast<double>(cells_y)),
        occupied_(cells_x * cells_y, 0) {
    if (cells_x == 0 || cells_y == 0) throw std::invalid_argument("grid dimensions must be positive");
    if (half_width <= 0.0) throw std::invalid_argument("grid extent must be positive");
  }

  std::size_t cells_x() const { return nx_; }
  std::size_t cells_y() const { return ny_; }

  /// Cell of a position; false when it falls outside the covered rectangle.
  bool cell_of(double x, double y, std::size_t& a, std::size_t& b) const {
    const double fa = std::floor((x + half_width_) / dx_);
    const double fb = std::floor(y / dy_);
    if (fa < 0.0 || fb < 0.0 || fa >= static_cast<double>(nx_) || fb >= static_cast<double>(ny_))
      return false;
    a = static_cast<std::size_t>(fa);
    b = static_cast<std::size_t>(fb);
    return true;
  }

  bool occupied(std::size_t a, std::size_t b) const { return occupied_[b * nx_ + a] != 0; }
  void mark(std::size_t a, std::size_t b) {
    if (!occupied_[b * nx_ + a]) {
      occupied_[b * nx_ + a] = 1;
      ++count_;
    }
  }
  std::size_t occupied_count() const { return count_; }

private:
  std::size_t nx_, ny_;
  double half_width_, dx_, dy_;
  std::vector<std::uint8_t> occupied_;
  std::size_t count_ = 0;
};

/// True when every 4-connected component of empty cells that does not touch
/// the grid border has at most `rho` cells. Border-touching emptiness is
/// exterior space and exempt.
inline bool density_sufficient(const OccupancyGrid& grid, std::size_t rho) {
  const std::size_t nx = grid.cells_x(), ny = grid.cells_y();
  std::vector<std::uint8_t> seen(nx * ny, 0);
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  for (std::size_t b0 = 0; b0 < ny; ++b0) {
    for (std::size_t a0 = 0; a0 < nx; ++a0) {
      if (seen[b0 * nx + a0] || grid.occupied(a0, b0)) continue;
      // flood one empty component
      std::size_t size = 0;
      bool touches_border = false;
      stack.clear();
      stack.emplace_back(a0, b0);
      seen[b0 * nx + a0] = 1;
      while (!stack.empty()) {
        const auto [a, b] = stack.back();
        stack.pop_back();
        ++size;
        if (a == 0 || b == 0 || a == nx - 1 || b == ny - 1) touches_border = true;
        const std::pair<std::size_t, std::size_t> nbrs[4] = {
            {a + 1, b}, {a - 1, b}, {a, b + 1}, {a, b - 1}};
        for (const auto& [na, nb] : nbrs) {
          if (na >= nx || nb >= ny) continue;  // wraps below zero are >= too
          if (seen[nb * nx + na] || grid.occupied(na, nb)) continue;
          seen[nb * nx + na] = 1;
          stack.emplace_back(na, nb);
        }
      }
      if (!touches_border && size > rho) return false;
    }
  }
  return true;
}

/// Uniform-coverage gripper pose samples plus the generation protocol that
/// produced them.
struct PoseDataset {
  std::vector<PoseSE2> poses;
  std::size_t grid_x = 0, grid_y = 0;
  std::size_t rho = 0;
  std::uint64_t seed = 0;
  std::uint64_t draws = 0;
  bool density_reached = false;

  std::size_t size() const { return poses.size(); }
};

/// Mirrors an upper-half dataset across the x axis: each pose (x, y, phi)
/// gains its twin (x, -y, -phi); self-mirrored poses are not duplicated.
inline PoseDataset mirror_dataset(const PoseDataset& upper) {
  PoseDataset out = upper;
  out.poses.reserve(2 * upper.poses.size());
  for (const auto& p : upper.poses) {
    if (p.y < 0.0) throw std::invalid_argument("mirror_dataset: input pose has y < 0");
    const PoseSE2 twin(p.x, -p.y, -p.phi);
    if (twin.y == p.y && twin.phi == p.phi) continue;
    out.poses.push_back(twin);
  }
  return out;
}

inline constexpr std::uint64_t kDensityCheckInterval = 50000;

/// Rejection-samples feasible configurations, keeps the pose of the first
/// sample landing in each unoccupied upper-half grid cell, and stops once the
/// vacancy criterion holds (checked every kDensityCheckInterval draws) or the
/// draw budget runs out. The result is the mirrored union.
inline PoseDataset generate_dataset(const RobotModel& model, std::size_t grid_x,
                                    std::size_t grid_y, std::size_t rho, std::uint64_t seed,
                                    std::uint64_t max_samples) {
  if (grid_x < 10 || grid_y < 10) throw std::invalid_argument("grid must be at least 10x10");
  if (rho < 1) throw std::invalid_argument("rho must be at least 1");

  OccupancyGrid grid(grid_x, grid_y, model.total_length());
  Rng rng(seed);
  PoseDataset data;
  data.grid_x = grid_x;
  data.grid_y = grid_y;
  data.rho = rho;
  data.seed = seed;

  while (data.draws < max_samples) {
    const Configuration q = model.sample_configuration(rng);
    ++data.draws;
    const PoseSE2 x = forward_kinematics(model, q);
    if (x.y >= 0.0) {
      std::size_t a = 0, b = 0;
      if (grid.cell_of(x.x, x.y, a, b) && !grid.occupied(a, b)) {
        grid.mark(a, b);
        data.poses.push_back(x);
      }
    }
    if (data.draws % kDensityCheckInterval == 0 && density_sufficient(grid, rho)) {
      data.density_reached = true;
      break;
    }
  }
  if (!data.density_reached && density_sufficient(grid, rho)) data.density_reached = true;
  return mirror_dataset(data);
}

}  // namespace masr
