#ifndef DACOMP_GRID_HPP
#define DACOMP_GRID_HPP

#include <cmath>

#include <Eigen/Core>

#include "dacomp/errors.hpp"

namespace dacomp {

// Regular 2D lattice with row-major flattening: flatten(i, j) = i * ny + j.
struct GridGeometry {
  Eigen::Index nx = 0;
  Eigen::Index ny = 0;

  GridGeometry(Eigen::Index nx_, Eigen::Index ny_) : nx(nx_), ny(ny_) {
    if (nx <= 0 || ny <= 0)
      throw ParameterError("GridGeometry: dimensions must be positive");
  }

  Eigen::Index size() const { return nx * ny; }

  Eigen::Index flatten(Eigen::Index i, Eigen::Index j) const {
    return i * ny + j;
  }

  // Euclidean distance between flattened lattice points p and q.
  double distance(Eigen::Index p, Eigen::Index q) const {
    const double di = static_cast<double>(p / ny - q / ny);
    const double dj = static_cast<double>(p % ny - q % ny);
    return std::sqrt(di * di + dj * dj);
  }
};

}  // namespace dacomp

#endif
