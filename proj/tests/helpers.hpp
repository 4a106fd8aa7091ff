#pragma once

#include <Eigen/Dense>

#include "i3d/motionenc.hpp"
#include "i3d/pointcloud.hpp"
#include "i3d/rng.hpp"

namespace testutil {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline i3d::ScenePointCloud random_cloud(Eigen::Index n, i3d::Rng& rng,
                                         double extent = 2.0) {
  i3d::ScenePointCloud cloud;
  cloud.points.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      cloud.points(i, j) = rng.uniform(-extent, extent);
  return cloud;
}

// A smooth, already-aligned motion window: head near origin facing +x,
// hands reaching forward.
inline i3d::SparseMotionWindow random_window(Eigen::Index t, i3d::Rng& rng) {
  i3d::SparseMotionWindow w;
  w.frame_interval = 1.0 / 30.0;
  w.positions.resize(t, 9);
  w.head_orientations.resize(t, 3);
  const double amp = 0.3;
  for (Eigen::Index f = 0; f < t; ++f) {
    const double u = static_cast<double>(f) / static_cast<double>(t);
    w.positions.row(f) << 0.02 * u, 0.01 * std::sin(u), 1.6,          // head
        0.3 + amp * u, 0.2 - 0.1 * u, 1.1 + 0.05 * u,                  // left
        0.3 + amp * u * u, -0.2 + 0.1 * u, 1.1;                        // right
    for (int c = 0; c < 9; ++c) w.positions(f, c) += 0.003 * rng.normal();
    Eigen::Vector3d dir(1.0, 0.2 * u + 0.01 * rng.normal(),
                        -0.1 + 0.02 * rng.normal());
    w.head_orientations.row(f) = dir.normalized();
  }
  w.velocities = i3d::finite_diff_velocity(w.positions, w.frame_interval);
  return w;
}

// Central finite difference of f with respect to entry (i,j) of m.
template <typename F>
double central_diff(MatrixXd& m, Eigen::Index i, Eigen::Index j, double h, F&& f) {
  const double keep = m(i, j);
  m(i, j) = keep + h;
  const double up = f();
  m(i, j) = keep - h;
  const double down = f();
  m(i, j) = keep;
  return (up - down) / (2.0 * h);
}

inline double rel_err(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace testutil
