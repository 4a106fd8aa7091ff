#include "i3d/motionenc.hpp"

#include <cmath>

namespace i3d {

void SparseMotionWindow::validate() const {
  const Eigen::Index t = positions.rows();
  if (t < 2) throw ArgumentError("motion window needs at least 2 frames");
  if (positions.cols() != 9 || velocities.rows() != t || velocities.cols() != 9 ||
      head_orientations.rows() != t || head_orientations.cols() != 3)
    throw ArgumentError("motion window shape mismatch");
  if (frame_interval <= 0) throw ArgumentError("frame_interval must be positive");
  if (!positions.allFinite() || !velocities.allFinite() ||
      !head_orientations.allFinite())
    throw ArgumentError("motion window has non-finite entries");
  for (Eigen::Index i = 0; i < t; ++i)
    if (std::abs(head_orientations.row(i).norm() - 1.0) > 1e-4)
      throw ArgumentError("head orientation rows must be unit vectors");
}

MatrixXd finite_diff_velocity(const MatrixXd& positions, double frame_interval) {
  if (positions.rows() < 2)
    throw ArgumentError("finite_diff_velocity: need at least 2 frames");
  if (frame_interval <= 0)
    throw ArgumentError("finite_diff_velocity: frame_interval must be positive");
  MatrixXd v(positions.rows(), positions.cols());
  for (Eigen::Index t = 1; t < positions.rows(); ++t)
    v.row(t) = (positions.row(t) - positions.row(t - 1)) / frame_interval;
  v.row(0) = v.row(1);
  return v;
}

MatrixXd dct_matrix(Eigen::Index t) {
  if (t < 1) throw ArgumentError("dct: T must be positive");
  MatrixXd c(t, t);
  const double base = M_PI / static_cast<double>(t);
  for (Eigen::Index k = 0; k < t; ++k)
    for (Eigen::Index i = 0; i < t; ++i)
      c(k, i) = std::cos(base * (static_cast<double>(i) + 0.5) * static_cast<double>(k));
  return c;
}

DctCoefficients dct(const MatrixXd& sequence) {
  return {dct_matrix(sequence.rows()) * sequence};
}

MatrixXd assemble_motion_array(const SparseMotionWindow& window) {
  window.validate();
  const Eigen::Index t = window.num_frames();
  MatrixXd m(t, 18);
  for (int j = 0; j < 3; ++j) {
    m.middleCols<3>(6 * j) = window.positions.middleCols<3>(3 * j);
    m.middleCols<3>(6 * j + 3) = window.velocities.middleCols<3>(3 * j);
  }
  return m;
}

JointGraph normalized_adjacency(Eigen::Index num_nodes) {
  if (num_nodes < 1) throw ArgumentError("normalized_adjacency: need >= 1 node");
  // Complete graph with self-loops: A+I is all-ones, every degree = n,
  // so D^{-1/2}(A+I)D^{-1/2} has every entry 1/n.
  JointGraph g;
  g.num_nodes = num_nodes;
  g.adjacency = MatrixXd::Constant(num_nodes, num_nodes,
                                   1.0 / static_cast<double>(num_nodes));
  return g;
}

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd y(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      y.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return y;
}

}  // namespace i3d
