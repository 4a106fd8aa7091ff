#pragma once

#include <Eigen/Dense>
#include <vector>

#include "i3d/errors.hpp"

namespace i3d {

using Eigen::MatrixXd;

// T frames of 3-joint (head, left hand, right hand) positions/velocities plus
// unit head-orientation vectors. Joint tensors are stored as T x 9 matrices,
// row t = [head xyz, lhand xyz, rhand xyz].
struct SparseMotionWindow {
  MatrixXd positions;          // T x 9, meters
  MatrixXd velocities;         // T x 9, m/s
  MatrixXd head_orientations;  // T x 3, unit rows
  double frame_interval = 0.0;

  Eigen::Index num_frames() const { return positions.rows(); }
  void validate() const;
};

// Unnormalized type-II DCT coefficients, frequency k along rows.
struct DctCoefficients {
  MatrixXd coeffs;  // T x d
};

// Symmetric-normalized adjacency D^{-1/2}(A+I)D^{-1/2} of the complete graph.
struct JointGraph {
  Eigen::Index num_nodes = 0;
  MatrixXd adjacency;
};

// v_t = (p_t - p_{t-1}) / dt for t >= 1; v_0 = v_1.
MatrixXd finite_diff_velocity(const MatrixXd& positions, double frame_interval);

// zhat[k] = sum_t z[t] cos((pi/T)(t + 1/2) k), per column, no scale factor.
DctCoefficients dct(const MatrixXd& sequence);

// The T x T matrix C with (dct(z)).coeffs == C * z.
MatrixXd dct_matrix(Eigen::Index t);

// Row t = [pos(head,lh,rh) | vel(head,lh,rh)] regrouped per joint:
// columns [j*6 .. j*6+2] = position of joint j, [j*6+3 .. j*6+5] = velocity.
// This is the T x 3 x 6 motion array flattened joint-major along columns.
MatrixXd assemble_motion_array(const SparseMotionWindow& window);

JointGraph normalized_adjacency(Eigen::Index num_nodes);

// Kronecker product, used to lift per-joint maps to stacked (T*J) layouts.
MatrixXd kron(const MatrixXd& a, const MatrixXd& b);

}  // namespace i3d
