#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "i3d/errors.hpp"

namespace i3d {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

struct SparseMotionWindow;  // motionenc.hpp

// N scene points, meters, body-aligned frame. Row n = point n.
struct ScenePointCloud {
  MatrixXd points;  // N x 3

  Eigen::Index count() const { return points.rows(); }
  void validate() const;
};

// Pin-hole camera: world-to-camera rigid extrinsic plus intrinsics in pixels.
struct CameraModel {
  Eigen::Matrix4d extrinsic = Eigen::Matrix4d::Identity();
  double fx = 1.0, fy = 1.0;
  double cx = 0.0, cy = 0.0;
  double width = 0.0, height = 0.0;

  void validate() const;
};

struct PixelBox {
  double x_min, y_min, x_max, y_max;
};

// One ball-query group: member indices sorted by (distance, index). If no
// point fell inside the radius, the group degrades to the single globally
// nearest point and `fallback` is set.
struct BallGroup {
  std::vector<Eigen::Index> indices;
  bool fallback = false;
};

// Greedy max-min farthest point sampling; ties broken by lowest index.
std::vector<Eigen::Index> farthest_point_sample(const ScenePointCloud& cloud,
                                                Eigen::Index m,
                                                Eigen::Index start_index);

// Fixed-radius neighborhoods around each center (row of `centers`), at most
// k_max members each, sorted ascending by distance then index.
std::vector<BallGroup> ball_query(const ScenePointCloud& cloud,
                                  const MatrixXd& centers, double radius,
                                  Eigen::Index k_max);

// Inverse-distance weighted k-NN feature upsampling, weights 1/(d^2 + 1e-8).
MatrixXd inverse_distance_interpolate(const MatrixXd& coarse_points,
                                      const MatrixXd& coarse_features,
                                      const MatrixXd& fine_points,
                                      Eigen::Index k);

// Sampling without replacement with weight 1/(1+d)^2, d = distance to origin.
ScenePointCloud distance_weighted_subsample(const ScenePointCloud& cloud,
                                            const Vector3d& origin,
                                            Eigen::Index n,
                                            std::uint64_t seed);

// Yaw rotation + horizontal translation taking the last-frame head position
// to the horizontal origin and the horizontal heading to +x. Vertical axis
// untouched. The same transform is applied to points, joints, velocities and
// orientations (the latter two rotation-only).
struct BodyFrameTransform {
  double yaw = 0.0;                       // applied rotation about +z
  Vector3d translation = Vector3d::Zero();  // applied after rotation

  Vector3d apply_point(const Vector3d& p) const;
  Vector3d apply_vector(const Vector3d& v) const;
};

std::pair<ScenePointCloud, SparseMotionWindow> align_to_body_frame(
    const ScenePointCloud& cloud, const SparseMotionWindow& motion,
    BodyFrameTransform* out_transform = nullptr);

// Area-weighted uniform surface sampling over a triangle soup.
// Each triangle is a 3x3 matrix, one vertex per row.
ScenePointCloud sample_mesh_surface(const std::vector<Matrix3d>& triangles,
                                    Eigen::Index n, std::uint64_t seed);

// Projects points whose sigmoid(score) clears the threshold into the image
// and returns the clipped bounding box of the in-image hits, if any.
std::optional<PixelBox> project_intention_to_image(const ScenePointCloud& cloud,
                                                   const VectorXd& score_logits,
                                                   const CameraModel& camera,
                                                   double score_threshold);

}  // namespace i3d
