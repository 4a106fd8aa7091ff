#include "i3d/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "i3d/motionenc.hpp"
#include "i3d/rng.hpp"

namespace i3d {

void ScenePointCloud::validate() const {
  if (points.rows() < 1 || points.cols() != 3)
    throw ArgumentError("cloud must be a non-empty Nx3 matrix");
  if (!points.allFinite()) throw ArgumentError("cloud has non-finite coordinates");
}

void CameraModel::validate() const {
  if (fx <= 0 || fy <= 0) throw ArgumentError("focal lengths must be positive");
  if (cx < 0 || cx > width || cy < 0 || cy > height)
    throw ArgumentError("principal point outside image");
  Matrix3d r = extrinsic.topLeftCorner<3, 3>();
  if ((r.transpose() * r - Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6)
    throw ArgumentError("extrinsic rotation is not orthonormal");
  if (r.determinant() < 0) throw ArgumentError("extrinsic rotation is a reflection");
}

std::vector<Eigen::Index> farthest_point_sample(const ScenePointCloud& cloud,
                                                Eigen::Index m,
                                                Eigen::Index start_index) {
  cloud.validate();
  const Eigen::Index n = cloud.count();
  if (m < 1 || m > n) throw ArgumentError("farthest_point_sample: m out of range");
  if (start_index < 0 || start_index >= n)
    throw ArgumentError("farthest_point_sample: start_index out of range");

  std::vector<Eigen::Index> picked;
  picked.reserve(m);
  picked.push_back(start_index);
  VectorXd min_d2 =
      (cloud.points.rowwise() - cloud.points.row(start_index)).rowwise().squaredNorm();
  for (Eigen::Index i = 1; i < m; ++i) {
    Eigen::Index best = 0;
    double best_d2 = -1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (min_d2(j) > best_d2) {  // strict: ties keep the lowest index
        best_d2 = min_d2(j);
        best = j;
      }
    }
    picked.push_back(best);
    min_d2 = min_d2.cwiseMin(
        (cloud.points.rowwise() - cloud.points.row(best)).rowwise().squaredNorm());
  }
  return picked;
}

std::vector<BallGroup> ball_query(const ScenePointCloud& cloud,
                                  const MatrixXd& centers, double radius,
                                  Eigen::Index k_max) {
  cloud.validate();
  if (radius <= 0) throw ArgumentError("ball_query: radius must be positive");
  if (k_max < 1) throw ArgumentError("ball_query: k_max must be positive");
  const Eigen::Index n = cloud.count();
  const double r2 = radius * radius;

  std::vector<BallGroup> groups(centers.rows());
  std::vector<std::pair<double, Eigen::Index>> cand;
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    VectorXd d2 = (cloud.points.rowwise() - centers.row(c)).rowwise().squaredNorm();
    cand.clear();
    for (Eigen::Index j = 0; j < n; ++j)
      if (d2(j) <= r2) cand.emplace_back(d2(j), j);
    BallGroup& g = groups[c];
    if (cand.empty()) {
      Eigen::Index nearest = 0;
      d2.minCoeff(&nearest);
      g.indices.push_back(nearest);
      g.fallback = true;
      continue;
    }
    std::sort(cand.begin(), cand.end());
    const Eigen::Index take = std::min<Eigen::Index>(k_max, cand.size());
    g.indices.reserve(take);
    for (Eigen::Index j = 0; j < take; ++j) g.indices.push_back(cand[j].second);
  }
  return groups;
}

MatrixXd inverse_distance_interpolate(const MatrixXd& coarse_points,
                                      const MatrixXd& coarse_features,
                                      const MatrixXd& fine_points,
                                      Eigen::Index k) {
  const Eigen::Index m = coarse_points.rows();
  if (m == 0) throw ArgumentError("inverse_distance_interpolate: empty coarse set");
  if (k < 1 || k > m) throw ArgumentError("inverse_distance_interpolate: bad k");
  if (coarse_features.rows() != m)
    throw ArgumentError("inverse_distance_interpolate: feature/point count mismatch");

  const Eigen::Index n = fine_points.rows();
  MatrixXd out = MatrixXd::Zero(n, coarse_features.cols());
  std::vector<std::pair<double, Eigen::Index>> d(m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j)
      d[j] = {(coarse_points.row(j) - fine_points.row(i)).squaredNorm(), j};
    std::partial_sort(d.begin(), d.begin() + k, d.end());
    double wsum = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double w = 1.0 / (d[j].first + 1e-8);
      out.row(i) += w * coarse_features.row(d[j].second);
      wsum += w;
    }
    out.row(i) /= wsum;
  }
  return out;
}

ScenePointCloud distance_weighted_subsample(const ScenePointCloud& cloud,
                                            const Vector3d& origin,
                                            Eigen::Index n,
                                            std::uint64_t seed) {
  cloud.validate();
  const Eigen::Index total = cloud.count();
  if (n < 1 || n > total)
    throw ArgumentError("distance_weighted_subsample: n out of range");

  // Weighted sampling without replacement (exponential-sort keys): the n
  // smallest values of -log(u)/w are distributed as successive weighted draws.
  Rng rng(seed);
  std::vector<std::pair<double, Eigen::Index>> keys(total);
  for (Eigen::Index j = 0; j < total; ++j) {
    const double d = (cloud.points.row(j).transpose() - origin).norm();
    const double w = 1.0 / ((1.0 + d) * (1.0 + d));
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    keys[j] = {-std::log(u) / w, j};
  }
  std::partial_sort(keys.begin(), keys.begin() + n, keys.end());
  std::vector<Eigen::Index> sel(n);
  for (Eigen::Index i = 0; i < n; ++i) sel[i] = keys[i].second;
  std::sort(sel.begin(), sel.end());  // keep original index order

  ScenePointCloud out;
  out.points.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) out.points.row(i) = cloud.points.row(sel[i]);
  return out;
}

Vector3d BodyFrameTransform::apply_vector(const Vector3d& v) const {
  const double c = std::cos(yaw), s = std::sin(yaw);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y(), v.z()};
}

Vector3d BodyFrameTransform::apply_point(const Vector3d& p) const {
  return apply_vector(p) + translation;
}

std::pair<ScenePointCloud, SparseMotionWindow> align_to_body_frame(
    const ScenePointCloud& cloud, const SparseMotionWindow& motion,
    BodyFrameTransform* out_transform) {
  cloud.validate();
  if (motion.num_frames() < 1) throw ArgumentError("align_to_body_frame: empty window");

  const Eigen::Index last = motion.num_frames() - 1;
  const Vector3d head = motion.positions.row(last).segment<3>(0);
  const Vector3d heading = motion.head_orientations.row(last);
  const double horiz = std::hypot(heading.x(), heading.y());
  if (horiz < 1e-6)
    throw DegenerateInputError("align_to_body_frame: heading has no horizontal component");

  BodyFrameTransform tf;
  tf.yaw = -std::atan2(heading.y(), heading.x());
  const Vector3d rotated_head = tf.apply_vector(head);
  tf.translation = Vector3d(-rotated_head.x(), -rotated_head.y(), 0.0);
  if (out_transform) *out_transform = tf;

  ScenePointCloud out_cloud;
  out_cloud.points.resize(cloud.count(), 3);
  for (Eigen::Index i = 0; i < cloud.count(); ++i)
    out_cloud.points.row(i) = tf.apply_point(cloud.points.row(i));

  SparseMotionWindow out = motion;
  for (Eigen::Index t = 0; t < motion.num_frames(); ++t) {
    for (int j = 0; j < 3; ++j) {
      out.positions.row(t).segment<3>(3 * j) =
          tf.apply_point(motion.positions.row(t).segment<3>(3 * j));
      out.velocities.row(t).segment<3>(3 * j) =
          tf.apply_vector(motion.velocities.row(t).segment<3>(3 * j));
    }
    out.head_orientations.row(t) =
        tf.apply_vector(motion.head_orientations.row(t));
  }
  return {std::move(out_cloud), std::move(out)};
}

ScenePointCloud sample_mesh_surface(const std::vector<Matrix3d>& triangles,
                                    Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw ArgumentError("sample_mesh_surface: n must be positive");
  if (triangles.empty()) throw ArgumentError("sample_mesh_surface: no triangles");

  std::vector<double> cum_area(triangles.size());
  double total = 0.0;
  for (std::size_t i = 0; i < triangles.size(); ++i) {
    const Matrix3d& t = triangles[i];
    const Vector3d e1 = t.row(1) - t.row(0);
    const Vector3d e2 = t.row(2) - t.row(0);
    total += 0.5 * e1.cross(e2).norm();
    cum_area[i] = total;
  }
  if (total <= 0.0) throw DegenerateInputError("sample_mesh_surface: zero total area");

  Rng rng(seed);
  ScenePointCloud out;
  out.points.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pick = rng.uniform() * total;
    const std::size_t ti =
        std::lower_bound(cum_area.begin(), cum_area.end(), pick) - cum_area.begin();
    const Matrix3d& t = triangles[std::min(ti, triangles.size() - 1)];
    double u = rng.uniform(), v = rng.uniform();
    if (u + v > 1.0) {  // fold into the lower barycentric half
      u = 1.0 - u;
      v = 1.0 - v;
    }
    out.points.row(i) =
        (1.0 - u - v) * t.row(0) + u * t.row(1) + v * t.row(2);
  }
  return out;
}

std::optional<PixelBox> project_intention_to_image(const ScenePointCloud& cloud,
                                                   const VectorXd& score_logits,
                                                   const CameraModel& camera,
                                                   double score_threshold) {
  cloud.validate();
  camera.validate();
  if (score_logits.size() != cloud.count())
    throw ArgumentError("project_intention_to_image: score length mismatch");

  bool any = false;
  PixelBox box{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
               std::numeric_limits<double>::lowest(),
               std::numeric_limits<double>::lowest()};
  for (Eigen::Index i = 0; i < cloud.count(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-score_logits(i)));
    if (p < score_threshold) continue;
    Eigen::Vector4d hom;
    hom << cloud.points.row(i).transpose(), 1.0;
    const Eigen::Vector4d cam = camera.extrinsic * hom;
    if (cam.z() <= 0.0) continue;
    const double u = camera.fx * cam.x() / cam.z() + camera.cx;
    const double v = camera.fy * cam.y() / cam.z() + camera.cy;
    any = true;
    box.x_min = std::min(box.x_min, u);
    box.y_min = std::min(box.y_min, v);
    box.x_max = std::max(box.x_max, u);
    box.y_max = std::max(box.y_max, v);
  }
  if (!any) return std::nullopt;
  box.x_min = std::clamp(box.x_min, 0.0, camera.width);
  box.x_max = std::clamp(box.x_max, 0.0, camera.width);
  box.y_min = std::clamp(box.y_min, 0.0, camera.height);
  box.y_max = std::clamp(box.y_max, 0.0, camera.height);
  return box;
}

}  // namespace i3d
