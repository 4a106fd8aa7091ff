#pragma once

#include <Eigen/Dense>

#include "i3d/int3dnet.hpp"
#include "i3d/motionenc.hpp"
#include "i3d/pointcloud.hpp"

namespace i3d {

struct RayScorerConfig {
  double sigma_ray = 0.15;  // meters
};

// Gaussian falloff around the final head-orientation ray; points behind the
// head score zero. Output is a probability per point.
VectorXd head_ray_scores(const ScenePointCloud& cloud,
                         const SparseMotionWindow& window,
                         const RayScorerConfig& config);

// Reduced DCT-domain GCN forecaster used by the motion-forecast baseline.
struct ForecastConfig {
  Eigen::Index horizon_frames = 15;
  double sigma_wrist = 0.2;  // meters
  Eigen::Index num_frames = 15;
  Eigen::Index feature_dim = 32;
  Eigen::Index gcn_layers = 2;

  void validate() const;
};

ModelParams init_forecaster(const ForecastConfig& config, std::uint64_t seed);

// Predicted future joint positions, horizon_frames x 9 (head, lhand, rhand).
MatrixXd forecast_future_joints(const SparseMotionWindow& window,
                                const ModelParams& params,
                                const ForecastConfig& config);

struct ForecastGradient {
  double loss = 0.0;  // mean squared position error
  std::map<std::string, MatrixXd> grads;
};

ForecastGradient forecast_gradient(const SparseMotionWindow& window,
                                   const MatrixXd& future_positions,
                                   const ModelParams& params,
                                   const ForecastConfig& config);

// Gaussian around the predicted wrist of the interacting hand (the hand with
// the larger predicted displacement; ties pick the left hand).
VectorXd motion_forecast_scores(const ScenePointCloud& cloud,
                                const SparseMotionWindow& window,
                                const ModelParams& forecast_params,
                                const ForecastConfig& config);

}  // namespace i3d
