#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "i3d/motionenc.hpp"
#include "i3d/objective.hpp"
#include "i3d/pointcloud.hpp"

namespace i3d {

enum class Variant { full, mlp_fusion, motion_query, head_scene, scene_only };

Variant variant_from_string(const std::string& s);
std::string variant_to_string(Variant v);

struct SaLevel {
  Eigen::Index num_centers = 0;
  double radius = 0.0;
  Eigen::Index k_max = 0;
  std::vector<Eigen::Index> widths;
};

struct NetworkConfig {
  Eigen::Index feature_dim = 64;
  Eigen::Index num_frames = 15;
  std::vector<SaLevel> sa_levels = {{512, 0.4, 32, {32, 32, 64}},
                                    {128, 0.8, 32, {64, 64, 128}}};
  // Feature-propagation MLP widths, one list per step from the coarsest
  // level back down; the final step must end at feature_dim.
  std::vector<std::vector<Eigen::Index>> fp_widths = {{128}, {64}};
  Eigen::Index gcn_encoder_layers = 2;
  Eigen::Index gcn_decoder_layers = 2;
  std::vector<Eigen::Index> head_mlp_widths = {32, 64};
  std::vector<Eigen::Index> output_mlp_widths = {128, 64};
  std::string attention_kernel = "elu_plus_one";
  Variant variant = Variant::full;

  void validate() const;
};

// Micro configuration used by gradient checks and fast tests.
NetworkConfig micro_config();

struct ModelParams {
  std::map<std::string, MatrixXd> tensors;  // dotted names, fixed order
};

struct FeatureBundle {
  MatrixXd f_scene;            // N x D
  MatrixXd f_traj;             // (T*3) x D, t-major rows
  MatrixXd f_head;             // T x D
  MatrixXd f_pose;             // T x D
  MatrixXd a_pose;             // N x D
  MatrixXd f_fused;            // N x 2D (N x D for scene_only)
  MatrixXd attention_weights;  // N x T row-stochastic; empty unless full
};

struct IntentionHeatmap {
  VectorXd logits;
};

// Xavier-uniform weights, zero biases. Values are rounded to float so the
// 32-bit checkpoint round-trip is lossless.
ModelParams init_params(const NetworkConfig& config, std::uint64_t seed);

MatrixXd encode_scene(const ScenePointCloud& cloud, const ModelParams& params,
                      const NetworkConfig& config);
MatrixXd encode_motion(const MatrixXd& motion_array, const ModelParams& params,
                       const NetworkConfig& config);
MatrixXd encode_head(const MatrixXd& head_orientations, const ModelParams& params,
                     const NetworkConfig& config);
MatrixXd fuse_and_decode(const MatrixXd& f_traj, const MatrixXd& f_head,
                         const ModelParams& params, const NetworkConfig& config);

// Eq-style kernelized attention, phi = elu + 1. Returns the attended values
// and the explicit row-stochastic weight matrix.
std::pair<MatrixXd, MatrixXd> linear_cross_attention(const MatrixXd& q,
                                                     const MatrixXd& k,
                                                     const MatrixXd& v,
                                                     const std::string& kernel);

IntentionHeatmap forward(const ScenePointCloud& cloud,
                         const SparseMotionWindow& window,
                         const ModelParams& params, const NetworkConfig& config,
                         FeatureBundle* bundle = nullptr);

struct GradientResult {
  LossBreakdown loss;
  std::map<std::string, MatrixXd> grads;  // same keys/shapes as params
};

GradientResult gradient(const ScenePointCloud& cloud,
                        const SparseMotionWindow& window,
                        const BinaryIntentionMask& mask, const ModelParams& params,
                        const NetworkConfig& config, const LossConfig& loss_config);

}  // namespace i3d
