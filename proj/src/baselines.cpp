#include "i3d/baselines.hpp"

#include <cmath>

#include "i3d/autodiff.hpp"
#include "i3d/rng.hpp"

namespace i3d {

VectorXd head_ray_scores(const ScenePointCloud& cloud,
                         const SparseMotionWindow& window,
                         const RayScorerConfig& config) {
  cloud.validate();
  window.validate();
  if (config.sigma_ray <= 0) throw ArgumentError("head_ray_scores: sigma must be > 0");
  const Eigen::Index last = window.num_frames() - 1;
  const Vector3d origin = window.positions.row(last).segment<3>(0);
  const Vector3d dir = window.head_orientations.row(last).transpose().normalized();
  const double denom = 2.0 * config.sigma_ray * config.sigma_ray;

  VectorXd scores(cloud.count());
  for (Eigen::Index i = 0; i < cloud.count(); ++i) {
    const Vector3d v = cloud.points.row(i).transpose() - origin;
    const double along = v.dot(dir);
    if (along <= 0.0) {
      scores(i) = 0.0;
      continue;
    }
    const double d_perp2 = (v - along * dir).squaredNorm();
    scores(i) = std::exp(-d_perp2 / denom);
  }
  return scores;
}

void ForecastConfig::validate() const {
  if (horizon_frames < 1) throw ArgumentError("forecast: horizon_frames must be >= 1");
  if (num_frames < 2 || feature_dim < 1 || gcn_layers < 1 || sigma_wrist <= 0)
    throw ArgumentError("forecast: malformed config");
}

namespace {

using ad::Tape;
using Id = Tape::Id;

std::vector<std::pair<std::string, std::pair<Eigen::Index, Eigen::Index>>>
forecast_layout(const ForecastConfig& cfg) {
  std::vector<std::pair<std::string, std::pair<Eigen::Index, Eigen::Index>>> out;
  Eigen::Index ch = 6;
  for (Eigen::Index l = 0; l < cfg.gcn_layers; ++l) {
    const std::string p = "enc" + std::to_string(l);
    out.push_back({p + ".temporal", {cfg.num_frames, cfg.num_frames}});
    out.push_back({p + ".weight", {ch, cfg.feature_dim}});
    out.push_back({p + ".bias", {1, cfg.feature_dim}});
    ch = cfg.feature_dim;
  }
  // Shared per-joint readout from the flattened frequency-feature vector to
  // future displacements relative to the last observed position.
  out.push_back({"read.weight",
                 {cfg.num_frames * cfg.feature_dim, cfg.horizon_frames * 3}});
  out.push_back({"read.bias", {1, cfg.horizon_frames * 3}});
  return out;
}

struct FGraph {
  Tape tape;
  std::map<std::string, Id> pid;
};

FGraph forecast_graph(const ModelParams& params, const ForecastConfig& cfg,
                      bool differentiable) {
  if (params.tensors.empty())
    throw ArgumentError("forecaster: untrained (empty) parameter set");
  FGraph g;
  for (const auto& [name, shape] : forecast_layout(cfg)) {
    auto it = params.tensors.find(name);
    if (it == params.tensors.end())
      throw ArgumentError("forecaster: missing parameter " + name);
    if (it->second.rows() != shape.first || it->second.cols() != shape.second)
      throw ArgumentError("forecaster: parameter shape mismatch " + name);
    g.pid[name] = differentiable ? g.tape.param(it->second)
                                 : g.tape.constant(it->second);
  }
  return g;
}

// horizon_frames x 9 prediction node.
Id forecast_forward(FGraph& g, const SparseMotionWindow& window,
                    const ForecastConfig& cfg) {
  window.validate();
  if (window.num_frames() != cfg.num_frames)
    throw ArgumentError("forecaster: window length does not match config");
  const Eigen::Index t = cfg.num_frames;
  const MatrixXd m = assemble_motion_array(window);
  MatrixXd rows(t * 3, 6);
  for (Eigen::Index f = 0; f < t; ++f)
    for (Eigen::Index j = 0; j < 3; ++j)
      rows.row(f * 3 + j) = m.row(f).segment<6>(6 * j);

  Id x = g.tape.const_premul(kron(dct_matrix(t), MatrixXd::Identity(3, 3)),
                             g.tape.constant(rows));
  const MatrixXd mix =
      kron(MatrixXd::Identity(t, t), normalized_adjacency(3).adjacency);
  for (Eigen::Index l = 0; l < cfg.gcn_layers; ++l) {
    const std::string p = "enc" + std::to_string(l);
    x = g.tape.const_premul(mix, x);
    x = g.tape.temporal_mix(g.pid.at(p + ".temporal"), x, 3);
    x = g.tape.add_row_broadcast(g.tape.matmul(x, g.pid.at(p + ".weight")),
                                 g.pid.at(p + ".bias"));
    x = g.tape.relu(x);
  }

  // Regroup to one row per joint: 3 x (T*D).
  std::vector<Eigen::Index> order(3 * t);
  for (Eigen::Index j = 0; j < 3; ++j)
    for (Eigen::Index f = 0; f < t; ++f) order[j * t + f] = f * 3 + j;
  Id per_joint = g.tape.gather_rows(x, order);  // (3*T) x D rows, joint-major
  // Flatten each joint's T x D block into one row, frame-major columns.
  Id joint_rows = -1;
  for (Eigen::Index f = 0; f < t; ++f) {
    std::vector<Eigen::Index> sel(3);
    for (Eigen::Index j = 0; j < 3; ++j) sel[j] = j * t + f;
    Id slice = g.tape.gather_rows(per_joint, sel);  // 3 x D, frame f
    joint_rows = f == 0 ? slice : g.tape.concat_cols(joint_rows, slice);
  }
  // joint_rows: 3 x (T*D), columns ordered frame-major.
  Id disp = g.tape.add_row_broadcast(
      g.tape.matmul(joint_rows, g.pid.at("read.weight")), g.pid.at("read.bias"));
  // disp: 3 x (horizon*3); add last observed position per joint.
  const Eigen::Index h = cfg.horizon_frames;
  MatrixXd last(3, 3);
  for (Eigen::Index j = 0; j < 3; ++j)
    last.row(j) = window.positions.row(t - 1).segment<3>(3 * j);
  Id base = g.tape.constant(last.replicate(1, h));
  Id pred = g.tape.add(disp, base);  // 3 x (h*3), joint rows

  // Reshape to h x 9: row k = [head, lhand, rhand] at future frame k.
  // Done outside the tape for forward use; for the loss we keep 3 x (h*3).
  return pred;
}

MatrixXd to_future_layout(const MatrixXd& pred, Eigen::Index h) {
  MatrixXd out(h, 9);
  for (Eigen::Index k = 0; k < h; ++k)
    for (Eigen::Index j = 0; j < 3; ++j)
      out.row(k).segment<3>(3 * j) = pred.row(j).segment<3>(3 * k);
  return out;
}

}  // namespace

ModelParams init_forecaster(const ForecastConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  Rng rng(seed);
  for (const auto& [name, shape] : forecast_layout(config)) {
    MatrixXd m = MatrixXd::Zero(shape.first, shape.second);
    if (name.substr(name.size() - 5) != ".bias") {
      const double bound =
          std::sqrt(6.0 / static_cast<double>(shape.first + shape.second));
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
          m(i, j) = static_cast<double>(
              static_cast<float>(rng.uniform(-bound, bound)));
    }
    p.tensors.emplace(name, std::move(m));
  }
  return p;
}

MatrixXd forecast_future_joints(const SparseMotionWindow& window,
                                const ModelParams& params,
                                const ForecastConfig& config) {
  config.validate();
  FGraph g = forecast_graph(params, config, false);
  Id pred = forecast_forward(g, window, config);
  return to_future_layout(g.tape.value(pred), config.horizon_frames);
}

ForecastGradient forecast_gradient(const SparseMotionWindow& window,
                                   const MatrixXd& future_positions,
                                   const ModelParams& params,
                                   const ForecastConfig& config) {
  config.validate();
  if (future_positions.rows() != config.horizon_frames || future_positions.cols() != 9)
    throw ArgumentError("forecast_gradient: future positions must be horizon x 9");
  FGraph g = forecast_graph(params, config, true);
  Id pred = forecast_forward(g, window, config);

  // Target in the 3 x (h*3) layout of the prediction node.
  MatrixXd target(3, config.horizon_frames * 3);
  for (Eigen::Index k = 0; k < config.horizon_frames; ++k)
    for (Eigen::Index j = 0; j < 3; ++j)
      target.row(j).segment<3>(3 * k) = future_positions.row(k).segment<3>(3 * j);
  Id diff = g.tape.sub(pred, g.tape.constant(target));
  Id loss = g.tape.mean_all(g.tape.cwise_mul(diff, diff));
  g.tape.backward(loss);

  ForecastGradient out;
  out.loss = g.tape.value(loss)(0, 0);
  for (const auto& [name, value] : params.tensors) {
    const MatrixXd& grad = g.tape.grad(g.pid.at(name));
    out.grads.emplace(name, grad.size() == 0
                                ? MatrixXd::Zero(value.rows(), value.cols())
                                : grad);
  }
  return out;
}

VectorXd motion_forecast_scores(const ScenePointCloud& cloud,
                                const SparseMotionWindow& window,
                                const ModelParams& forecast_params,
                                const ForecastConfig& config) {
  cloud.validate();
  const MatrixXd future = forecast_future_joints(window, forecast_params, config);
  const Eigen::Index last_obs = window.num_frames() - 1;
  const Eigen::Index last = future.rows() - 1;
  const double dl = (future.row(last).segment<3>(3) -
                     window.positions.row(last_obs).segment<3>(3))
                        .norm();
  const double dr = (future.row(last).segment<3>(6) -
                     window.positions.row(last_obs).segment<3>(6))
                        .norm();
  const Vector3d wrist = dl >= dr ? future.row(last).segment<3>(3).transpose()
                                  : future.row(last).segment<3>(6).transpose();
  const double denom = 2.0 * config.sigma_wrist * config.sigma_wrist;
  VectorXd scores(cloud.count());
  for (Eigen::Index i = 0; i < cloud.count(); ++i)
    scores(i) =
        std::exp(-(cloud.points.row(i).transpose() - wrist).squaredNorm() / denom);
  return scores;
}

}  // namespace i3d
