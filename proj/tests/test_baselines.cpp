#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "i3d/baselines.hpp"
#include "i3d/datapipe.hpp"
#include "i3d/metrics.hpp"

using namespace i3d;
using testutil::random_cloud;
using testutil::random_window;

TEST_CASE("head_ray_scores geometry") {
  Rng rng(1);
  SparseMotionWindow w = random_window(5, rng);
  // Final frame: head at known position facing exactly +x.
  w.positions.row(4).segment<3>(0) << 0, 0, 1.6;
  w.head_orientations.row(4) << 1, 0, 0;
  RayScorerConfig cfg;  // sigma 0.15

  ScenePointCloud c;
  c.points.resize(4, 3);
  c.points << 1.0, 0.0, 1.6,        // on the ray
      1.0, cfg.sigma_ray, 1.6,       // one sigma off the ray
      -1.0, 0.0, 1.6,                // behind
      2.0, 0.5, 1.6;                 // off by 0.5 m
  const VectorXd s = head_ray_scores(c, w, cfg);
  CHECK(s(0) == doctest::Approx(1.0));
  CHECK(s(1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
  CHECK(s(2) == 0.0);
  CHECK(s(3) < s(1));
  CHECK(s.minCoeff() >= 0.0);
  CHECK(s.maxCoeff() <= 1.0);
}

TEST_CASE("head_ray_scores joint-rotation invariance") {
  Rng rng(2);
  SparseMotionWindow w = random_window(6, rng);
  ScenePointCloud c = random_cloud(50, rng, 1.5);
  const VectorXd base = head_ray_scores(c, w, RayScorerConfig{});

  const double ang = 0.83;
  Eigen::Matrix3d r;
  r << std::cos(ang), -std::sin(ang), 0, std::sin(ang), std::cos(ang), 0, 0, 0, 1;
  ScenePointCloud rc;
  rc.points = c.points * r.transpose();
  SparseMotionWindow rw = w;
  for (Eigen::Index f = 0; f < 6; ++f) {
    for (int j = 0; j < 3; ++j) {
      rw.positions.row(f).segment<3>(3 * j) =
          (r * w.positions.row(f).segment<3>(3 * j).transpose()).transpose();
      rw.velocities.row(f).segment<3>(3 * j) =
          (r * w.velocities.row(f).segment<3>(3 * j).transpose()).transpose();
    }
    rw.head_orientations.row(f) =
        (r * w.head_orientations.row(f).transpose()).transpose();
  }
  const VectorXd rotated = head_ray_scores(rc, rw, RayScorerConfig{});
  CHECK((rotated - base).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("head_ray_scores is a meaningful scorer on an on-ray target") {
  Rng rng(3);
  SparseMotionWindow w = random_window(5, rng);
  w.positions.row(4).segment<3>(0) << 0, 0, 1.5;
  w.head_orientations.row(4) << 1, 0, 0;
  // Cloud: cluster at the gaze target plus background away from the ray.
  ScenePointCloud c = random_cloud(300, rng, 1.5);
  c.points.col(1).array() += 1.5;  // push background off-ray
  const Eigen::Vector3d target(1.2, 0.0, 1.5);
  for (Eigen::Index i = 0; i < 40; ++i)
    c.points.row(i) = target.transpose() + 0.05 * Eigen::RowVector3d(
        rng.normal(), rng.normal(), rng.normal());
  GroundTruth gt = gaussian_gt(c, target, GtConfig{});
  const VectorXd scores = head_ray_scores(c, w, RayScorerConfig{});
  // Convert probabilities to logits for the metric API (monotone, AUC-safe).
  VectorXd logits(scores.size());
  for (Eigen::Index i = 0; i < scores.size(); ++i)
    logits(i) = std::log(std::clamp(scores(i), 1e-12, 1.0) /
                         (1.0 - std::clamp(scores(i), 1e-12, 1.0 - 1e-12)));
  CHECK(auc(logits, gt.mask) >= 95.0);
}

TEST_CASE("forecaster shapes, determinism and untrained rejection") {
  ForecastConfig cfg;
  cfg.num_frames = 6;
  cfg.horizon_frames = 4;
  cfg.feature_dim = 8;
  Rng rng(4);
  SparseMotionWindow w = random_window(6, rng);

  const ModelParams p1 = init_forecaster(cfg, 5);
  const ModelParams p2 = init_forecaster(cfg, 5);
  for (const auto& [name, m] : p1.tensors) CHECK(m == p2.tensors.at(name));

  const MatrixXd f = forecast_future_joints(w, p1, cfg);
  CHECK(f.rows() == 4);
  CHECK(f.cols() == 9);
  CHECK(f.allFinite());
  CHECK(forecast_future_joints(w, p1, cfg) == f);

  ModelParams empty;
  CHECK_THROWS_AS(forecast_future_joints(w, empty, cfg), ArgumentError);
}

TEST_CASE("forecast_gradient matches finite differences") {
  ForecastConfig cfg;
  cfg.num_frames = 5;
  cfg.horizon_frames = 3;
  cfg.feature_dim = 4;
  cfg.gcn_layers = 1;
  Rng rng(5);
  SparseMotionWindow w = random_window(5, rng);
  MatrixXd target(3, 9);
  for (Eigen::Index i = 0; i < target.size(); ++i) target(i) = rng.normal();

  ModelParams params = init_forecaster(cfg, 6);
  const ForecastGradient g = forecast_gradient(w, target, params, cfg);
  CHECK(g.loss > 0.0);

  int checked = 0;
  for (auto& [name, m] : params.tensors) {
    const MatrixXd& grad = g.grads.at(name);
    for (Eigen::Index i = 0; i < std::min<Eigen::Index>(m.rows(), 2); ++i)
      for (Eigen::Index j = 0; j < std::min<Eigen::Index>(m.cols(), 2); ++j) {
        const double numeric = testutil::central_diff(m, i, j, 1e-5, [&]() {
          return forecast_gradient(w, target, params, cfg).loss;
        });
        CHECK(testutil::rel_err(grad(i, j), numeric) < 1e-4);
        ++checked;
      }
  }
  CHECK(checked > 0);
}

TEST_CASE("motion_forecast_scores picks the moving hand and scores a Gaussian") {
  ForecastConfig cfg;
  cfg.num_frames = 5;
  cfg.horizon_frames = 3;
  cfg.feature_dim = 4;
  Rng rng(6);
  SparseMotionWindow w = random_window(5, rng);
  ModelParams params = init_forecaster(cfg, 7);

  // The scorer is a Gaussian around the predicted wrist; verify against the
  // forecaster's own prediction.
  const MatrixXd fut = forecast_future_joints(w, params, cfg);
  const Eigen::Vector3d l0 = w.positions.row(4).segment<3>(3);
  const Eigen::Vector3d r0 = w.positions.row(4).segment<3>(6);
  const double dl = (fut.row(2).segment<3>(3).transpose() - l0).norm();
  const double dr = (fut.row(2).segment<3>(6).transpose() - r0).norm();
  const Eigen::Vector3d wrist = dl >= dr ? fut.row(2).segment<3>(3).transpose()
                                         : fut.row(2).segment<3>(6).transpose();
  ScenePointCloud c;
  c.points.resize(2, 3);
  c.points.row(0) = wrist.transpose();
  c.points.row(1) = (wrist + Eigen::Vector3d(cfg.sigma_wrist, 0, 0)).transpose();
  const VectorXd s = motion_forecast_scores(c, w, params, cfg);
  CHECK(s(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(s(1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-6));
}

TEST_CASE("baseline outputs lie in [0,1] with length N") {
  Rng rng(7);
  ScenePointCloud c = random_cloud(64, rng);
  SparseMotionWindow w = random_window(5, rng);
  const VectorXd ray = head_ray_scores(c, w, RayScorerConfig{});
  CHECK(ray.size() == 64);
  CHECK(ray.minCoeff() >= 0.0);
  CHECK(ray.maxCoeff() <= 1.0);

  ForecastConfig cfg;
  cfg.num_frames = 5;
  cfg.horizon_frames = 2;
  cfg.feature_dim = 4;
  const VectorXd mf =
      motion_forecast_scores(c, w, init_forecaster(cfg, 8), cfg);
  CHECK(mf.size() == 64);
  CHECK(mf.minCoeff() >= 0.0);
  CHECK(mf.maxCoeff() <= 1.0);
}
