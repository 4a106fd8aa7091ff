#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "i3d/metrics.hpp"
#include "i3d/motionenc.hpp"
#include "i3d/pointcloud.hpp"

namespace i3d {

enum class EventKind { grasp, place };

struct InteractionEvent {
  double timestamp = 0.0;
  Vector3d goal = Vector3d::Zero();
  EventKind kind = EventKind::grasp;
};

struct SessionFrame {
  double timestamp = 0.0;
  Vector3d head, lhand, rhand;
  Vector3d head_dir;  // unit
};

// One recorded take: motion frames, interaction events and the raw scene.
struct Session {
  std::vector<SessionFrame> frames;
  std::vector<InteractionEvent> interaction_events;
  ScenePointCloud scene;  // pre-subsampling
  std::string scene_id;
};

// One training/evaluation example, body-aligned.
struct Sample {
  ScenePointCloud cloud;
  SparseMotionWindow window;
  GroundTruth gt;
  Vector3d goal = Vector3d::Zero();  // body-aligned frame
  int horizon_ms = 0;
  std::string scene_id;
  std::string sample_id;
  // Aligned future joint positions from window end to the interaction,
  // H x 9; optional (used to train the motion-forecast baseline).
  MatrixXd future_positions;
};

struct GtConfig {
  double sigma = 0.2;  // meters
  double tau = 0.5;    // mask threshold on the heatmap
};

struct SynthConfig {
  int num_scenes = 4;
  int samples_per_scene = 8;
  int points_per_scene = 4096;  // raw scene cloud size (pre-subsampling)
  int num_targets_per_scene = 3;
  bool cluttered = false;
};

// Windows resampled at `frame_rate` ending horizon_ms before each event.
// Clouds are still the raw scene and gt is unset; see finalize_sample.
// Events without enough history are skipped (reasons appended if given).
std::vector<Sample> extract_windows(const Session& session, int horizon_ms,
                                    Eigen::Index num_frames, double frame_rate,
                                    std::vector<std::string>* skip_reasons = nullptr);

GroundTruth gaussian_gt(const ScenePointCloud& cloud, const Vector3d& goal,
                        const GtConfig& config);

// Body-frame alignment + distance-weighted subsampling to n points + GT.
Sample finalize_sample(const Sample& raw, Eigen::Index num_points,
                       const GtConfig& gt_config, std::uint64_t seed);

// Scene-exclusive split: whole scenes go to test until the test sample count
// reaches fraction x total.
std::pair<std::vector<Sample>, std::vector<Sample>> scene_split(
    const std::vector<Sample>& samples, double test_fraction, std::uint64_t seed);

// Desk-scale reach-to-target generator: box furniture scenes, minimum-jerk
// hand reaches, head orientation converging on the target ahead of contact.
std::vector<Session> gen_synthetic(const SynthConfig& config, std::uint64_t seed);

void write_sample(const Sample& sample, const std::filesystem::path& directory);
Sample read_sample(const std::filesystem::path& directory);

void write_split_file(const std::filesystem::path& path,
                      const std::vector<std::string>& sample_dirs);
std::vector<std::string> read_split_file(const std::filesystem::path& path);

// "I3DN" named-tensor container, 32-bit float payloads.
void save_checkpoint(const std::filesystem::path& path,
                     const std::map<std::string, MatrixXd>& tensors);
std::map<std::string, MatrixXd> load_checkpoint(const std::filesystem::path& path);

// Text camera manifest: extrinsic (16 row-major reals), fx fy cx cy width height.
CameraModel read_camera_file(const std::filesystem::path& path);

// Triangle-list mesh reader: one triangle per line, 9 reals.
std::vector<Matrix3d> read_triangle_mesh(const std::filesystem::path& path);

void write_heatmap_f32(const std::filesystem::path& path, const VectorXd& values);
VectorXd read_heatmap_f32(const std::filesystem::path& path);

}  // namespace i3d
