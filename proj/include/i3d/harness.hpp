#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "i3d/baselines.hpp"
#include "i3d/datapipe.hpp"
#include "i3d/int3dnet.hpp"
#include "i3d/metrics.hpp"

namespace i3d {

struct TrainConfig {
  double learning_rate = 1e-3;
  int max_epochs = 40;
  int batch_size = 1;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // Epochs without validation Dice improvement before stopping; 0 disables
  // the validation carve-out entirely.
  int early_stop_patience = 0;
  LossConfig loss;
  NetworkConfig network;
  std::string task = "net";  // net | forecast
  ForecastConfig forecast;

  void validate() const;
};

// Flat key=value config file; unknown keys are errors.
TrainConfig parse_config_file(const std::filesystem::path& path);

struct TrainLogEntry {
  int epoch = 0;
  LossBreakdown mean_loss;
  std::optional<double> val_dice;
  std::optional<double> val_auc;
  double seconds = 0.0;
};

struct TrainResult {
  ModelParams params;  // best-validation (or final) weights
  std::vector<TrainLogEntry> log;
};

TrainResult train(const std::filesystem::path& dataset_root, const TrainConfig& config);

// Checkpoint packing: model tensors plus a "__meta__" record that encodes
// the architecture so `eval`/`predict` can rebuild the config.
std::map<std::string, MatrixXd> pack_net_checkpoint(const ModelParams& params,
                                                    const NetworkConfig& config);
std::pair<ModelParams, NetworkConfig> unpack_net_checkpoint(
    const std::map<std::string, MatrixXd>& tensors);
std::map<std::string, MatrixXd> pack_forecast_checkpoint(const ModelParams& params,
                                                         const ForecastConfig& config);
std::pair<ModelParams, ForecastConfig> unpack_forecast_checkpoint(
    const std::map<std::string, MatrixXd>& tensors);

std::vector<Sample> load_split(const std::filesystem::path& dataset_root,
                               const std::string& split_file);

// Per-sample prediction logits for any method name understood by `eval`.
VectorXd predict_logits(const std::string& method, const Sample& sample,
                        const ModelParams* params, const NetworkConfig* net_config,
                        const ForecastConfig* forecast_config,
                        MatrixXd* attention_weights = nullptr);

EvalReport evaluate(const std::filesystem::path& dataset_root,
                    const std::string& method,
                    const std::optional<std::filesystem::path>& checkpoint,
                    const std::vector<int>& horizons_ms);

struct TimingStats {
  double mean_ms = 0.0;
  double stddev_ms = 0.0;
  double min_ms = 0.0;
  int repetitions = 0;
};

TimingStats timing_probe(const ModelParams& params, const NetworkConfig& config,
                         const Sample& sample, int repetitions);

struct DatasetConfig {
  SynthConfig synth;
  std::vector<int> horizons_ms = {500, 1000, 1500};
  Eigen::Index num_points = 2048;
  Eigen::Index num_frames = 15;
  double frame_rate = 30.0;
  GtConfig gt;
  double test_fraction = 0.3;
};

// Generates sessions, extracts windows at every horizon, finalizes samples
// and writes the on-disk dataset (samples/ plus train.txt/test.txt).
void build_synthetic_dataset(const std::filesystem::path& out_root,
                             const DatasetConfig& config, std::uint64_t seed);

}  // namespace i3d
