// Command-line front end: dataset generation, training, evaluation,
// prediction, image projection and timing.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "i3d/harness.hpp"

namespace {

using namespace i3d;

int cmd_gen_synth(const std::string& out, int scenes, int samples_per_scene,
                  const std::string& clutter, std::uint64_t seed, int num_points,
                  double sigma) {
  if (clutter != "simple" && clutter != "cluttered")
    throw ArgumentError("gen-synth: --clutter must be simple or cluttered");
  DatasetConfig cfg;
  cfg.synth.num_scenes = scenes;
  cfg.synth.samples_per_scene = samples_per_scene;
  cfg.synth.cluttered = clutter == "cluttered";
  cfg.num_points = num_points;
  cfg.gt.sigma = sigma;
  build_synthetic_dataset(out, cfg, seed);
  std::cout << "dataset written to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& data, const std::string& config_path,
              const std::string& out) {
  const TrainConfig cfg = config_path.empty() ? TrainConfig{}
                                              : parse_config_file(config_path);
  const TrainResult res = train(data, cfg);
  if (cfg.task == "net")
    save_checkpoint(out, pack_net_checkpoint(res.params, cfg.network));
  else
    save_checkpoint(out, pack_forecast_checkpoint(res.params, cfg.forecast));
  for (const TrainLogEntry& e : res.log) {
    std::cout << "epoch " << e.epoch << " loss " << e.mean_loss.total;
    if (e.val_dice) std::cout << " val_dice " << *e.val_dice;
    if (e.val_auc) std::cout << " val_auc " << *e.val_auc;
    std::cout << " (" << e.seconds << " s)\n";
  }
  std::cout << "checkpoint written to " << out << "\n";
  return 0;
}

int cmd_eval(const std::string& data, const std::string& method,
             const std::string& ckpt, const std::string& horizons_csv,
             const std::string& report_path) {
  std::vector<int> horizons;
  std::stringstream ss(horizons_csv);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) horizons.push_back(std::stoi(tok));
  if (horizons.empty()) throw ArgumentError("eval: --horizons is empty");

  std::optional<std::filesystem::path> ckpt_path;
  if (!ckpt.empty()) ckpt_path = ckpt;
  const EvalReport report = evaluate(data, method, ckpt_path, horizons);
  const std::string tsv = report.to_tsv();
  std::cout << tsv;
  if (!report_path.empty()) {
    std::ofstream os(report_path);
    if (!os) throw ArgumentError("eval: cannot write report: " + report_path);
    if (report_path.size() > 5 &&
        report_path.substr(report_path.size() - 5) == ".json")
      os << report.to_json();
    else
      os << tsv;
  }
  return 0;
}

int cmd_predict(const std::string& sample_dir, const std::string& ckpt,
                const std::string& out) {
  const Sample sample = read_sample(sample_dir);
  auto tensors = load_checkpoint(ckpt);
  auto [params, config] = unpack_net_checkpoint(tensors);
  const IntentionHeatmap h = forward(sample.cloud, sample.window, params, config);
  write_heatmap_f32(out, h.logits);
  std::cout << "heatmap written to " << out << "\n";
  return 0;
}

int cmd_project(const std::string& sample_dir, const std::string& heatmap_path,
                const std::string& camera_path, double threshold) {
  const Sample sample = read_sample(sample_dir);
  const VectorXd logits = read_heatmap_f32(heatmap_path);
  const CameraModel camera = read_camera_file(camera_path);
  const auto box =
      project_intention_to_image(sample.cloud, logits, camera, threshold);
  if (!box) {
    std::cout << "no points above threshold project into the image\n";
    return 0;
  }
  std::cout << "box " << box->x_min << " " << box->y_min << " " << box->x_max
            << " " << box->y_max << "\n";
  return 0;
}

int cmd_timing(const std::string& ckpt, const std::string& sample_dir, int reps) {
  const Sample sample = read_sample(sample_dir);
  auto [params, config] = unpack_net_checkpoint(load_checkpoint(ckpt));
  const TimingStats st = timing_probe(params, config, sample, reps);
  std::cout << "mean " << st.mean_ms << " ms, stddev " << st.stddev_ms
            << " ms, min " << st.min_ms << " ms over " << st.repetitions
            << " runs\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-point 3D intention heatmap prediction toolkit"};
  app.require_subcommand(1);

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic dataset");
  std::string gen_out, gen_clutter = "simple";
  int gen_scenes = 4, gen_samples = 8, gen_points = 2048;
  std::uint64_t gen_seed = 0;
  double gen_sigma = 0.2;
  gen->add_option("--out", gen_out, "Output dataset directory")->required();
  gen->add_option("--scenes", gen_scenes, "Number of scenes");
  gen->add_option("--samples-per-scene", gen_samples, "Sessions per scene");
  gen->add_option("--clutter", gen_clutter, "simple|cluttered");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--num-points", gen_points, "Points per finalized sample");
  gen->add_option("--gt-sigma", gen_sigma, "Ground-truth Gaussian sigma (m)");

  // train
  auto* tr = app.add_subcommand("train", "Train a model");
  std::string tr_data, tr_config, tr_out;
  tr->add_option("--data", tr_data, "Dataset directory")->required();
  tr->add_option("--config", tr_config, "key=value training config file");
  tr->add_option("--out", tr_out, "Output checkpoint path")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a method on the test split");
  std::string ev_data, ev_method, ev_ckpt, ev_report;
  std::string ev_horizons = "500,1000,1500";
  ev->add_option("--data", ev_data, "Dataset directory")->required();
  ev->add_option("--method", ev_method,
                 "ours|head|head_scene|motion_forecast|scene_only|mlp_fusion|"
                 "motion_query")
      ->required();
  ev->add_option("--ckpt", ev_ckpt, "Checkpoint (trained methods)");
  ev->add_option("--horizons", ev_horizons, "Comma-separated horizons (ms)");
  ev->add_option("--report", ev_report, "Report file (.json for JSON, else TSV)");

  // predict
  auto* pr = app.add_subcommand("predict", "Write per-point logits for a sample");
  std::string pr_sample, pr_ckpt, pr_out;
  pr->add_option("--sample", pr_sample, "Sample directory")->required();
  pr->add_option("--ckpt", pr_ckpt, "Network checkpoint")->required();
  pr->add_option("--out", pr_out, "Output heatmap file")->required();

  // project
  auto* pj = app.add_subcommand("project", "Project a heatmap to a pixel box");
  std::string pj_sample, pj_heatmap, pj_camera;
  double pj_threshold = 0.5;
  pj->add_option("--sample", pj_sample, "Sample directory")->required();
  pj->add_option("--heatmap", pj_heatmap, "Heatmap logits file")->required();
  pj->add_option("--camera", pj_camera, "Camera manifest")->required();
  pj->add_option("--threshold", pj_threshold, "Sigmoid-score threshold");

  // timing
  auto* tm = app.add_subcommand("timing", "Forward-pass latency probe");
  std::string tm_ckpt, tm_sample;
  int tm_reps = 200;
  tm->add_option("--ckpt", tm_ckpt, "Network checkpoint")->required();
  tm->add_option("--sample", tm_sample, "Sample directory")->required();
  tm->add_option("--reps", tm_reps, "Timed repetitions");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_gen_synth(gen_out, gen_scenes, gen_samples, gen_clutter,
                           gen_seed, gen_points, gen_sigma);
    if (tr->parsed()) return cmd_train(tr_data, tr_config, tr_out);
    if (ev->parsed())
      return cmd_eval(ev_data, ev_method, ev_ckpt, ev_horizons, ev_report);
    if (pr->parsed()) return cmd_predict(pr_sample, pr_ckpt, pr_out);
    if (pj->parsed())
      return cmd_project(pj_sample, pj_heatmap, pj_camera, pj_threshold);
    if (tm->parsed()) return cmd_timing(tm_ckpt, tm_sample, tm_reps);
  } catch (const i3d::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const i3d::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
