#include "i3d/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "i3d/rng.hpp"

namespace i3d {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (learning_rate <= 0) throw ArgumentError("train: learning_rate must be > 0");
  if (batch_size < 1) throw ArgumentError("train: batch_size must be >= 1");
  if (max_epochs < 1) throw ArgumentError("train: max_epochs must be >= 1");
  if (task != "net" && task != "forecast")
    throw ArgumentError("train: task must be net or forecast");
  if (task == "net")
    network.validate();
  else
    forecast.validate();
}

namespace {

std::vector<Eigen::Index> parse_index_list(const std::string& s) {
  std::vector<Eigen::Index> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ','))
    if (!tok.empty()) out.push_back(std::stol(tok));
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ','))
    if (!tok.empty()) out.push_back(std::stod(tok));
  return out;
}

std::vector<std::vector<Eigen::Index>> parse_width_groups(const std::string& s) {
  std::vector<std::vector<Eigen::Index>> out;
  std::istringstream is(s);
  std::string group;
  while (std::getline(is, group, ';'))
    if (!group.empty()) out.push_back(parse_index_list(group));
  return out;
}

double logit(double p) {
  p = std::clamp(p, 1e-6, 1.0 - 1e-6);
  return std::log(p / (1.0 - p));
}

}  // namespace

TrainConfig parse_config_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError(path.string(), 0, "cannot open config file");
  TrainConfig cfg;
  std::vector<Eigen::Index> sa_centers, sa_kmax;
  std::vector<double> sa_radii;
  std::vector<std::vector<Eigen::Index>> sa_widths;
  bool sa_touched = false;

  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ArgumentError("config: expected key=value, got: " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);

    if (key == "learning_rate") cfg.learning_rate = std::stod(value);
    else if (key == "max_epochs") cfg.max_epochs = std::stoi(value);
    else if (key == "batch_size") cfg.batch_size = std::stoi(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "early_stop_patience") cfg.early_stop_patience = std::stoi(value);
    else if (key == "loss_alpha") cfg.loss.alpha = std::stod(value);
    else if (key == "loss_gamma") cfg.loss.gamma = std::stod(value);
    else if (key == "loss_terms") {
      cfg.loss.bce = value.find("bce") != std::string::npos;
      cfg.loss.focal = value.find("focal") != std::string::npos;
      cfg.loss.dice = value.find("dice") != std::string::npos;
    } else if (key == "class_weight_mode") {
      if (value == "per_sample") cfg.loss.global_class_weight = false;
      else if (value == "global") cfg.loss.global_class_weight = true;
      else throw ArgumentError("config: class_weight_mode must be per_sample|global");
    } else if (key == "variant") cfg.network.variant = variant_from_string(value);
    else if (key == "feature_dim") cfg.network.feature_dim = std::stol(value);
    else if (key == "num_frames") cfg.network.num_frames = std::stol(value);
    else if (key == "gcn_encoder_layers") cfg.network.gcn_encoder_layers = std::stol(value);
    else if (key == "gcn_decoder_layers") cfg.network.gcn_decoder_layers = std::stol(value);
    else if (key == "sa_centers") { sa_centers = parse_index_list(value); sa_touched = true; }
    else if (key == "sa_radii") { sa_radii = parse_double_list(value); sa_touched = true; }
    else if (key == "sa_kmax") { sa_kmax = parse_index_list(value); sa_touched = true; }
    else if (key == "sa_widths") { sa_widths = parse_width_groups(value); sa_touched = true; }
    else if (key == "fp_widths") cfg.network.fp_widths = parse_width_groups(value);
    else if (key == "head_mlp_widths") cfg.network.head_mlp_widths = parse_index_list(value);
    else if (key == "output_mlp_widths") cfg.network.output_mlp_widths = parse_index_list(value);
    else if (key == "task") cfg.task = value;
    else if (key == "horizon_frames") cfg.forecast.horizon_frames = std::stol(value);
    else if (key == "forecast_feature_dim") cfg.forecast.feature_dim = std::stol(value);
    else if (key == "forecast_gcn_layers") cfg.forecast.gcn_layers = std::stol(value);
    else if (key == "sigma_wrist") cfg.forecast.sigma_wrist = std::stod(value);
    else throw ArgumentError("config: unknown key: " + key);
  }

  if (sa_touched) {
    if (sa_centers.size() != sa_radii.size() || sa_centers.size() != sa_kmax.size() ||
        sa_centers.size() != sa_widths.size())
      throw ArgumentError("config: sa_centers/sa_radii/sa_kmax/sa_widths lengths differ");
    cfg.network.sa_levels.clear();
    for (std::size_t i = 0; i < sa_centers.size(); ++i)
      cfg.network.sa_levels.push_back(
          {sa_centers[i], sa_radii[i], sa_kmax[i], sa_widths[i]});
  }
  cfg.forecast.num_frames = cfg.network.num_frames;
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// checkpoint meta
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kMetaKey = "__meta__";

// All meta values are stored as exact-in-f32 numbers (integers; lengths in mm).
std::map<std::string, MatrixXd> with_meta(const ModelParams& params,
                                          const std::vector<double>& meta) {
  std::map<std::string, MatrixXd> out = params.tensors;
  MatrixXd m(1, static_cast<Eigen::Index>(meta.size()));
  for (std::size_t i = 0; i < meta.size(); ++i)
    m(0, static_cast<Eigen::Index>(i)) = meta[i];
  out.emplace(kMetaKey, std::move(m));
  return out;
}

class MetaReader {
 public:
  explicit MetaReader(const MatrixXd& m) : m_(m) {}
  double next() {
    if (i_ >= m_.size()) throw ArgumentError("checkpoint meta truncated");
    return m_(0, i_++);
  }
  Eigen::Index next_index() { return static_cast<Eigen::Index>(std::llround(next())); }

 private:
  const MatrixXd& m_;
  Eigen::Index i_ = 0;
};

}  // namespace

std::map<std::string, MatrixXd> pack_net_checkpoint(const ModelParams& params,
                                                    const NetworkConfig& config) {
  std::vector<double> meta = {0.0,
                              static_cast<double>(config.feature_dim),
                              static_cast<double>(config.num_frames),
                              static_cast<double>(config.gcn_encoder_layers),
                              static_cast<double>(config.gcn_decoder_layers),
                              static_cast<double>(static_cast<int>(config.variant))};
  meta.push_back(static_cast<double>(config.sa_levels.size()));
  for (const SaLevel& l : config.sa_levels) {
    meta.push_back(static_cast<double>(l.num_centers));
    meta.push_back(std::round(l.radius * 1000.0));  // mm
    meta.push_back(static_cast<double>(l.k_max));
    meta.push_back(static_cast<double>(l.widths.size()));
    for (Eigen::Index w : l.widths) meta.push_back(static_cast<double>(w));
  }
  meta.push_back(static_cast<double>(config.fp_widths.size()));
  for (const auto& g : config.fp_widths) {
    meta.push_back(static_cast<double>(g.size()));
    for (Eigen::Index w : g) meta.push_back(static_cast<double>(w));
  }
  meta.push_back(static_cast<double>(config.head_mlp_widths.size()));
  for (Eigen::Index w : config.head_mlp_widths) meta.push_back(static_cast<double>(w));
  meta.push_back(static_cast<double>(config.output_mlp_widths.size()));
  for (Eigen::Index w : config.output_mlp_widths) meta.push_back(static_cast<double>(w));
  return with_meta(params, meta);
}

std::pair<ModelParams, NetworkConfig> unpack_net_checkpoint(
    const std::map<std::string, MatrixXd>& tensors) {
  auto it = tensors.find(kMetaKey);
  if (it == tensors.end()) throw ArgumentError("checkpoint has no meta record");
  MetaReader r(it->second);
  if (r.next_index() != 0)
    throw ArgumentError("checkpoint is not a network checkpoint");
  NetworkConfig cfg;
  cfg.feature_dim = r.next_index();
  cfg.num_frames = r.next_index();
  cfg.gcn_encoder_layers = r.next_index();
  cfg.gcn_decoder_layers = r.next_index();
  cfg.variant = static_cast<Variant>(r.next_index());
  cfg.sa_levels.clear();
  const Eigen::Index n_sa = r.next_index();
  for (Eigen::Index i = 0; i < n_sa; ++i) {
    SaLevel l;
    l.num_centers = r.next_index();
    l.radius = r.next() / 1000.0;
    l.k_max = r.next_index();
    const Eigen::Index nw = r.next_index();
    for (Eigen::Index j = 0; j < nw; ++j) l.widths.push_back(r.next_index());
    cfg.sa_levels.push_back(std::move(l));
  }
  cfg.fp_widths.clear();
  const Eigen::Index n_fp = r.next_index();
  for (Eigen::Index i = 0; i < n_fp; ++i) {
    std::vector<Eigen::Index> g;
    const Eigen::Index nw = r.next_index();
    for (Eigen::Index j = 0; j < nw; ++j) g.push_back(r.next_index());
    cfg.fp_widths.push_back(std::move(g));
  }
  cfg.head_mlp_widths.clear();
  for (Eigen::Index i = 0, n = r.next_index(); i < n; ++i)
    cfg.head_mlp_widths.push_back(r.next_index());
  cfg.output_mlp_widths.clear();
  for (Eigen::Index i = 0, n = r.next_index(); i < n; ++i)
    cfg.output_mlp_widths.push_back(r.next_index());
  cfg.validate();

  ModelParams params;
  for (const auto& [name, m] : tensors)
    if (name != kMetaKey) params.tensors.emplace(name, m);
  return {std::move(params), std::move(cfg)};
}

std::map<std::string, MatrixXd> pack_forecast_checkpoint(
    const ModelParams& params, const ForecastConfig& config) {
  std::vector<double> meta = {1.0,
                              static_cast<double>(config.num_frames),
                              static_cast<double>(config.feature_dim),
                              static_cast<double>(config.gcn_layers),
                              static_cast<double>(config.horizon_frames),
                              std::round(config.sigma_wrist * 1000.0)};
  return with_meta(params, meta);
}

std::pair<ModelParams, ForecastConfig> unpack_forecast_checkpoint(
    const std::map<std::string, MatrixXd>& tensors) {
  auto it = tensors.find(kMetaKey);
  if (it == tensors.end()) throw ArgumentError("checkpoint has no meta record");
  MetaReader r(it->second);
  if (r.next_index() != 1)
    throw ArgumentError("checkpoint is not a forecaster checkpoint");
  ForecastConfig cfg;
  cfg.num_frames = r.next_index();
  cfg.feature_dim = r.next_index();
  cfg.gcn_layers = r.next_index();
  cfg.horizon_frames = r.next_index();
  cfg.sigma_wrist = r.next() / 1000.0;
  cfg.validate();
  ModelParams params;
  for (const auto& [name, m] : tensors)
    if (name != kMetaKey) params.tensors.emplace(name, m);
  return {std::move(params), std::move(cfg)};
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

std::vector<Sample> load_split(const fs::path& root, const std::string& split_file) {
  std::vector<Sample> out;
  for (const std::string& rel : read_split_file(root / split_file))
    out.push_back(read_sample(root / rel));
  return out;
}

namespace {

struct Adam {
  std::map<std::string, MatrixXd> m, v;
  double beta1, beta2, eps, lr;
  long step = 0;

  void update(ModelParams& params, const std::map<std::string, MatrixXd>& grads) {
    ++step;
    const double bc1 = 1.0 - std::pow(beta1, step);
    const double bc2 = 1.0 - std::pow(beta2, step);
    for (auto& [name, w] : params.tensors) {
      const MatrixXd& g = grads.at(name);
      auto mi = m.find(name);
      if (mi == m.end()) {
        m[name] = MatrixXd::Zero(w.rows(), w.cols());
        v[name] = MatrixXd::Zero(w.rows(), w.cols());
        mi = m.find(name);
      }
      MatrixXd& mm = mi->second;
      MatrixXd& vv = v[name];
      mm = beta1 * mm + (1.0 - beta1) * g;
      vv = beta2 * vv + (1.0 - beta2) * g.cwiseProduct(g);
      const MatrixXd mhat = mm / bc1;
      const MatrixXd vhat = vv / bc2;
      w -= lr * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + eps).matrix());
      // Keep parameters exactly representable in the 32-bit checkpoint.
      w = w.unaryExpr([](double x) {
        return static_cast<double>(static_cast<float>(x));
      });
    }
  }
};

double global_weight_from(const std::vector<Sample>& samples) {
  long pos = 0, total = 0;
  for (const Sample& s : samples) {
    pos += s.gt.mask.labels.sum();
    total += s.gt.mask.count();
  }
  if (pos == 0) throw DegenerateInputError("train: no positive labels in split");
  return static_cast<double>(total - pos) / static_cast<double>(pos);
}

}  // namespace

TrainResult train(const fs::path& dataset_root, const TrainConfig& config) {
  config.validate();
  std::vector<Sample> samples = load_split(dataset_root, "train.txt");
  if (config.task == "net") {
    std::erase_if(samples, [](const Sample& s) {
      return s.gt.mask.labels.sum() == 0;
    });
  } else {
    std::erase_if(samples, [&](const Sample& s) {
      return s.future_positions.rows() != config.forecast.horizon_frames;
    });
  }
  if (samples.empty()) throw ArgumentError("train: empty training split");

  std::vector<Sample> val;
  if (config.early_stop_patience > 0) {
    std::set<std::string> scenes;
    for (const Sample& s : samples) scenes.insert(s.scene_id);
    if (scenes.size() >= 2) {
      auto [tr, va] = scene_split(samples, 0.1, hash_seed(config.seed, 0x7a1));
      samples = std::move(tr);
      val = std::move(va);
    }
  }

  LossConfig loss = config.loss;
  if (loss.global_class_weight) loss.global_weight = global_weight_from(samples);

  TrainResult res;
  res.params = config.task == "net"
                   ? init_params(config.network, config.seed)
                   : init_forecaster(config.forecast, config.seed);

  Adam adam;
  adam.beta1 = config.beta1;
  adam.beta2 = config.beta2;
  adam.eps = config.adam_eps;
  adam.lr = config.learning_rate;

  ModelParams best = res.params;
  double best_val = -1.0;
  int stale = 0;

  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng shuffle(hash_seed(config.seed, 0x0e9, epoch));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle.below(i)]);

    LossBreakdown epoch_loss;
    std::size_t seen = 0;
    std::map<std::string, MatrixXd> acc;
    int in_batch = 0;
    auto flush = [&]() {
      if (in_batch == 0) return;
      for (auto& [name, g] : acc) g /= static_cast<double>(in_batch);
      adam.update(res.params, acc);
      acc.clear();
      in_batch = 0;
    };

    for (std::size_t idx : order) {
      const Sample& s = samples[idx];
      std::map<std::string, MatrixXd> grads;
      if (config.task == "net") {
        GradientResult gr = gradient(s.cloud, s.window, s.gt.mask, res.params,
                                     config.network, loss);
        grads = std::move(gr.grads);
        epoch_loss.total += gr.loss.total;
        epoch_loss.bce += gr.loss.bce;
        epoch_loss.focal += gr.loss.focal;
        epoch_loss.dice += gr.loss.dice;
      } else {
        ForecastGradient gr = forecast_gradient(s.window, s.future_positions,
                                                res.params, config.forecast);
        grads = std::move(gr.grads);
        epoch_loss.total += gr.loss;
      }
      ++seen;
      if (acc.empty())
        acc = std::move(grads);
      else
        for (auto& [name, g] : acc) g += grads.at(name);
      if (++in_batch >= config.batch_size) flush();
    }
    flush();

    TrainLogEntry entry;
    entry.epoch = epoch;
    const double inv = 1.0 / static_cast<double>(std::max<std::size_t>(seen, 1));
    entry.mean_loss = {epoch_loss.total * inv, epoch_loss.bce * inv,
                       epoch_loss.focal * inv, epoch_loss.dice * inv};
    if (!std::isfinite(entry.mean_loss.total))
      throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));

    if (!val.empty() && config.task == "net") {
      double dice_sum = 0.0, auc_sum = 0.0;
      int auc_n = 0;
      for (const Sample& s : val) {
        const IntentionHeatmap h = forward(s.cloud, s.window, res.params, config.network);
        dice_sum += dice_score(h.logits, s.gt.mask, 0.5);
        try {
          auc_sum += auc(h.logits, s.gt.mask);
          ++auc_n;
        } catch (const DegenerateInputError&) {
        }
      }
      entry.val_dice = dice_sum / static_cast<double>(val.size());
      if (auc_n > 0) entry.val_auc = auc_sum / auc_n;
      if (*entry.val_dice > best_val) {
        best_val = *entry.val_dice;
        best = res.params;
        stale = 0;
      } else if (++stale >= config.early_stop_patience) {
        entry.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.log.push_back(entry);
        break;
      }
    }
    entry.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.log.push_back(entry);
  }

  if (!val.empty() && config.task == "net" && best_val >= 0.0) res.params = best;
  return res;
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

VectorXd predict_logits(const std::string& method, const Sample& sample,
                        const ModelParams* params, const NetworkConfig* net_config,
                        const ForecastConfig* forecast_config,
                        MatrixXd* attention_weights) {
  if (method == "head") {
    RayScorerConfig rc;
    return head_ray_scores(sample.cloud, sample.window, rc).unaryExpr(&logit);
  }
  if (method == "motion_forecast") {
    if (!params || !forecast_config)
      throw ArgumentError("motion_forecast requires a forecaster checkpoint");
    return motion_forecast_scores(sample.cloud, sample.window, *params,
                                  *forecast_config)
        .unaryExpr(&logit);
  }
  if (!params || !net_config)
    throw ArgumentError("method " + method + " requires a checkpoint");
  FeatureBundle bundle;
  const IntentionHeatmap h =
      forward(sample.cloud, sample.window, *params, *net_config, &bundle);
  if (attention_weights) *attention_weights = bundle.attention_weights;
  return h.logits;
}

EvalReport evaluate(const fs::path& dataset_root, const std::string& method,
                    const std::optional<fs::path>& checkpoint,
                    const std::vector<int>& horizons_ms) {
  static const std::set<std::string> known = {
      "ours",       "head",           "head_scene", "motion_forecast",
      "scene_only", "mlp_fusion",     "motion_query"};
  if (!known.count(method))
    throw ArgumentError("evaluate: unknown method: " + method);
  const std::vector<Sample> test = load_split(dataset_root, "test.txt");
  if (test.empty()) throw ArgumentError("evaluate: empty test split");

  ModelParams params;
  NetworkConfig net_config;
  ForecastConfig forecast_config;
  bool have_net = false, have_forecast = false;
  if (method == "head") {
    // training-free
  } else if (!checkpoint) {
    throw ArgumentError("evaluate: method " + method + " requires --ckpt");
  } else if (method == "motion_forecast") {
    std::tie(params, forecast_config) =
        unpack_forecast_checkpoint(load_checkpoint(*checkpoint));
    have_forecast = true;
  } else {
    std::tie(params, net_config) = unpack_net_checkpoint(load_checkpoint(*checkpoint));
    have_net = true;
  }

  EvalReport report;
  std::vector<double> srcc_acc;
  std::vector<int> srcc_n;
  std::vector<double> avg_sum(4, 0.0);
  int avg_n = 0;

  for (int horizon : horizons_ms) {
    double s_sim = 0, s_auc = 0, s_miou = 0, s_dice = 0;
    int n_sim = 0, n_auc = 0, n_other = 0;
    for (const Sample& sample : test) {
      if (sample.horizon_ms != horizon) continue;
      MatrixXd attn;
      const VectorXd logits = predict_logits(
          method, sample, have_net || have_forecast ? &params : nullptr,
          have_net ? &net_config : nullptr,
          have_forecast ? &forecast_config : nullptr, &attn);
      try {
        s_sim += sim(logits, sample.gt.heatmap);
        ++n_sim;
      } catch (const DegenerateInputError&) {
      }
      try {
        s_auc += auc(logits, sample.gt.mask);
        ++n_auc;
      } catch (const DegenerateInputError&) {
      }
      s_miou += miou(logits, sample.gt.mask, default_miou_thresholds());
      s_dice += dice_score(logits, sample.gt.mask, 0.5);
      ++n_other;

      if (attn.size() > 0) {
        const auto per_frame = attention_intention_srcc(attn, sample.gt.heatmap);
        if (srcc_acc.empty()) {
          srcc_acc.assign(per_frame.size(), 0.0);
          srcc_n.assign(per_frame.size(), 0);
        }
        for (std::size_t j = 0; j < per_frame.size(); ++j)
          if (std::isfinite(per_frame[j])) {
            srcc_acc[j] += per_frame[j];
            ++srcc_n[j];
          }
      }
    }
    MetricRow row;
    if (n_sim > 0) row.sim = s_sim / n_sim;
    if (n_auc > 0) row.auc = s_auc / n_auc;
    if (n_other > 0) {
      row.miou = s_miou / n_other;
      row.dice = s_dice / n_other;
    }
    if (row.sim && row.auc && row.miou && row.dice) {
      avg_sum[0] += *row.sim;
      avg_sum[1] += *row.auc;
      avg_sum[2] += *row.miou;
      avg_sum[3] += *row.dice;
      ++avg_n;
    }
    report.rows[{method, horizon}] = row;
  }
  if (avg_n > 0) {
    MetricRow avg;
    avg.sim = avg_sum[0] / avg_n;
    avg.auc = avg_sum[1] / avg_n;
    avg.miou = avg_sum[2] / avg_n;
    avg.dice = avg_sum[3] / avg_n;
    report.rows[{method, -1}] = avg;  // horizon -1 = average column
  }
  if (!srcc_acc.empty()) {
    std::vector<double> srcc_mean(srcc_acc.size());
    for (std::size_t j = 0; j < srcc_acc.size(); ++j)
      srcc_mean[j] = srcc_n[j] > 0
                         ? srcc_acc[j] / srcc_n[j]
                         : std::numeric_limits<double>::quiet_NaN();
    report.attention_srcc[method] = std::move(srcc_mean);
  }
  return report;
}

TimingStats timing_probe(const ModelParams& params, const NetworkConfig& config,
                         const Sample& sample, int repetitions) {
  if (repetitions < 1) throw ArgumentError("timing_probe: repetitions must be >= 1");
  for (int i = 0; i < 3; ++i) forward(sample.cloud, sample.window, params, config);

  std::vector<double> ms(repetitions);
  for (int i = 0; i < repetitions; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    forward(sample.cloud, sample.window, params, config);
    ms[i] = std::chrono::duration<double, std::milli>(
                std::chrono::steady_clock::now() - t0)
                .count();
  }
  TimingStats st;
  st.repetitions = repetitions;
  st.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / repetitions;
  double var = 0.0;
  for (double v : ms) var += (v - st.mean_ms) * (v - st.mean_ms);
  st.stddev_ms = std::sqrt(var / repetitions);
  st.min_ms = *std::min_element(ms.begin(), ms.end());
  return st;
}

// ---------------------------------------------------------------------------
// dataset build
// ---------------------------------------------------------------------------

void build_synthetic_dataset(const fs::path& out_root, const DatasetConfig& config,
                             std::uint64_t seed) {
  const std::vector<Session> sessions = gen_synthetic(config.synth, seed);
  std::vector<Sample> samples;
  std::vector<std::string> skips;
  std::size_t session_idx = 0;
  for (const Session& ses : sessions) {
    for (int horizon : config.horizons_ms) {
      std::size_t window_idx = 0;
      for (Sample& raw : extract_windows(ses, horizon, config.num_frames,
                                         config.frame_rate, &skips)) {
        raw.sample_id = ses.scene_id + "_s" + std::to_string(session_idx) + "_e" +
                        std::to_string(window_idx) + "_h" + std::to_string(horizon);
        Sample s = finalize_sample(
            raw, config.num_points, config.gt,
            hash_seed(hash_seed(seed, session_idx, window_idx),
                      static_cast<std::uint64_t>(horizon)));
        ++window_idx;
        if (s.gt.mask.labels.sum() == 0) {
          skips.push_back(s.sample_id + ": no positive ground-truth points");
          continue;
        }
        samples.push_back(std::move(s));
      }
    }
    ++session_idx;
  }
  if (samples.empty()) throw ArgumentError("build_synthetic_dataset: nothing generated");
  for (const std::string& reason : skips) std::clog << "[skip] " << reason << "\n";

  auto [train_samples, test_samples] =
      scene_split(samples, config.test_fraction, hash_seed(seed, 0x5971));

  fs::create_directories(out_root / "samples");
  auto write_all = [&](const std::vector<Sample>& set, const std::string& listfile) {
    std::vector<std::string> dirs;
    for (const Sample& s : set) {
      const std::string rel = "samples/" + s.sample_id;
      write_sample(s, out_root / rel);
      dirs.push_back(rel);
    }
    write_split_file(out_root / listfile, dirs);
  };
  write_all(train_samples, "train.txt");
  write_all(test_samples, "test.txt");
}

}  // namespace i3d
