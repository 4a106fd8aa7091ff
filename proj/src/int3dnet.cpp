#include "i3d/int3dnet.hpp"

#include <algorithm>
#include <cmath>

#include "i3d/autodiff.hpp"
#include "i3d/rng.hpp"

namespace i3d {

Variant variant_from_string(const std::string& s) {
  if (s == "full") return Variant::full;
  if (s == "mlp_fusion") return Variant::mlp_fusion;
  if (s == "motion_query") return Variant::motion_query;
  if (s == "head_scene") return Variant::head_scene;
  if (s == "scene_only") return Variant::scene_only;
  throw ArgumentError("unknown variant: " + s);
}

std::string variant_to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::mlp_fusion: return "mlp_fusion";
    case Variant::motion_query: return "motion_query";
    case Variant::head_scene: return "head_scene";
    case Variant::scene_only: return "scene_only";
  }
  throw ArgumentError("unknown variant");
}

void NetworkConfig::validate() const {
  if (feature_dim < 1) throw ArgumentError("config: feature_dim must be >= 1");
  if (num_frames < 2) throw ArgumentError("config: num_frames must be >= 2");
  if (sa_levels.empty()) throw ArgumentError("config: need at least one SA level");
  for (std::size_t i = 0; i < sa_levels.size(); ++i) {
    const SaLevel& l = sa_levels[i];
    if (l.num_centers < 1 || l.k_max < 1 || l.radius <= 0 || l.widths.empty())
      throw ArgumentError("config: malformed SA level");
    if (i > 0) {
      if (l.num_centers >= sa_levels[i - 1].num_centers)
        throw ArgumentError("config: num_centers must strictly decrease");
      if (l.radius <= sa_levels[i - 1].radius)
        throw ArgumentError("config: radii must strictly increase");
    }
  }
  if (fp_widths.size() != sa_levels.size())
    throw ArgumentError("config: need one FP step per SA level");
  for (const auto& w : fp_widths)
    if (w.empty()) throw ArgumentError("config: empty FP widths");
  if (fp_widths.back().back() != feature_dim)
    throw ArgumentError("config: final FP width must equal feature_dim");
  if (head_mlp_widths.empty() || head_mlp_widths.back() != feature_dim)
    throw ArgumentError("config: head MLP must end at feature_dim");
  if (gcn_encoder_layers < 1 || gcn_decoder_layers < 1)
    throw ArgumentError("config: GCN layer counts must be >= 1");
  if (attention_kernel != "elu_plus_one")
    throw ArgumentError("config: unknown attention kernel " + attention_kernel);
}

NetworkConfig micro_config() {
  NetworkConfig c;
  c.feature_dim = 8;
  c.num_frames = 5;
  c.sa_levels = {{16, 0.5, 8, {8, 8}}, {8, 1.0, 8, {8, 16}}};
  c.fp_widths = {{16}, {8}};
  c.head_mlp_widths = {8, 8};
  c.output_mlp_widths = {16, 8};
  return c;
}

namespace {

using ad::Tape;
using Id = Tape::Id;

bool has_motion_branch(Variant v) {
  return v != Variant::scene_only && v != Variant::head_scene;
}
bool has_head_branch(Variant v) { return v != Variant::scene_only; }

// Ordered (name, shape) list of every learnable array the config implies.
std::vector<std::pair<std::string, std::pair<Eigen::Index, Eigen::Index>>>
param_layout(const NetworkConfig& cfg) {
  std::vector<std::pair<std::string, std::pair<Eigen::Index, Eigen::Index>>> out;
  auto mlp = [&](const std::string& prefix, Eigen::Index in,
                 const std::vector<Eigen::Index>& widths) {
    for (std::size_t i = 0; i < widths.size(); ++i) {
      out.push_back({prefix + ".mlp" + std::to_string(i) + ".weight",
                     {in, widths[i]}});
      out.push_back({prefix + ".mlp" + std::to_string(i) + ".bias", {1, widths[i]}});
      in = widths[i];
    }
  };

  // PointNet++ set abstraction + feature propagation
  Eigen::Index in_ch = 0;
  std::vector<Eigen::Index> level_out;
  for (std::size_t l = 0; l < cfg.sa_levels.size(); ++l) {
    mlp("scene.sa" + std::to_string(l), 3 + in_ch, cfg.sa_levels[l].widths);
    in_ch = cfg.sa_levels[l].widths.back();
    level_out.push_back(in_ch);
  }
  Eigen::Index cur = level_out.back();
  for (std::size_t i = 0; i < cfg.fp_widths.size(); ++i) {
    const std::size_t target = cfg.sa_levels.size() - 1 - i;  // 0 = raw points
    // Skip-link the finer level's features; the finest level has no learned
    // features, so its coordinates serve as the skip (standard FP convention).
    const Eigen::Index skip = target >= 1 ? level_out[target - 1] : 3;
    mlp("scene.fp" + std::to_string(i), cur + skip, cfg.fp_widths[i]);
    cur = cfg.fp_widths[i].back();
  }

  const Eigen::Index t = cfg.num_frames;
  const Eigen::Index d = cfg.feature_dim;
  if (has_motion_branch(cfg.variant)) {
    Eigen::Index ch = 6;
    for (Eigen::Index l = 0; l < cfg.gcn_encoder_layers; ++l) {
      const std::string p = "motion.enc" + std::to_string(l);
      out.push_back({p + ".temporal", {t, t}});
      out.push_back({p + ".weight", {ch, d}});
      out.push_back({p + ".bias", {1, d}});
      ch = d;
    }
  }
  if (has_head_branch(cfg.variant)) {
    mlp("head", 3, cfg.head_mlp_widths);
    for (Eigen::Index l = 0; l < cfg.gcn_decoder_layers; ++l) {
      const std::string p = "motion.dec" + std::to_string(l);
      out.push_back({p + ".temporal", {t, t}});
      out.push_back({p + ".weight", {d, d}});
      out.push_back({p + ".bias", {1, d}});
    }
  }

  const Eigen::Index fused = cfg.variant == Variant::scene_only ? d : 2 * d;
  std::vector<Eigen::Index> out_widths = cfg.output_mlp_widths;
  out_widths.push_back(1);
  mlp("out", fused, out_widths);
  return out;
}

// Mean over the joint axis: (T) x (T*J) averaging matrix.
MatrixXd joint_mean_matrix(Eigen::Index t, Eigen::Index j) {
  MatrixXd m = MatrixXd::Zero(t, t * j);
  for (Eigen::Index a = 0; a < t; ++a)
    for (Eigen::Index b = 0; b < j; ++b) m(a, a * j + b) = 1.0 / static_cast<double>(j);
  return m;
}

Eigen::Index lexicographic_min_index(const MatrixXd& pts) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < pts.rows(); ++i) {
    for (int c = 0; c < 3; ++c) {
      if (pts(i, c) < pts(best, c)) {
        best = i;
        break;
      }
      if (pts(i, c) > pts(best, c)) break;
    }
  }
  return best;
}

// Dense fine x coarse matrix applying inverse-distance k-NN interpolation.
MatrixXd interp_matrix(const MatrixXd& coarse_pts, const MatrixXd& fine_pts,
                       Eigen::Index k) {
  const Eigen::Index m = coarse_pts.rows();
  k = std::min<Eigen::Index>(k, m);
  MatrixXd w = MatrixXd::Zero(fine_pts.rows(), m);
  std::vector<std::pair<double, Eigen::Index>> d(m);
  for (Eigen::Index i = 0; i < fine_pts.rows(); ++i) {
    for (Eigen::Index j = 0; j < m; ++j)
      d[j] = {(coarse_pts.row(j) - fine_pts.row(i)).squaredNorm(), j};
    std::partial_sort(d.begin(), d.begin() + k, d.end());
    double wsum = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) wsum += 1.0 / (d[j].first + 1e-8);
    for (Eigen::Index j = 0; j < k; ++j)
      w(i, d[j].second) = (1.0 / (d[j].first + 1e-8)) / wsum;
  }
  return w;
}

struct Graph {
  Tape tape;
  std::map<std::string, Id> pid;
  const NetworkConfig* cfg = nullptr;

  Id get(const std::string& name) {
    auto it = pid.find(name);
    if (it == pid.end()) throw ArgumentError("missing parameter: " + name);
    return it->second;
  }

  Id linear(Id x, const std::string& prefix) {
    return tape.add_row_broadcast(tape.matmul(x, get(prefix + ".weight")),
                                  get(prefix + ".bias"));
  }

  Id mlp(Id x, const std::string& prefix, std::size_t layers, bool relu_last) {
    for (std::size_t i = 0; i < layers; ++i) {
      x = linear(x, prefix + ".mlp" + std::to_string(i));
      if (relu_last || i + 1 < layers) x = tape.relu(x);
    }
    return x;
  }
};

Graph make_graph(const ModelParams& params, const NetworkConfig& cfg,
                 bool differentiable) {
  Graph g;
  g.cfg = &cfg;
  for (const auto& [name, shape] : param_layout(cfg)) {
    auto it = params.tensors.find(name);
    if (it == params.tensors.end()) throw ArgumentError("missing parameter: " + name);
    if (it->second.rows() != shape.first || it->second.cols() != shape.second)
      throw ArgumentError("parameter shape mismatch: " + name);
    g.pid[name] = differentiable ? g.tape.param(it->second)
                                 : g.tape.constant(it->second);
  }
  return g;
}

Id scene_branch(Graph& g, const ScenePointCloud& cloud) {
  const NetworkConfig& cfg = *g.cfg;
  cloud.validate();
  if (cloud.count() < cfg.sa_levels.front().num_centers)
    throw ArgumentError("encode_scene: cloud smaller than the first SA level");

  std::vector<MatrixXd> level_pts{cloud.points};
  std::vector<Id> level_feat{-1};

  for (std::size_t l = 0; l < cfg.sa_levels.size(); ++l) {
    const SaLevel& sa = cfg.sa_levels[l];
    const MatrixXd& pts = level_pts.back();
    ScenePointCloud lvl{pts};
    const auto centers_idx =
        farthest_point_sample(lvl, sa.num_centers, lexicographic_min_index(pts));
    MatrixXd centers(sa.num_centers, 3);
    for (Eigen::Index i = 0; i < sa.num_centers; ++i)
      centers.row(i) = pts.row(centers_idx[i]);
    const auto groups = ball_query(lvl, centers, sa.radius, sa.k_max);

    std::vector<Eigen::Index> offsets{0}, flat;
    for (const BallGroup& grp : groups) {
      flat.insert(flat.end(), grp.indices.begin(), grp.indices.end());
      offsets.push_back(static_cast<Eigen::Index>(flat.size()));
    }
    MatrixXd rel(static_cast<Eigen::Index>(flat.size()), 3);
    for (std::size_t c = 0; c < groups.size(); ++c)
      for (Eigen::Index r = offsets[c]; r < offsets[c + 1]; ++r)
        rel.row(r) = pts.row(flat[r]) - centers.row(static_cast<Eigen::Index>(c));

    Id x;
    if (level_feat.back() >= 0) {
      Id gathered = g.tape.gather_rows(level_feat.back(), flat);
      x = g.tape.concat_cols(g.tape.constant(rel), gathered);
    } else {
      x = g.tape.constant(rel);
    }
    x = g.mlp(x, "scene.sa" + std::to_string(l), sa.widths.size(), true);
    level_feat.push_back(g.tape.segment_max(x, offsets));
    level_pts.push_back(std::move(centers));
  }

  // feature propagation back down
  Id cur = level_feat.back();
  for (std::size_t i = 0; i < cfg.fp_widths.size(); ++i) {
    const std::size_t coarse = cfg.sa_levels.size() - i;  // index into level_pts
    const std::size_t fine = coarse - 1;
    const MatrixXd w = interp_matrix(level_pts[coarse], level_pts[fine], 3);
    Id up = g.tape.const_premul(w, cur);
    up = g.tape.concat_cols(up, level_feat[fine] >= 0
                                    ? level_feat[fine]
                                    : g.tape.constant(level_pts[fine]));
    cur = g.mlp(up, "scene.fp" + std::to_string(i), cfg.fp_widths[i].size(), true);
  }
  return cur;
}

Id gcn_stack(Graph& g, Id x, const std::string& prefix, Eigen::Index layers,
             Eigen::Index joints) {
  const NetworkConfig& cfg = *g.cfg;
  const MatrixXd mix =
      kron(MatrixXd::Identity(cfg.num_frames, cfg.num_frames),
           normalized_adjacency(joints).adjacency);
  for (Eigen::Index l = 0; l < layers; ++l) {
    const std::string p = prefix + std::to_string(l);
    x = g.tape.const_premul(mix, x);
    x = g.tape.temporal_mix(g.get(p + ".temporal"), x, joints);
    x = g.tape.add_row_broadcast(g.tape.matmul(x, g.get(p + ".weight")),
                                 g.get(p + ".bias"));
    x = g.tape.relu(x);
  }
  return x;
}

Id motion_branch(Graph& g, const MatrixXd& motion_array) {
  const NetworkConfig& cfg = *g.cfg;
  const Eigen::Index t = cfg.num_frames;
  if (motion_array.rows() != t || motion_array.cols() != 18)
    throw ArgumentError("encode_motion: motion array must be T x 18");
  if (!motion_array.allFinite())
    throw ArgumentError("encode_motion: non-finite motion array");
  // (T*3) x 6, row t*3+j = joint j at frame t
  MatrixXd rows(t * 3, 6);
  for (Eigen::Index f = 0; f < t; ++f)
    for (Eigen::Index j = 0; j < 3; ++j)
      rows.row(f * 3 + j) = motion_array.row(f).segment<6>(6 * j);
  Id x = g.tape.const_premul(kron(dct_matrix(t), MatrixXd::Identity(3, 3)),
                             g.tape.constant(rows));
  return gcn_stack(g, x, "motion.enc", cfg.gcn_encoder_layers, 3);
}

Id head_branch(Graph& g, const MatrixXd& head_orientations) {
  const NetworkConfig& cfg = *g.cfg;
  if (head_orientations.rows() != cfg.num_frames || head_orientations.cols() != 3)
    throw ArgumentError("encode_head: orientation matrix must be T x 3");
  for (Eigen::Index i = 0; i < head_orientations.rows(); ++i)
    if (std::abs(head_orientations.row(i).norm() - 1.0) > 1e-4)
      throw ArgumentError("encode_head: rows must be unit vectors");
  Id x = g.tape.const_premul(dct_matrix(cfg.num_frames),
                             g.tape.constant(head_orientations));
  return g.mlp(x, "head", cfg.head_mlp_widths.size(), false);
}

Id decode_branch(Graph& g, Id f_traj, Id f_head) {
  const NetworkConfig& cfg = *g.cfg;
  const Eigen::Index t = cfg.num_frames;
  Id x;
  Eigen::Index joints;
  if (f_traj < 0) {  // head_scene: the head embedding is the whole motion tensor
    x = f_head;
    joints = 1;
  } else {
    joints = 4;
    Id stacked = g.tape.concat_rows(f_traj, f_head);  // traj rows, then head rows
    std::vector<Eigen::Index> order(t * 4);
    for (Eigen::Index f = 0; f < t; ++f) {
      for (Eigen::Index j = 0; j < 3; ++j) order[f * 4 + j] = f * 3 + j;
      order[f * 4 + 3] = t * 3 + f;
    }
    x = g.tape.gather_rows(stacked, order);
  }
  x = gcn_stack(g, x, "motion.dec", cfg.gcn_decoder_layers, joints);
  return g.tape.const_premul(joint_mean_matrix(t, joints), x);
}

struct AttentionIds {
  Id out;
  Id phi_q, phi_k;
};

AttentionIds attention_ids(Graph& g, Id q, Id kv) {
  AttentionIds a;
  a.phi_q = g.tape.elu_plus_one(q);
  a.phi_k = g.tape.elu_plus_one(kv);
  Id summary = g.tape.matmul(g.tape.transpose(a.phi_k), kv);  // D x D
  Id numer = g.tape.matmul(a.phi_q, summary);                 // N x D
  Id den = g.tape.matmul(a.phi_q, g.tape.transpose(g.tape.colwise_sum(a.phi_k)));
  a.out = g.tape.row_div_eps(numer, den, 1e-6);
  return a;
}

MatrixXd normalized_weights(const MatrixXd& phi_q, const MatrixXd& phi_k) {
  MatrixXd w = phi_q * phi_k.transpose();
  for (Eigen::Index i = 0; i < w.rows(); ++i) w.row(i) /= w.row(i).sum();
  return w;
}

struct ForwardIds {
  Id logits = -1;
  Id f_scene = -1, f_traj = -1, f_head = -1, f_pose = -1, a_pose = -1, f_fused = -1;
  MatrixXd attention_weights;
};

ForwardIds build_forward(Graph& g, const ScenePointCloud& cloud,
                         const SparseMotionWindow& window) {
  const NetworkConfig& cfg = *g.cfg;
  ForwardIds out;
  out.f_scene = scene_branch(g, cloud);
  const Eigen::Index n = cloud.count();

  if (cfg.variant == Variant::scene_only) {
    out.f_fused = out.f_scene;
  } else {
    window.validate();
    if (window.num_frames() != cfg.num_frames)
      throw ArgumentError("forward: window length does not match config");
    if (has_motion_branch(cfg.variant))
      out.f_traj = motion_branch(g, assemble_motion_array(window));
    out.f_head = head_branch(g, window.head_orientations);
    out.f_pose = decode_branch(g, out.f_traj, out.f_head);

    const Eigen::Index t = cfg.num_frames;
    switch (cfg.variant) {
      case Variant::full:
      case Variant::head_scene: {
        AttentionIds att = attention_ids(g, out.f_scene, out.f_pose);
        out.a_pose = att.out;
        out.attention_weights = normalized_weights(g.tape.value(att.phi_q),
                                                   g.tape.value(att.phi_k));
        break;
      }
      case Variant::motion_query: {
        AttentionIds att = attention_ids(g, out.f_pose, out.f_scene);
        Id pooled = g.tape.const_premul(
            MatrixXd::Constant(1, t, 1.0 / static_cast<double>(t)), att.out);
        out.a_pose = g.tape.broadcast_row(pooled, n);
        break;
      }
      case Variant::mlp_fusion: {
        Id pooled = g.tape.const_premul(
            MatrixXd::Constant(1, t, 1.0 / static_cast<double>(t)), out.f_pose);
        out.a_pose = g.tape.broadcast_row(pooled, n);
        break;
      }
      default:
        break;
    }
    out.f_fused = g.tape.concat_cols(out.f_scene, out.a_pose);
  }

  out.logits = g.mlp(out.f_fused, "out", cfg.output_mlp_widths.size() + 1, false);
  return out;
}

Id loss_graph(Graph& g, Id logits, const BinaryIntentionMask& mask,
              const LossConfig& lc) {
  mask.validate();
  const Eigen::Index n = mask.count();
  if (g.tape.value(logits).rows() != n)
    throw ArgumentError("loss: logits/mask length mismatch");
  MatrixXd y(n, 1), sign(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i, 0) = mask.labels(i);
    sign(i, 0) = mask.labels(i) == 1 ? 1.0 : -1.0;
  }

  std::vector<Id> terms;
  if (lc.bce) {
    const double w = lc.global_class_weight ? lc.global_weight : class_weight(mask);
    Id pos = g.tape.cwise_mul_const(g.tape.softplus(g.tape.scale(logits, -1.0)),
                                    MatrixXd(w * y));
    Id neg = g.tape.cwise_mul_const(g.tape.softplus(logits),
                                    MatrixXd((1.0 - y.array()).matrix()));
    terms.push_back(g.tape.mean_all(g.tape.add(pos, neg)));
  }
  if (lc.focal) {
    Id s_neg = g.tape.cwise_mul_const(logits, -sign);  // -s, s = true-class logit
    Id mod = g.tape.pow_const(g.tape.sigmoid(s_neg), lc.gamma);
    Id ce = g.tape.softplus(s_neg);
    terms.push_back(g.tape.scale(g.tape.mean_all(g.tape.cwise_mul(mod, ce)), lc.alpha));
  }
  if (lc.dice) {
    Id p = g.tape.sigmoid(logits);
    Id inter = g.tape.sum_all(g.tape.cwise_mul_const(p, y));
    Id numer = g.tape.add_const(g.tape.scale(inter, 2.0), lc.epsilon);
    Id denom = g.tape.add_const(g.tape.sum_all(p), y.sum() + lc.epsilon);
    terms.push_back(g.tape.sub(g.tape.constant(MatrixXd::Ones(1, 1)),
                               g.tape.div_scalar(numer, denom)));
  }
  if (terms.empty()) throw ArgumentError("loss: no terms enabled");
  Id total = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) total = g.tape.add(total, terms[i]);
  return total;
}

}  // namespace

ModelParams init_params(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  Rng rng(seed);
  for (const auto& [name, shape] : param_layout(config)) {
    MatrixXd m = MatrixXd::Zero(shape.first, shape.second);
    if (name.size() < 5 || name.substr(name.size() - 5) != ".bias") {
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

MatrixXd encode_scene(const ScenePointCloud& cloud, const ModelParams& params,
                      const NetworkConfig& config) {
  config.validate();
  Graph g = make_graph(params, config, false);
  return g.tape.value(scene_branch(g, cloud));
}

MatrixXd encode_motion(const MatrixXd& motion_array, const ModelParams& params,
                       const NetworkConfig& config) {
  config.validate();
  Graph g = make_graph(params, config, false);
  return g.tape.value(motion_branch(g, motion_array));
}

MatrixXd encode_head(const MatrixXd& head_orientations, const ModelParams& params,
                     const NetworkConfig& config) {
  config.validate();
  Graph g = make_graph(params, config, false);
  return g.tape.value(head_branch(g, head_orientations));
}

MatrixXd fuse_and_decode(const MatrixXd& f_traj, const MatrixXd& f_head,
                         const ModelParams& params, const NetworkConfig& config) {
  config.validate();
  Graph g = make_graph(params, config, false);
  Id traj = f_traj.size() > 0 ? g.tape.constant(f_traj) : -1;
  Id head = g.tape.constant(f_head);
  return g.tape.value(decode_branch(g, traj, head));
}

std::pair<MatrixXd, MatrixXd> linear_cross_attention(const MatrixXd& q,
                                                     const MatrixXd& k,
                                                     const MatrixXd& v,
                                                     const std::string& kernel) {
  if (kernel != "elu_plus_one")
    throw ArgumentError("linear_cross_attention: unknown kernel " + kernel);
  if (q.cols() != k.cols() || k.rows() != v.rows())
    throw ArgumentError("linear_cross_attention: shape mismatch");
  if (q.cols() < 1 || k.rows() < 1)
    throw ArgumentError("linear_cross_attention: empty inputs");
  auto phi = [](double x) { return x > 0.0 ? x + 1.0 : std::exp(x); };
  MatrixXd pq = q.unaryExpr(phi);
  MatrixXd pk = k.unaryExpr(phi);
  if (pq.minCoeff() <= 0.0 || pk.minCoeff() <= 0.0)
    throw NumericError("linear_cross_attention: kernel produced non-positive values");
  MatrixXd summary = pk.transpose() * v;
  Eigen::VectorXd den = pq * pk.colwise().sum().transpose();
  MatrixXd out = pq * summary;
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) /= den(i) + 1e-6;
  return {out, normalized_weights(pq, pk)};
}

IntentionHeatmap forward(const ScenePointCloud& cloud,
                         const SparseMotionWindow& window,
                         const ModelParams& params, const NetworkConfig& config,
                         FeatureBundle* bundle) {
  config.validate();
  Graph g = make_graph(params, config, false);
  ForwardIds ids = build_forward(g, cloud, window);
  if (bundle) {
    auto val = [&](Id id) { return id >= 0 ? g.tape.value(id) : MatrixXd(); };
    bundle->f_scene = val(ids.f_scene);
    bundle->f_traj = val(ids.f_traj);
    bundle->f_head = val(ids.f_head);
    bundle->f_pose = val(ids.f_pose);
    bundle->a_pose = val(ids.a_pose);
    bundle->f_fused = val(ids.f_fused);
    bundle->attention_weights = ids.attention_weights;
  }
  IntentionHeatmap h;
  h.logits = g.tape.value(ids.logits).col(0);
  if (!h.logits.allFinite()) throw NumericError("forward: non-finite logits");
  return h;
}

GradientResult gradient(const ScenePointCloud& cloud,
                        const SparseMotionWindow& window,
                        const BinaryIntentionMask& mask, const ModelParams& params,
                        const NetworkConfig& config, const LossConfig& loss_config) {
  config.validate();
  Graph g = make_graph(params, config, true);
  ForwardIds ids = build_forward(g, cloud, window);
  Id total = loss_graph(g, ids.logits, mask, loss_config);
  g.tape.backward(total);

  GradientResult res;
  const VectorXd logits = g.tape.value(ids.logits).col(0);
  res.loss = total_loss(logits, mask, loss_config);
  for (const auto& [name, value] : params.tensors) {
    const MatrixXd& grad = g.tape.grad(g.pid.at(name));
    MatrixXd out = grad.size() == 0
                       ? MatrixXd::Zero(value.rows(), value.cols())
                       : grad;
    if (!out.allFinite())
      throw NumericError("gradient: non-finite gradient for " + name);
    res.grads.emplace(name, std::move(out));
  }
  return res;
}

}  // namespace i3d
