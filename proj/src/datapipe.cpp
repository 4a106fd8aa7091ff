#include "i3d/datapipe.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "i3d/rng.hpp"
#include "json.hpp"

namespace i3d {

namespace fs = std::filesystem;

namespace {

double round_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

MatrixXd round_f32(const MatrixXd& m) {
  return m.unaryExpr([](double v) { return round_f32(v); });
}

Vector3d slerp_unit(const Vector3d& a, const Vector3d& b, double t) {
  const double d = std::clamp(a.dot(b), -1.0, 1.0);
  const double omega = std::acos(d);
  if (omega < 1e-9) return a;
  const double s = std::sin(omega);
  return (std::sin((1.0 - t) * omega) * a + std::sin(t * omega) * b) / s;
}

// Piecewise-linear lookup over session frames.
Vector3d interp_position(const std::vector<SessionFrame>& frames, double t,
                         Vector3d SessionFrame::* field) {
  if (t <= frames.front().timestamp) return frames.front().*field;
  if (t >= frames.back().timestamp) return frames.back().*field;
  auto it = std::lower_bound(
      frames.begin(), frames.end(), t,
      [](const SessionFrame& f, double q) { return f.timestamp < q; });
  const SessionFrame& hi = *it;
  const SessionFrame& lo = *(it - 1);
  const double u = (t - lo.timestamp) / (hi.timestamp - lo.timestamp);
  return (1.0 - u) * (lo.*field) + u * (hi.*field);
}

Vector3d interp_direction(const std::vector<SessionFrame>& frames, double t) {
  if (t <= frames.front().timestamp) return frames.front().head_dir;
  if (t >= frames.back().timestamp) return frames.back().head_dir;
  auto it = std::lower_bound(
      frames.begin(), frames.end(), t,
      [](const SessionFrame& f, double q) { return f.timestamp < q; });
  const SessionFrame& hi = *it;
  const SessionFrame& lo = *(it - 1);
  const double u = (t - lo.timestamp) / (hi.timestamp - lo.timestamp);
  return slerp_unit(lo.head_dir.normalized(), hi.head_dir.normalized(), u).normalized();
}

void check_session(const Session& session) {
  if (session.frames.size() < 2) throw ArgumentError("session needs >= 2 frames");
  for (std::size_t i = 1; i < session.frames.size(); ++i)
    if (session.frames[i].timestamp <= session.frames[i - 1].timestamp)
      throw ArgumentError("session timestamps must strictly increase");
  for (const InteractionEvent& e : session.interaction_events)
    if (!e.goal.allFinite()) throw ArgumentError("event goal must be finite");
}

}  // namespace

std::vector<Sample> extract_windows(const Session& session, int horizon_ms,
                                    Eigen::Index num_frames, double frame_rate,
                                    std::vector<std::string>* skip_reasons) {
  check_session(session);
  if (horizon_ms < 0) throw ArgumentError("extract_windows: negative horizon");
  if (num_frames < 2 || frame_rate <= 0)
    throw ArgumentError("extract_windows: bad window parameters");

  const double dt = 1.0 / frame_rate;
  std::vector<Sample> out;
  int event_idx = 0;
  for (const InteractionEvent& ev : session.interaction_events) {
    const double end = ev.timestamp - horizon_ms / 1000.0;
    const double start = end - (num_frames - 1) * dt;
    if (start < session.frames.front().timestamp - 1e-9 ||
        end > session.frames.back().timestamp + 1e-9) {
      if (skip_reasons)
        skip_reasons->push_back(session.scene_id + ": event at " +
                                std::to_string(ev.timestamp) +
                                "s lacks history for horizon " +
                                std::to_string(horizon_ms) + "ms");
      ++event_idx;
      continue;
    }

    Sample s;
    s.cloud = session.scene;
    s.goal = ev.goal;
    s.horizon_ms = horizon_ms;
    s.scene_id = session.scene_id;
    s.sample_id = session.scene_id + "_e" + std::to_string(event_idx) + "_h" +
                  std::to_string(horizon_ms);
    s.window.positions.resize(num_frames, 9);
    s.window.head_orientations.resize(num_frames, 3);
    s.window.frame_interval = dt;
    for (Eigen::Index i = 0; i < num_frames; ++i) {
      const double t = end - (num_frames - 1 - i) * dt;
      s.window.positions.row(i).segment<3>(0) =
          interp_position(session.frames, t, &SessionFrame::head);
      s.window.positions.row(i).segment<3>(3) =
          interp_position(session.frames, t, &SessionFrame::lhand);
      s.window.positions.row(i).segment<3>(6) =
          interp_position(session.frames, t, &SessionFrame::rhand);
      s.window.head_orientations.row(i) = interp_direction(session.frames, t);
    }
    s.window.velocities = finite_diff_velocity(s.window.positions, dt);

    const Eigen::Index future = static_cast<Eigen::Index>(
        std::lround(horizon_ms * frame_rate / 1000.0));
    s.future_positions.resize(future, 9);
    for (Eigen::Index k = 0; k < future; ++k) {
      const double t = end + (k + 1) * dt;
      s.future_positions.row(k).segment<3>(0) =
          interp_position(session.frames, t, &SessionFrame::head);
      s.future_positions.row(k).segment<3>(3) =
          interp_position(session.frames, t, &SessionFrame::lhand);
      s.future_positions.row(k).segment<3>(6) =
          interp_position(session.frames, t, &SessionFrame::rhand);
    }
    out.push_back(std::move(s));
    ++event_idx;
  }
  return out;
}

GroundTruth gaussian_gt(const ScenePointCloud& cloud, const Vector3d& goal,
                        const GtConfig& config) {
  cloud.validate();
  if (config.sigma <= 0) throw ArgumentError("gaussian_gt: sigma must be positive");
  GroundTruth gt;
  const Eigen::Index n = cloud.count();
  gt.heatmap.resize(n);
  gt.mask.labels.resize(n);
  const double denom = 2.0 * config.sigma * config.sigma;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d2 = (cloud.points.row(i).transpose() - goal).squaredNorm();
    gt.heatmap(i) = std::exp(-d2 / denom);
    gt.mask.labels(i) = gt.heatmap(i) >= config.tau ? 1 : 0;
  }
  return gt;
}

Sample finalize_sample(const Sample& raw, Eigen::Index num_points,
                       const GtConfig& gt_config, std::uint64_t seed) {
  BodyFrameTransform tf;
  auto [aligned_cloud, aligned_window] = align_to_body_frame(raw.cloud, raw.window, &tf);

  Sample s;
  const Eigen::Index last = aligned_window.num_frames() - 1;
  const Vector3d origin = aligned_window.positions.row(last).segment<3>(0);
  s.cloud = distance_weighted_subsample(aligned_cloud, origin, num_points, seed);
  s.window = std::move(aligned_window);
  s.goal = tf.apply_point(raw.goal);
  s.horizon_ms = raw.horizon_ms;
  s.scene_id = raw.scene_id;
  s.sample_id = raw.sample_id;
  s.future_positions.resize(raw.future_positions.rows(), 9);
  for (Eigen::Index r = 0; r < raw.future_positions.rows(); ++r)
    for (int j = 0; j < 3; ++j)
      s.future_positions.row(r).segment<3>(3 * j) =
          tf.apply_point(raw.future_positions.row(r).segment<3>(3 * j));

  // Round to float so the 32-bit sample files round-trip losslessly.
  s.cloud.points = round_f32(s.cloud.points);
  s.window.positions = round_f32(s.window.positions);
  s.window.velocities = round_f32(s.window.velocities);
  s.window.head_orientations = round_f32(s.window.head_orientations);
  s.goal = Vector3d(round_f32(s.goal.x()), round_f32(s.goal.y()), round_f32(s.goal.z()));
  s.future_positions = round_f32(s.future_positions);

  s.gt = gaussian_gt(s.cloud, s.goal, gt_config);
  s.gt.heatmap = s.gt.heatmap.unaryExpr([](double v) { return round_f32(v); });
  return s;
}

std::pair<std::vector<Sample>, std::vector<Sample>> scene_split(
    const std::vector<Sample>& samples, double test_fraction, std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const Sample& s : samples) ids.push_back(s.scene_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() < 2) throw ArgumentError("scene_split: need >= 2 distinct scenes");

  Rng rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i)
    std::swap(ids[i - 1], ids[rng.below(i)]);

  std::map<std::string, Eigen::Index> per_scene;
  for (const Sample& s : samples) ++per_scene[s.scene_id];
  const double target = test_fraction * static_cast<double>(samples.size());
  std::vector<std::string> test_ids;
  Eigen::Index test_count = 0;
  for (const std::string& id : ids) {
    if (static_cast<double>(test_count) >= target) break;
    test_ids.push_back(id);
    test_count += per_scene[id];
  }
  auto is_test = [&](const std::string& id) {
    return std::find(test_ids.begin(), test_ids.end(), id) != test_ids.end();
  };
  std::pair<std::vector<Sample>, std::vector<Sample>> out;
  for (const Sample& s : samples)
    (is_test(s.scene_id) ? out.second : out.first).push_back(s);
  return out;
}

namespace {

void add_box(std::vector<Matrix3d>& tris, const Vector3d& center,
             const Vector3d& size) {
  const Vector3d h = size / 2.0;
  const double xs[2] = {center.x() - h.x(), center.x() + h.x()};
  const double ys[2] = {center.y() - h.y(), center.y() + h.y()};
  const double zs[2] = {center.z() - h.z(), center.z() + h.z()};
  Vector3d v[8];
  for (int i = 0; i < 8; ++i)
    v[i] = Vector3d(xs[i & 1], ys[(i >> 1) & 1], zs[(i >> 2) & 1]);
  const int faces[6][4] = {{0, 1, 3, 2}, {4, 5, 7, 6}, {0, 1, 5, 4},
                           {2, 3, 7, 6}, {0, 2, 6, 4}, {1, 3, 7, 5}};
  for (const auto& f : faces) {
    Matrix3d t1, t2;
    t1 << v[f[0]].transpose(), v[f[1]].transpose(), v[f[2]].transpose();
    t2 << v[f[0]].transpose(), v[f[2]].transpose(), v[f[3]].transpose();
    tris.push_back(t1);
    tris.push_back(t2);
  }
}

Vector3d jitter_direction(const Vector3d& dir, const Vector3d& offset) {
  return (dir + offset).normalized();
}

}  // namespace

std::vector<Session> gen_synthetic(const SynthConfig& config, std::uint64_t seed) {
  if (config.num_scenes < 1 || config.samples_per_scene < 1 ||
      config.points_per_scene < 1 || config.num_targets_per_scene < 1)
    throw ArgumentError("gen_synthetic: all counts must be positive");

  const double rate = 30.0;
  std::vector<Session> sessions;
  for (int sc = 0; sc < config.num_scenes; ++sc) {
    Rng sr(hash_seed(seed, sc, 0x5cE));
    std::vector<Matrix3d> tris;
    // floor
    Matrix3d f1, f2;
    f1 << -3, -3, 0, 3, -3, 0, 3, 3, 0;
    f2 << -3, -3, 0, 3, 3, 0, -3, 3, 0;
    tris.push_back(f1);
    tris.push_back(f2);

    std::vector<Vector3d> table_centers;
    for (int t = 0; t < 2; ++t) {
      Vector3d c(sr.uniform(-1.6, 1.6), sr.uniform(-1.6, 1.6), 0.375);
      table_centers.push_back(c);
      add_box(tris, c, Vector3d(1.2, 0.8, 0.75));
    }
    add_box(tris, Vector3d(sr.uniform(-1.5, 1.5), 2.55, 0.9), Vector3d(0.9, 0.35, 1.8));

    std::vector<Vector3d> targets;
    for (int k = 0; k < config.num_targets_per_scene; ++k) {
      const Vector3d& tc = table_centers[k % table_centers.size()];
      Vector3d goal(tc.x() + sr.uniform(-0.45, 0.45), tc.y() + sr.uniform(-0.25, 0.25),
                    0.75 + 0.06);
      targets.push_back(goal);
      add_box(tris, goal, Vector3d(0.12, 0.12, 0.12));
    }
    if (config.cluttered) {
      for (int o = 0; o < 3; ++o) {
        const double s = sr.uniform(0.3, 0.7);
        add_box(tris, Vector3d(sr.uniform(-2.0, 2.0), sr.uniform(-2.0, 2.0), s / 2),
                Vector3d(s, s, s));
      }
    }

    ScenePointCloud scene = sample_mesh_surface(
        tris, config.points_per_scene, hash_seed(seed, sc, 0xC10D));
    const std::string scene_id = "scene" + std::to_string(sc);

    for (int i = 0; i < config.samples_per_scene; ++i) {
      Rng tr(hash_seed(seed, sc, i));
      Session ses;
      ses.scene = scene;
      ses.scene_id = scene_id;

      const Vector3d goal = targets[tr.below(targets.size())];
      const double approach = tr.uniform(0.0, 6.283185307179586);
      const double dist = tr.uniform(1.3, 2.2);
      Vector3d stand(goal.x() + dist * std::cos(approach),
                     goal.y() + dist * std::sin(approach), 0.0);
      stand.x() = std::clamp(stand.x(), -2.7, 2.7);
      stand.y() = std::clamp(stand.y(), -2.7, 2.7);

      const double head_h = tr.uniform(1.6, 1.75);
      const Vector3d head0(stand.x(), stand.y(), head_h);
      Vector3d to_goal = goal - head0;
      const Vector3d fwd = Vector3d(to_goal.x(), to_goal.y(), 0).normalized();
      const Vector3d side(-fwd.y(), fwd.x(), 0);
      const Vector3d lrest = head0 + 0.22 * side + 0.12 * fwd - Vector3d(0, 0, 0.75);
      const Vector3d rrest = head0 - 0.22 * side + 0.12 * fwd - Vector3d(0, 0, 0.75);
      const bool use_left = (goal - lrest).norm() <= (goal - rrest).norm();

      const double idle = tr.uniform(0.8, 1.2);
      const double reach = tr.uniform(1.5, 2.5);
      const double contact = idle + reach;
      const double lead = tr.uniform(0.2, 0.4);

      // Initial heading is unrelated to the target; orientation converges on
      // it `lead` seconds before contact, with a persistent aim bias plus
      // per-frame jitter.
      const double yaw0 = tr.uniform(0.0, 6.283185307179586);
      const Vector3d dir0 = Vector3d(std::cos(yaw0), std::sin(yaw0), -0.15).normalized();
      // Aim error persists through convergence: people rarely fixate the goal
      // exactly, so the final ray lands near, not on, the target. This keeps
      // the head-direction cue informative but beatable by learned fusion.
      const Vector3d bias(tr.normal(0, 0.24), tr.normal(0, 0.24), tr.normal(0, 0.10));

      const double blend_start = 0.5 * idle;
      const double blend_end = contact - lead;
      const Eigen::Index frames =
          static_cast<Eigen::Index>(std::ceil((contact + 0.3) * rate)) + 1;
      for (Eigen::Index fi = 0; fi < frames; ++fi) {
        SessionFrame fr;
        fr.timestamp = fi / rate;
        const double tau = std::clamp((fr.timestamp - idle) / reach, 0.0, 1.0);
        const double s = tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau);
        fr.head = head0 + 0.25 * s * fwd;
        fr.lhand = lrest;
        fr.rhand = rrest;
        if (use_left)
          fr.lhand = lrest + s * (goal - lrest);
        else
          fr.rhand = rrest + s * (goal - rrest);
        const double bt =
            std::clamp((fr.timestamp - blend_start) / (blend_end - blend_start), 0.0, 1.0);
        const double bs = bt * bt * bt * (10.0 - 15.0 * bt + 6.0 * bt * bt);
        const Vector3d aim = (goal - fr.head).normalized();
        Vector3d dir = slerp_unit(dir0, aim, bs).normalized();
        const Vector3d jit(tr.normal(0, 0.02), tr.normal(0, 0.02), tr.normal(0, 0.01));
        fr.head_dir = jitter_direction(dir, bias + jit);
        ses.frames.push_back(fr);
      }
      ses.interaction_events.push_back({contact, goal, EventKind::grasp});
      sessions.push_back(std::move(ses));
    }
  }
  return sessions;
}

// ---------------------------------------------------------------------------
// file formats
// ---------------------------------------------------------------------------

namespace {

void write_f32_file(const fs::path& path, const double* data, std::size_t count) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError(path.string(), 0, "cannot open for writing");
  std::vector<float> buf(count);
  for (std::size_t i = 0; i < count; ++i) buf[i] = static_cast<float>(data[i]);
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(count * sizeof(float)));
}

std::vector<float> read_f32_file(const fs::path& path, std::size_t expect_count) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is) throw FormatError(path.string(), 0, "cannot open");
  const std::size_t size = static_cast<std::size_t>(is.tellg());
  const std::size_t expect = expect_count * sizeof(float);
  if (size != expect)
    throw FormatError(path.string(), std::min(size, expect),
                      "expected " + std::to_string(expect) + " bytes, found " +
                          std::to_string(size));
  is.seekg(0);
  std::vector<float> buf(expect_count);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(expect));
  if (!is) throw FormatError(path.string(), 0, "short read");
  return buf;
}

// Row-major on disk, per the sample layout.
void write_matrix_f32(const fs::path& path, const MatrixXd& m) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  write_f32_file(path, rm.data(), static_cast<std::size_t>(rm.size()));
}

MatrixXd read_matrix_f32(const fs::path& path, Eigen::Index rows, Eigen::Index cols) {
  const auto buf = read_f32_file(path, static_cast<std::size_t>(rows * cols));
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = static_cast<double>(buf[static_cast<std::size_t>(r * cols + c)]);
  return m;
}

}  // namespace

void write_sample(const Sample& sample, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["sample_id"] = sample.sample_id;
  manifest["scene_id"] = sample.scene_id;
  manifest["horizon_ms"] = sample.horizon_ms;
  manifest["num_points"] = sample.cloud.count();
  manifest["num_frames"] = sample.window.num_frames();
  manifest["frame_interval"] = sample.window.frame_interval;
  manifest["goal"] = {sample.goal.x(), sample.goal.y(), sample.goal.z()};
  manifest["num_future_frames"] = sample.future_positions.rows();
  std::ofstream os(dir / "manifest.json");
  os << manifest.dump(2) << "\n";

  write_matrix_f32(dir / "points.f32", sample.cloud.points);
  SparseMotionWindow w = sample.window;
  write_matrix_f32(dir / "motion.f32", assemble_motion_array(w));
  write_matrix_f32(dir / "head.f32", sample.window.head_orientations);
  write_matrix_f32(dir / "gt_heatmap.f32",
                   MatrixXd(sample.gt.heatmap.transpose()));
  if (sample.future_positions.rows() > 0)
    write_matrix_f32(dir / "future.f32", sample.future_positions);

  std::ofstream ms(dir / "gt_mask.u8", std::ios::binary);
  std::vector<unsigned char> mask(sample.gt.mask.count());
  for (Eigen::Index i = 0; i < sample.gt.mask.count(); ++i)
    mask[i] = static_cast<unsigned char>(sample.gt.mask.labels(i));
  ms.write(reinterpret_cast<const char*>(mask.data()),
           static_cast<std::streamsize>(mask.size()));
}

Sample read_sample(const fs::path& dir) {
  const fs::path mpath = dir / "manifest.json";
  std::ifstream is(mpath);
  if (!is) throw FormatError(mpath.string(), 0, "cannot open");
  nlohmann::json manifest;
  try {
    is >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(mpath.string(), 0, e.what());
  }

  Sample s;
  try {
    s.sample_id = manifest.at("sample_id").get<std::string>();
    s.scene_id = manifest.at("scene_id").get<std::string>();
    s.horizon_ms = manifest.at("horizon_ms").get<int>();
    const Eigen::Index n = manifest.at("num_points").get<Eigen::Index>();
    const Eigen::Index t = manifest.at("num_frames").get<Eigen::Index>();
    s.window.frame_interval = manifest.at("frame_interval").get<double>();
    const auto goal = manifest.at("goal");
    s.goal = Vector3d(goal.at(0).get<double>(), goal.at(1).get<double>(),
                      goal.at(2).get<double>());
    const Eigen::Index future =
        manifest.value("num_future_frames", Eigen::Index{0});

    s.cloud.points = read_matrix_f32(dir / "points.f32", n, 3);
    const MatrixXd m = read_matrix_f32(dir / "motion.f32", t, 18);
    s.window.positions.resize(t, 9);
    s.window.velocities.resize(t, 9);
    for (int j = 0; j < 3; ++j) {
      s.window.positions.middleCols<3>(3 * j) = m.middleCols<3>(6 * j);
      s.window.velocities.middleCols<3>(3 * j) = m.middleCols<3>(6 * j + 3);
    }
    s.window.head_orientations = read_matrix_f32(dir / "head.f32", t, 3);
    s.gt.heatmap = read_matrix_f32(dir / "gt_heatmap.f32", 1, n).row(0);
    if (future > 0)
      s.future_positions = read_matrix_f32(dir / "future.f32", future, 9);
    else
      s.future_positions.resize(0, 9);

    const fs::path maskp = dir / "gt_mask.u8";
    std::ifstream mi(maskp, std::ios::binary | std::ios::ate);
    if (!mi) throw FormatError(maskp.string(), 0, "cannot open");
    const std::size_t msize = static_cast<std::size_t>(mi.tellg());
    if (msize != static_cast<std::size_t>(n))
      throw FormatError(maskp.string(), std::min<std::size_t>(msize, n),
                        "mask size disagrees with manifest num_points");
    mi.seekg(0);
    std::vector<unsigned char> mask(msize);
    mi.read(reinterpret_cast<char*>(mask.data()), static_cast<std::streamsize>(msize));
    s.gt.mask.labels.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (mask[i] > 1)
        throw FormatError(maskp.string(), static_cast<std::size_t>(i),
                          "mask byte must be 0 or 1");
      s.gt.mask.labels(i) = mask[i];
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(mpath.string(), 0, e.what());
  }
  return s;
}

void write_split_file(const fs::path& path, const std::vector<std::string>& dirs) {
  std::ofstream os(path);
  if (!os) throw FormatError(path.string(), 0, "cannot open for writing");
  for (const std::string& d : dirs) os << d << "\n";
}

std::vector<std::string> read_split_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError(path.string(), 0, "cannot open");
  std::vector<std::string> out;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

// ---------------------------------------------------------------------------
// checkpoint container
// ---------------------------------------------------------------------------

namespace {

template <typename T>
void put(std::ostream& os, T v) {
  // Little-endian host assumed (x86/ARM); bytes written verbatim.
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const fs::path& path) {
  T v;
  const std::size_t at = static_cast<std::size_t>(is.tellg());
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw FormatError(path.string(), at, "unexpected end of file");
  return v;
}

}  // namespace

void save_checkpoint(const fs::path& path,
                     const std::map<std::string, MatrixXd>& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError(path.string(), 0, "cannot open for writing");
  os.write("I3DN", 4);
  put<std::uint32_t>(os, 1);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, m] : tensors) {
    put<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint8_t>(os, 2);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(m.rows()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        put<float>(os, static_cast<float>(m(r, c)));
  }
}

std::map<std::string, MatrixXd> load_checkpoint(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(path.string(), 0, "cannot open");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "I3DN", 4) != 0)
    throw FormatError(path.string(), 0, "bad magic");
  const auto version = get<std::uint32_t>(is, path);
  if (version != 1)
    throw FormatError(path.string(), 4, "unsupported version " + std::to_string(version));
  const auto count = get<std::uint32_t>(is, path);

  std::map<std::string, MatrixXd> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint16_t>(is, path);
    std::string name(name_len, '\0');
    const std::size_t name_at = static_cast<std::size_t>(is.tellg());
    is.read(name.data(), name_len);
    if (!is) throw FormatError(path.string(), name_at, "unexpected end of file");
    const auto rank = get<std::uint8_t>(is, path);
    if (rank < 1 || rank > 2)
      throw FormatError(path.string(), static_cast<std::size_t>(is.tellg()) - 1,
                        "unsupported rank " + std::to_string(rank));
    Eigen::Index rows = 1, cols = 1;
    if (rank == 1) {
      cols = get<std::uint32_t>(is, path);
    } else {
      rows = get<std::uint32_t>(is, path);
      cols = get<std::uint32_t>(is, path);
    }
    MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        m(r, c) = static_cast<double>(get<float>(is, path));
    out.emplace(std::move(name), std::move(m));
  }
  return out;
}

CameraModel read_camera_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError(path.string(), 0, "cannot open");
  CameraModel cam;
  bool have_extrinsic = false;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(path.string(), 0, "expected key=value, got: " + line);
    const std::string key = line.substr(0, eq);
    std::istringstream val(line.substr(eq + 1));
    if (key == "extrinsic") {
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
          if (!(val >> cam.extrinsic(r, c)))
            throw FormatError(path.string(), 0, "extrinsic needs 16 reals");
      have_extrinsic = true;
    } else if (key == "fx") val >> cam.fx;
    else if (key == "fy") val >> cam.fy;
    else if (key == "cx") val >> cam.cx;
    else if (key == "cy") val >> cam.cy;
    else if (key == "width") val >> cam.width;
    else if (key == "height") val >> cam.height;
    else throw FormatError(path.string(), 0, "unknown camera key: " + key);
  }
  if (!have_extrinsic) throw FormatError(path.string(), 0, "missing extrinsic");
  cam.validate();
  return cam;
}

std::vector<Matrix3d> read_triangle_mesh(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError(path.string(), 0, "cannot open");
  std::vector<Matrix3d> tris;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(is, line)) {
    const std::size_t line_at = offset;
    offset += line.size() + 1;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Matrix3d t;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        if (!(ls >> t(r, c)))
          throw FormatError(path.string(), line_at, "triangle line needs 9 reals");
    tris.push_back(t);
  }
  return tris;
}

void write_heatmap_f32(const fs::path& path, const VectorXd& values) {
  write_f32_file(path, values.data(), static_cast<std::size_t>(values.size()));
}

VectorXd read_heatmap_f32(const fs::path& path) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is) throw FormatError(path.string(), 0, "cannot open");
  const std::size_t size = static_cast<std::size_t>(is.tellg());
  if (size % sizeof(float) != 0)
    throw FormatError(path.string(), size - size % sizeof(float),
                      "size not a multiple of 4");
  is.seekg(0);
  std::vector<float> buf(size / sizeof(float));
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size));
  VectorXd out(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = static_cast<double>(buf[i]);
  return out;
}

}  // namespace i3d
