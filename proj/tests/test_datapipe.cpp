#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>

#include "helpers.hpp"
#include "i3d/datapipe.hpp"

using namespace i3d;
namespace fs = std::filesystem;

namespace {

Session linear_session(double duration, double rate, const Eigen::Vector3d& goal) {
  Session s;
  s.scene_id = "unit_scene";
  const int n = static_cast<int>(duration * rate) + 1;
  for (int i = 0; i < n; ++i) {
    SessionFrame f;
    f.timestamp = i / rate;
    const double u = static_cast<double>(i) / (n - 1);
    f.head = Eigen::Vector3d(0.1 * u, 0, 1.6);
    f.lhand = Eigen::Vector3d(0.3, 0.2, 1.1) + u * (goal - Eigen::Vector3d(0.3, 0.2, 1.1));
    f.rhand = Eigen::Vector3d(0.3, -0.2, 1.1);
    f.head_dir = (goal - f.head).normalized();
    s.frames.push_back(f);
  }
  InteractionEvent e;
  e.timestamp = duration;
  e.goal = goal;
  s.interaction_events.push_back(e);
  Rng rng(123);
  s.scene = testutil::random_cloud(600, rng, 1.2);
  s.scene.points.col(2).array() += 1.0;
  return s;
}

Sample make_sample(std::uint64_t seed) {
  Rng rng(seed);
  Sample s;
  s.cloud = testutil::random_cloud(80, rng, 1.0);
  s.window = testutil::random_window(6, rng);
  GtConfig gt;
  s.goal = Eigen::Vector3d(0.4, 0.1, 1.0);
  s.gt = gaussian_gt(s.cloud, s.goal, gt);
  s.horizon_ms = 500;
  s.scene_id = "sc";
  s.sample_id = "sc_0";
  s.future_positions = Eigen::MatrixXd::Random(4, 9);
  // Keep all payload fields exactly representable in 32-bit floats.
  auto round32 = [](Eigen::MatrixXd& m) {
    m = m.unaryExpr(
        [](double v) { return static_cast<double>(static_cast<float>(v)); });
  };
  round32(s.cloud.points);
  round32(s.window.positions);
  round32(s.window.velocities);
  round32(s.window.head_orientations);
  Eigen::MatrixXd hm = s.gt.heatmap;
  round32(hm);
  s.gt.heatmap = hm;
  round32(s.future_positions);
  s.goal = s.goal.unaryExpr(
      [](double v) { return static_cast<double>(static_cast<float>(v)); });
  return s;
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() /
                   ("i3d_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static inline int counter = 0;
};

}  // namespace

TEST_CASE("extract_windows boundary and skip behavior") {
  const double rate = 30.0;
  const Eigen::Vector3d goal(0.6, 0.1, 1.0);

  SUBCASE("horizon 0, exact history: last frame equals session end") {
    Session s = linear_session(0.5, rate, goal);  // 16 frames, exactly T=15+1
    const auto samples = extract_windows(s, 0, 15, rate);
    REQUIRE(samples.size() == 1);
    const auto& w = samples[0].window;
    CHECK(w.num_frames() == 15);
    CHECK((w.positions.row(14).segment<3>(0).transpose() -
           s.frames.back().head)
              .norm() < 1e-9);
  }
  SUBCASE("insufficient history is skipped with a reason") {
    Session s = linear_session(0.4, rate, goal);
    std::vector<std::string> reasons;
    const auto samples = extract_windows(s, 500, 15, rate, &reasons);
    CHECK(samples.empty());
    CHECK(reasons.size() == 1);
  }
  SUBCASE("30 Hz resampling grid ends at t* - horizon") {
    Session s = linear_session(10.0, rate, goal);
    const auto samples = extract_windows(s, 500, 15, rate);
    REQUIRE(samples.size() == 1);
    // Window ends at 9.5 s; frame spacing 1/30 s. The head moves linearly at
    // 0.1/10 m/s in x, so position encodes the timestamp.
    const double expect_end_x = 0.1 * (9.5 / 10.0);
    CHECK(samples[0].window.positions(14, 0) ==
          doctest::Approx(expect_end_x).epsilon(1e-6));
    const double expect_start_x = 0.1 * ((9.5 - 14.0 / 30.0) / 10.0);
    CHECK(samples[0].window.positions(0, 0) ==
          doctest::Approx(expect_start_x).epsilon(1e-6));
  }
  SUBCASE("no events -> empty output") {
    Session s = linear_session(2.0, rate, goal);
    s.interaction_events.clear();
    CHECK(extract_windows(s, 500, 15, rate).empty());
  }
}

TEST_CASE("gaussian_gt") {
  ScenePointCloud c;
  c.points.resize(3, 3);
  const Eigen::Vector3d goal(1, 2, 3);
  c.points.row(0) = goal.transpose();
  c.points.row(1) = (goal + Eigen::Vector3d(0.2, 0, 0)).transpose();  // d = sigma
  c.points.row(2) = (goal + Eigen::Vector3d(1.0, 0, 0)).transpose();  // d = 5 sigma
  GtConfig cfg;  // sigma 0.2, tau 0.5
  const GroundTruth gt = gaussian_gt(c, goal, cfg);
  CHECK(gt.heatmap(0) == doctest::Approx(1.0));
  CHECK(gt.mask.labels(0) == 1);
  CHECK(gt.heatmap(1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
  CHECK(gt.mask.labels(1) == 1);
  CHECK(gt.heatmap(2) < 4e-6);
  CHECK(gt.mask.labels(2) == 0);

  // Monotone: sort by distance, mask must be a prefix of ones.
  Rng rng(9);
  ScenePointCloud rc = testutil::random_cloud(200, rng, 0.6);
  const GroundTruth g2 = gaussian_gt(rc, Eigen::Vector3d::Zero(), cfg);
  std::vector<Eigen::Index> order(200);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return rc.points.row(a).norm() < rc.points.row(b).norm();
  });
  bool seen_zero = false;
  for (Eigen::Index i : order) {
    if (g2.mask.labels(i) == 0) seen_zero = true;
    if (seen_zero) CHECK(g2.mask.labels(i) == 0);
  }
}

TEST_CASE("scene_split") {
  auto samples_for = [](std::initializer_list<std::string> ids) {
    std::vector<Sample> v;
    int k = 0;
    for (const std::string& id : ids) {
      Sample s;
      s.scene_id = id;
      s.sample_id = id + "_" + std::to_string(k++);
      v.push_back(s);
    }
    return v;
  };

  SUBCASE("two scenes, fraction 0.5: one each") {
    const auto v = samples_for({"a", "a", "b", "b"});
    const auto [tr, te] = scene_split(v, 0.5, 1);
    CHECK(tr.size() == 2);
    CHECK(te.size() == 2);
    CHECK(tr[0].scene_id != te[0].scene_id);
  }
  SUBCASE("ten equal scenes, fraction 0.3: three test scenes") {
    std::vector<Sample> v;
    for (int sc = 0; sc < 10; ++sc)
      for (int i = 0; i < 4; ++i) {
        Sample s;
        s.scene_id = "s" + std::to_string(sc);
        v.push_back(s);
      }
    const auto [tr, te] = scene_split(v, 0.3, 5);
    std::set<std::string> test_scenes;
    for (const auto& s : te) test_scenes.insert(s.scene_id);
    CHECK(test_scenes.size() == 3);
    CHECK(tr.size() + te.size() == v.size());
    for (const auto& s : tr) CHECK_FALSE(test_scenes.count(s.scene_id));
  }
  SUBCASE("deterministic and single-scene error") {
    const auto v = samples_for({"a", "a", "b", "c"});
    const auto [tr1, te1] = scene_split(v, 0.4, 9);
    const auto [tr2, te2] = scene_split(v, 0.4, 9);
    REQUIRE(te1.size() == te2.size());
    for (std::size_t i = 0; i < te1.size(); ++i)
      CHECK(te1[i].scene_id == te2[i].scene_id);
    CHECK_THROWS_AS(scene_split(samples_for({"only", "only"}), 0.5, 0),
                    ArgumentError);
  }
}

TEST_CASE("gen_synthetic determinism and physical properties") {
  SynthConfig cfg;
  cfg.num_scenes = 2;
  cfg.samples_per_scene = 3;
  const auto a = gen_synthetic(cfg, 77);
  const auto b = gen_synthetic(cfg, 77);
  REQUIRE(a.size() == b.size());
  REQUIRE(a.size() == 6);  // sessions = scenes x samples_per_scene
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].scene.points == b[i].scene.points);
    REQUIRE(a[i].frames.size() == b[i].frames.size());
    CHECK(a[i].frames.back().head == b[i].frames.back().head);
    REQUIRE(!a[i].interaction_events.empty());

    // Timestamps strictly increase; hand reaches the goal at event time.
    for (std::size_t f = 1; f < a[i].frames.size(); ++f)
      CHECK(a[i].frames[f].timestamp > a[i].frames[f - 1].timestamp);
    const auto& ev = a[i].interaction_events.front();
    const auto& last = a[i].frames.back();
    const double dl = (last.lhand - ev.goal).norm();
    const double dr = (last.rhand - ev.goal).norm();
    CHECK(std::min(dl, dr) < 0.02);
    // Unit head orientations.
    for (const auto& fr : a[i].frames)
      CHECK(std::abs(fr.head_dir.norm() - 1.0) < 1e-6);
  }
}

TEST_CASE("synthetic head orientation converges toward the goal") {
  SynthConfig cfg;
  cfg.num_scenes = 5;
  cfg.samples_per_scene = 20;
  const auto sessions = gen_synthetic(cfg, 31);
  int converged = 0, total = 0;
  for (const auto& s : sessions) {
    const auto& goal = s.interaction_events.front().goal;
    auto ray_dist = [&](const SessionFrame& f) {
      const Eigen::Vector3d v = goal - f.head;
      const double along = v.dot(f.head_dir);
      return (v - along * f.head_dir).norm();
    };
    ++total;
    if (ray_dist(s.frames.back()) < ray_dist(s.frames.front())) ++converged;
  }
  CHECK(total >= 100);
  CHECK(converged >= static_cast<int>(0.9 * total));
}

TEST_CASE("sample round-trip is lossless") {
  const Sample s = make_sample(5);
  TempDir dir;
  write_sample(s, dir.path / "s0");
  const Sample r = read_sample(dir.path / "s0");
  CHECK(r.cloud.points == s.cloud.points);
  CHECK(r.window.positions == s.window.positions);
  CHECK(r.window.velocities == s.window.velocities);
  CHECK(r.window.head_orientations == s.window.head_orientations);
  CHECK(r.window.frame_interval == s.window.frame_interval);
  CHECK(r.gt.heatmap == s.gt.heatmap);
  CHECK(r.gt.mask.labels == s.gt.mask.labels);
  CHECK(r.goal == s.goal);
  CHECK(r.horizon_ms == s.horizon_ms);
  CHECK(r.scene_id == s.scene_id);
  CHECK(r.sample_id == s.sample_id);
  CHECK(r.future_positions == s.future_positions);
}

TEST_CASE("sample corruption produces format errors with correct offsets") {
  const Sample s = make_sample(6);
  TempDir dir;
  const fs::path d = dir.path / "s0";
  write_sample(s, d);

  SUBCASE("truncated points payload") {
    const auto full = fs::file_size(d / "points.f32");
    fs::resize_file(d / "points.f32", full - 5);
    try {
      read_sample(d);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.file.find("points.f32") != std::string::npos);
      CHECK(e.offset == full - 5);
    }
  }
  SUBCASE("manifest count mismatch") {
    std::ifstream in(d / "manifest.json");
    std::string text((std::istreambuf_iterator<char>(in)), {});
    in.close();
    const auto pos = text.find("\"num_points\": 80");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 16, "\"num_points\": 99");
    std::ofstream(d / "manifest.json") << text;
    CHECK_THROWS_AS(read_sample(d), FormatError);
  }
  SUBCASE("missing file") {
    fs::remove(d / "head.f32");
    CHECK_THROWS_AS(read_sample(d), FormatError);
  }
  SUBCASE("gt mask with non-binary byte") {
    std::fstream f(d / "gt_mask.u8", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(3);
    const char bad = 7;
    f.write(&bad, 1);
    f.close();
    CHECK_THROWS_AS(read_sample(d), FormatError);
  }
}

TEST_CASE("checkpoint round-trip and corruption") {
  Rng rng(11);
  std::map<std::string, Eigen::MatrixXd> tensors;
  Eigen::MatrixXd w(3, 4), b(1, 4);
  for (Eigen::Index i = 0; i < w.size(); ++i)
    w(i) = static_cast<float>(rng.normal());
  b.setZero();
  tensors["layer.weight"] = w;
  tensors["layer.bias"] = b;

  TempDir dir;
  const fs::path p = dir.path / "model.ckpt";
  save_checkpoint(p, tensors);

  SUBCASE("round-trip bit-exact") {
    const auto r = load_checkpoint(p);
    REQUIRE(r.size() == 2);
    CHECK(r.at("layer.weight") == w);
    CHECK(r.at("layer.bias") == b);
  }
  SUBCASE("bad magic") {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
    f.close();
    try {
      load_checkpoint(p);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.offset == 0);
    }
  }
  SUBCASE("truncated payload") {
    const auto full = fs::file_size(p);
    fs::resize_file(p, full - 3);
    CHECK_THROWS_AS(load_checkpoint(p), FormatError);
  }
}

TEST_CASE("split file round-trip") {
  TempDir dir;
  const std::vector<std::string> dirs = {"samples/a", "samples/b"};
  write_split_file(dir.path / "train.txt", dirs);
  CHECK(read_split_file(dir.path / "train.txt") == dirs);
  CHECK_THROWS_AS(read_split_file(dir.path / "missing.txt"), FormatError);
}

TEST_CASE("camera and mesh readers") {
  TempDir dir;
  SUBCASE("camera manifest") {
    std::ofstream os(dir.path / "cam.txt");
    os << "extrinsic=1 0 0 0 0 1 0 0 0 0 1 0 0 0 0 1\n"
       << "fx=100\nfy=100\ncx=320\ncy=240\nwidth=640\nheight=480\n";
    os.close();
    const CameraModel cam = read_camera_file(dir.path / "cam.txt");
    CHECK(cam.fx == 100.0);
    CHECK(cam.width == 640.0);
    CHECK(cam.extrinsic == Eigen::Matrix4d::Identity());
    std::ofstream bad(dir.path / "bad.txt");
    bad << "fx=100\n";  // missing keys
    bad.close();
    CHECK_THROWS_AS(read_camera_file(dir.path / "bad.txt"), FormatError);
  }
  SUBCASE("triangle mesh") {
    std::ofstream os(dir.path / "mesh.txt");
    os << "0 0 0 1 0 0 0 1 0\n0 0 1 1 0 1 0 1 1\n";
    os.close();
    const auto tris = read_triangle_mesh(dir.path / "mesh.txt");
    REQUIRE(tris.size() == 2);
    CHECK(tris[0](1, 0) == 1.0);
    std::ofstream bad(dir.path / "badmesh.txt");
    bad << "0 0 0 1 0\n";
    bad.close();
    CHECK_THROWS_AS(read_triangle_mesh(dir.path / "badmesh.txt"), FormatError);
  }
}

TEST_CASE("heatmap f32 round-trip") {
  TempDir dir;
  Eigen::VectorXd v(5);
  v << 1.5, -2.25, 0.0, 100.0, 0.125;  // all f32-exact
  write_heatmap_f32(dir.path / "h.f32", v);
  CHECK(read_heatmap_f32(dir.path / "h.f32") == v);
}

TEST_CASE("finalize_sample produces a valid aligned sample") {
  const double rate = 30.0;
  Session s = linear_session(3.0, rate, Eigen::Vector3d(0.6, 0.1, 1.0));
  auto raws = extract_windows(s, 500, 15, rate);
  REQUIRE(raws.size() == 1);
  raws[0].scene_id = s.scene_id;
  raws[0].sample_id = "u0";
  const Sample out = finalize_sample(raws[0], 128, GtConfig{}, 55);
  CHECK(out.cloud.count() == 128);
  CHECK(out.window.num_frames() == 15);
  CHECK_NOTHROW(out.window.validate());
  CHECK(out.gt.heatmap.size() == 128);
  // Aligned: last head at horizontal origin facing +x.
  CHECK(std::abs(out.window.positions(14, 0)) < 1e-6);
  CHECK(std::abs(out.window.positions(14, 1)) < 1e-6);
  CHECK(out.window.head_orientations(14, 1) == doctest::Approx(0.0).epsilon(1e-6));
  // Deterministic.
  const Sample again = finalize_sample(raws[0], 128, GtConfig{}, 55);
  CHECK(again.cloud.points == out.cloud.points);
  CHECK(again.gt.heatmap == out.gt.heatmap);
}
