#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "i3d/motionenc.hpp"

using namespace i3d;

namespace {

// Independent O(T^2) direct-summation oracle for the unnormalized DCT-II.
MatrixXd dct_oracle(const MatrixXd& z) {
  const Eigen::Index t = z.rows();
  MatrixXd out = MatrixXd::Zero(t, z.cols());
  for (Eigen::Index k = 0; k < t; ++k)
    for (Eigen::Index s = 0; s < t; ++s)
      out.row(k) += z.row(s) * std::cos(M_PI / t * (s + 0.5) * k);
  return out;
}

}  // namespace

TEST_CASE("finite_diff_velocity") {
  SUBCASE("hand example p=[0,1,3]") {
    MatrixXd p(3, 1);
    p << 0, 1, 3;
    const MatrixXd v = finite_diff_velocity(p, 1.0);
    CHECK(v(0, 0) == doctest::Approx(1.0));
    CHECK(v(1, 0) == doctest::Approx(1.0));
    CHECK(v(2, 0) == doctest::Approx(2.0));
  }
  SUBCASE("constant positions give zero velocity") {
    MatrixXd p = MatrixXd::Constant(5, 9, 3.7);
    CHECK(finite_diff_velocity(p, 0.1).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("doubling dt halves velocities") {
    Rng rng(1);
    MatrixXd p(6, 3);
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = rng.normal();
    const MatrixXd v1 = finite_diff_velocity(p, 1.0);
    const MatrixXd v2 = finite_diff_velocity(p, 2.0);
    CHECK((v1 - 2.0 * v2).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("re-integration reproduces positions") {
    Rng rng(2);
    MatrixXd p(10, 2);
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = rng.normal();
    const double dt = 1.0 / 30.0;
    const MatrixXd v = finite_diff_velocity(p, dt);
    MatrixXd rec = p;
    for (Eigen::Index t = 1; t < 10; ++t) rec.row(t) = rec.row(t - 1) + dt * v.row(t);
    CHECK((rec - p).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("single frame is an error") {
    MatrixXd p(1, 3);
    p << 0, 0, 0;
    CHECK_THROWS_AS(finite_diff_velocity(p, 1.0), ArgumentError);
    MatrixXd two(2, 3);
    two.setZero();
    CHECK_THROWS_AS(finite_diff_velocity(two, 0.0), ArgumentError);
  }
}

TEST_CASE("dct closed-form cases") {
  SUBCASE("constant column of ones, T=4") {
    const MatrixXd z = MatrixXd::Ones(4, 1);
    const MatrixXd c = dct(z).coeffs;
    CHECK(c(0, 0) == doctest::Approx(4.0).epsilon(1e-12));
    for (int k = 1; k < 4; ++k) CHECK(std::abs(c(k, 0)) < 1e-10);
  }
  SUBCASE("impulse z=[1,0,0,0]") {
    MatrixXd z = MatrixXd::Zero(4, 1);
    z(0, 0) = 1.0;
    const MatrixXd c = dct(z).coeffs;
    CHECK(c(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c(1, 0) == doctest::Approx(std::cos(M_PI / 8)).epsilon(1e-12));
    CHECK(c(2, 0) == doctest::Approx(std::cos(M_PI / 4)).epsilon(1e-12));
    CHECK(c(3, 0) == doctest::Approx(std::cos(3 * M_PI / 8)).epsilon(1e-12));
  }
}

TEST_CASE("dct linearity and direct-summation oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index t = 1 + rng.below(64);
    const Eigen::Index d = 1 + rng.below(8);
    MatrixXd z1(t, d), z2(t, d);
    for (Eigen::Index i = 0; i < z1.size(); ++i) {
      z1(i) = rng.normal();
      z2(i) = rng.normal();
    }
    CHECK((dct(z1).coeffs - dct_oracle(z1)).cwiseAbs().maxCoeff() < 1e-12);
    const MatrixXd lhs = dct(2.5 * z1 - 0.7 * z2).coeffs;
    const MatrixXd rhs = 2.5 * dct(z1).coeffs - 0.7 * dct(z2).coeffs;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("dct_matrix agrees with dct") {
  Rng rng(4);
  MatrixXd z(7, 3);
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  CHECK((dct_matrix(7) * z - dct(z).coeffs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("assemble_motion_array") {
  Rng rng(5);
  SparseMotionWindow w = testutil::random_window(6, rng);
  const MatrixXd m = assemble_motion_array(w);
  REQUIRE(m.rows() == 6);
  REQUIRE(m.cols() == 18);
  SUBCASE("slicing recovers positions and velocities exactly") {
    for (Eigen::Index f = 0; f < 6; ++f)
      for (Eigen::Index j = 0; j < 3; ++j) {
        CHECK(m.row(f).segment<3>(6 * j) == w.positions.row(f).segment<3>(3 * j));
        CHECK(m.row(f).segment<3>(6 * j + 3) == w.velocities.row(f).segment<3>(3 * j));
      }
  }
  SUBCASE("zero window gives zero array") {
    SparseMotionWindow z = w;
    z.positions.setZero();
    z.velocities.setZero();
    CHECK(assemble_motion_array(z).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("row shift moves rows identically") {
    SparseMotionWindow shifted = w;
    shifted.positions.topRows(5) = w.positions.bottomRows(5);
    shifted.velocities.topRows(5) = w.velocities.bottomRows(5);
    const MatrixXd ms = assemble_motion_array(shifted);
    CHECK((ms.topRows(5) - m.bottomRows(5)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("normalized_adjacency") {
  SUBCASE("single node") {
    const JointGraph g = normalized_adjacency(1);
    REQUIRE(g.adjacency.rows() == 1);
    CHECK(g.adjacency(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("two nodes: all entries one half") {
    const JointGraph g = normalized_adjacency(2);
    CHECK((g.adjacency.array() - 0.5).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("symmetry, row sums and spectral radius for 3 and 4 nodes") {
    for (Eigen::Index n : {3, 4}) {
      const JointGraph g = normalized_adjacency(n);
      CHECK((g.adjacency - g.adjacency.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      const Eigen::VectorXd rs = g.adjacency.rowwise().sum();
      CHECK((rs.array() - rs(0)).abs().maxCoeff() < 1e-12);
      const Eigen::VectorXd ev =
          Eigen::SelfAdjointEigenSolver<MatrixXd>(g.adjacency).eigenvalues();
      CHECK(ev.cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("kron lifts per-joint maps") {
  MatrixXd a(2, 2), b(2, 2);
  a << 1, 2, 3, 4;
  b << 0, 1, 1, 0;
  const MatrixXd k = kron(a, b);
  REQUIRE(k.rows() == 4);
  CHECK(k(0, 1) == 1.0);
  CHECK(k(0, 3) == 2.0);
  CHECK(k(2, 1) == 3.0);
  CHECK(k(3, 2) == 4.0);
}

TEST_CASE("SparseMotionWindow validation") {
  Rng rng(6);
  SparseMotionWindow w = testutil::random_window(5, rng);
  CHECK_NOTHROW(w.validate());
  SparseMotionWindow bad = w;
  bad.head_orientations(2, 0) *= 3.0;  // non-unit row
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  SparseMotionWindow shorty = w;
  shorty.positions = w.positions.topRows(1);
  shorty.velocities = w.velocities.topRows(1);
  shorty.head_orientations = w.head_orientations.topRows(1);
  CHECK_THROWS_AS(shorty.validate(), ArgumentError);
}
