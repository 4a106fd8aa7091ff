#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "i3d/autodiff.hpp"

using i3d::Rng;
using i3d::ad::Tape;
using testutil::central_diff;
using testutil::rel_err;
using Eigen::MatrixXd;

namespace {

// Finite-difference check: builds a scalar graph from a single parameter
// matrix via `build`, and compares the tape gradient entry-by-entry.
void fd_check(MatrixXd p, const std::function<Tape::Id(Tape&, Tape::Id)>& build,
              double tol = 1e-6) {
  Tape tape;
  const Tape::Id pid = tape.param(p);
  const Tape::Id root = build(tape, pid);
  REQUIRE(tape.value(root).size() == 1);
  tape.backward(root);
  const MatrixXd analytic = tape.grad(pid);
  REQUIRE(analytic.rows() == p.rows());
  REQUIRE(analytic.cols() == p.cols());

  auto eval = [&]() {
    Tape t2;
    return t2.value(build(t2, t2.param(p)))(0, 0);
  };
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double numeric = central_diff(p, i, j, 1e-5, eval);
      CHECK(rel_err(analytic(i, j), numeric) < tol);
    }
}

MatrixXd random_mat(Eigen::Index r, Eigen::Index c, Rng& rng) {
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("matmul / add / sub / scale gradients") {
  Rng rng(1);
  const MatrixXd b = random_mat(4, 3, rng);
  fd_check(random_mat(2, 4, rng), [&](Tape& t, Tape::Id p) {
    return t.sum_all(t.scale(t.matmul(p, t.constant(b)), 0.3));
  });
  fd_check(random_mat(3, 3, rng), [&](Tape& t, Tape::Id p) {
    return t.sum_all(t.sub(t.add(p, p), t.constant(MatrixXd::Ones(3, 3))));
  });
}

TEST_CASE("const_premul and cwise ops") {
  Rng rng(2);
  const MatrixXd c = random_mat(5, 4, rng);
  fd_check(random_mat(4, 2, rng), [&](Tape& t, Tape::Id p) {
    return t.mean_all(t.const_premul(c, p));
  });
  fd_check(random_mat(3, 4, rng), [&](Tape& t, Tape::Id p) {
    return t.sum_all(t.cwise_mul(p, t.sigmoid(p)));
  });
  const MatrixXd mask = random_mat(3, 4, rng);
  fd_check(random_mat(3, 4, rng), [&](Tape& t, Tape::Id p) {
    return t.sum_all(t.cwise_mul_const(p, mask));
  });
}

TEST_CASE("nonlinearity gradients") {
  Rng rng(3);
  // Keep relu inputs away from the kink.
  MatrixXd away = random_mat(4, 4, rng);
  for (Eigen::Index i = 0; i < away.size(); ++i)
    if (std::abs(away(i)) < 0.05) away(i) = 0.2;
  fd_check(away, [](Tape& t, Tape::Id p) { return t.sum_all(t.relu(p)); });
  fd_check(random_mat(4, 4, rng),
           [](Tape& t, Tape::Id p) { return t.sum_all(t.elu_plus_one(p)); });
  fd_check(random_mat(4, 4, rng),
           [](Tape& t, Tape::Id p) { return t.sum_all(t.sigmoid(p)); });
  fd_check(random_mat(4, 4, rng),
           [](Tape& t, Tape::Id p) { return t.sum_all(t.softplus(p)); });
  MatrixXd pos = random_mat(3, 3, rng).cwiseAbs().array() + 0.5;
  fd_check(pos, [](Tape& t, Tape::Id p) { return t.sum_all(t.pow_const(p, 1.7)); });
}

TEST_CASE("softplus and sigmoid are stable at extreme logits") {
  Tape t;
  MatrixXd x(1, 2);
  x << 500.0, -500.0;
  const MatrixXd sp = t.value(t.softplus(t.constant(x)));
  CHECK(sp(0, 0) == doctest::Approx(500.0));
  CHECK(sp(0, 1) == doctest::Approx(0.0));
  CHECK(std::isfinite(sp(0, 1)));
  const MatrixXd sg = t.value(t.sigmoid(t.constant(x)));
  CHECK(sg(0, 0) == doctest::Approx(1.0));
  CHECK(sg(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("structural op gradients") {
  Rng rng(4);
  const MatrixXd other = random_mat(3, 2, rng);
  fd_check(random_mat(3, 2, rng), [&](Tape& t, Tape::Id p) {
    return t.sum_all(t.cwise_mul(t.concat_cols(p, t.constant(other)),
                                 t.concat_cols(t.constant(other), p)));
  });
  fd_check(random_mat(2, 3, rng), [&](Tape& t, Tape::Id p) {
    const Tape::Id cat = t.concat_rows(p, t.scale(p, 2.0));
    return t.sum_all(t.sigmoid(cat));
  });
  fd_check(random_mat(4, 3, rng), [](Tape& t, Tape::Id p) {
    return t.sum_all(t.gather_rows(t.sigmoid(p), {3, 1, 1, 0}));
  });
  fd_check(random_mat(5, 2, rng), [](Tape& t, Tape::Id p) {
    return t.sum_all(t.broadcast_row(t.colwise_sum(p), 4));
  });
  fd_check(random_mat(4, 3, rng), [](Tape& t, Tape::Id p) {
    return t.sum_all(t.sigmoid(t.transpose(p)));
  });
  fd_check(random_mat(4, 1, rng), [](Tape& t, Tape::Id p) {
    return t.sum_all(t.cwise_mul(t.rowwise_sum(t.sigmoid(p)), p));
  });
}

TEST_CASE("segment_max gradient flows to the argmax only") {
  MatrixXd x(4, 2);
  x << 1, 5, 3, 2, 0, 0, 7, 1;
  Tape t;
  const Tape::Id p = t.param(x);
  const Tape::Id root = t.sum_all(t.segment_max(p, {0, 2, 4}));
  t.backward(root);
  MatrixXd expected(4, 2);
  expected << 0, 1, 1, 0, 0, 0, 1, 1;
  CHECK(t.grad(p) == expected);
}

TEST_CASE("add_row_broadcast bias gradient") {
  Rng rng(5);
  const MatrixXd x = random_mat(5, 3, rng);
  fd_check(random_mat(1, 3, rng), [&](Tape& t, Tape::Id p) {
    return t.sum_all(t.sigmoid(t.add_row_broadcast(t.constant(x), p)));
  });
}

TEST_CASE("temporal_mix matches kron formulation, gradients for both inputs") {
  Rng rng(6);
  const Eigen::Index tt = 4, j = 3, d = 2;
  const MatrixXd u = random_mat(tt, tt, rng);
  const MatrixXd x = random_mat(tt * j, d, rng);

  Tape t;
  const Tape::Id ux = t.temporal_mix(t.constant(u), t.constant(x), j);
  const MatrixXd direct = i3d::kron(u, MatrixXd::Identity(j, j)) * x;
  CHECK((t.value(ux) - direct).cwiseAbs().maxCoeff() < 1e-12);

  fd_check(u, [&](Tape& tp, Tape::Id p) {
    return tp.sum_all(tp.sigmoid(tp.temporal_mix(p, tp.constant(x), j)));
  });
  fd_check(x, [&](Tape& tp, Tape::Id p) {
    return tp.sum_all(tp.sigmoid(tp.temporal_mix(tp.constant(u), p, j)));
  });
}

TEST_CASE("row_div_eps and scalar arithmetic gradients") {
  Rng rng(7);
  MatrixXd denom = random_mat(4, 1, rng).cwiseAbs().array() + 0.5;
  const MatrixXd x = random_mat(4, 3, rng);
  fd_check(x, [&](Tape& t, Tape::Id p) {
    return t.sum_all(t.row_div_eps(p, t.constant(denom), 1e-6));
  });
  fd_check(denom, [&](Tape& t, Tape::Id p) {
    return t.sum_all(t.row_div_eps(t.constant(x), p, 1e-6));
  });
  fd_check(random_mat(1, 1, rng).cwiseAbs().array() + 1.0, [](Tape& t, Tape::Id p) {
    return t.div_scalar(t.add_const(t.sum_all(p), 2.0), p);
  });
}

TEST_CASE("constants receive no gradient") {
  Tape t;
  const Tape::Id c = t.constant(MatrixXd::Ones(2, 2));
  const Tape::Id p = t.param(MatrixXd::Ones(2, 2));
  t.backward(t.sum_all(t.cwise_mul(c, p)));
  CHECK(t.grad(c).size() == 0);
  CHECK(t.grad(p) == MatrixXd::Ones(2, 2));
}
