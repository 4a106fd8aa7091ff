#include "i3d/autodiff.hpp"

#include <cmath>
#include <utility>

namespace i3d::ad {

Tape::Id Tape::push(MatrixXd value, bool requires_grad,
                    std::function<void(Tape&, Id)> back) {
  nodes_.push_back(Node{std::move(value), MatrixXd(), std::move(back), requires_grad});
  return static_cast<Id>(nodes_.size() - 1);
}

void Tape::accumulate(Id id, const MatrixXd& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) n.grad = MatrixXd::Zero(n.value.rows(), n.value.cols());
  n.grad += g;
}

Tape::Id Tape::constant(MatrixXd value) { return push(std::move(value), false, {}); }

Tape::Id Tape::param(MatrixXd value) { return push(std::move(value), true, {}); }

Tape::Id Tape::matmul(Id a, Id b) {
  MatrixXd y = nodes_[a].value * nodes_[b].value;
  bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  return push(std::move(y), rg, [a, b](Tape& t, Id self) {
    const MatrixXd& g = t.nodes_[self].grad;
    t.accumulate(a, g * t.nodes_[b].value.transpose());
    t.accumulate(b, t.nodes_[a].value.transpose() * g);
  });
}

Tape::Id Tape::const_premul(const MatrixXd& c, Id x) {
  MatrixXd y = c * nodes_[x].value;
  return push(std::move(y), nodes_[x].requires_grad, [c, x](Tape& t, Id self) {
    t.accumulate(x, c.transpose() * t.nodes_[self].grad);
  });
}

Tape::Id Tape::add(Id a, Id b) {
  MatrixXd y = nodes_[a].value + nodes_[b].value;
  bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  return push(std::move(y), rg, [a, b](Tape& t, Id self) {
    t.accumulate(a, t.nodes_[self].grad);
    t.accumulate(b, t.nodes_[self].grad);
  });
}

Tape::Id Tape::sub(Id a, Id b) {
  MatrixXd y = nodes_[a].value - nodes_[b].value;
  bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  return push(std::move(y), rg, [a, b](Tape& t, Id self) {
    t.accumulate(a, t.nodes_[self].grad);
    t.accumulate(b, -t.nodes_[self].grad);
  });
}

Tape::Id Tape::scale(Id a, double s) {
  MatrixXd y = s * nodes_[a].value;
  return push(std::move(y), nodes_[a].requires_grad, [a, s](Tape& t, Id self) {
    t.accumulate(a, s * t.nodes_[self].grad);
  });
}

Tape::Id Tape::cwise_mul(Id a, Id b) {
  MatrixXd y = nodes_[a].value.cwiseProduct(nodes_[b].value);
  bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  return push(std::move(y), rg, [a, b](Tape& t, Id self) {
    const MatrixXd& g = t.nodes_[self].grad;
    t.accumulate(a, g.cwiseProduct(t.nodes_[b].value));
    t.accumulate(b, g.cwiseProduct(t.nodes_[a].value));
  });
}

Tape::Id Tape::cwise_mul_const(Id a, const MatrixXd& c) {
  MatrixXd y = nodes_[a].value.cwiseProduct(c);
  return push(std::move(y), nodes_[a].requires_grad, [a, c](Tape& t, Id self) {
    t.accumulate(a, t.nodes_[self].grad.cwiseProduct(c));
  });
}

Tape::Id Tape::add_row_broadcast(Id x, Id row_bias) {
  MatrixXd y = nodes_[x].value.rowwise() +
               Eigen::RowVectorXd(nodes_[row_bias].value.row(0));
  bool rg = nodes_[x].requires_grad || nodes_[row_bias].requires_grad;
  return push(std::move(y), rg, [x, row_bias](Tape& t, Id self) {
    const MatrixXd& g = t.nodes_[self].grad;
    t.accumulate(x, g);
    t.accumulate(row_bias, g.colwise().sum());
  });
}

Tape::Id Tape::relu(Id x) {
  MatrixXd y = nodes_[x].value.cwiseMax(0.0);
  return push(std::move(y), nodes_[x].requires_grad, [x](Tape& t, Id self) {
    MatrixXd mask =
        (t.nodes_[x].value.array() > 0.0).cast<double>().matrix();
    t.accumulate(x, t.nodes_[self].grad.cwiseProduct(mask));
  });
}

Tape::Id Tape::elu_plus_one(Id x) {
  MatrixXd y = nodes_[x].value.unaryExpr(
      [](double v) { return v > 0.0 ? v + 1.0 : std::exp(v); });
  return push(std::move(y), nodes_[x].requires_grad, [x](Tape& t, Id self) {
    MatrixXd d = t.nodes_[x].value.unaryExpr(
        [](double v) { return v > 0.0 ? 1.0 : std::exp(v); });
    t.accumulate(x, t.nodes_[self].grad.cwiseProduct(d));
  });
}

namespace {
double stable_sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}
double stable_softplus(double v) {
  return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
}
}  // namespace

Tape::Id Tape::sigmoid(Id x) {
  MatrixXd y = nodes_[x].value.unaryExpr(&stable_sigmoid);
  return push(std::move(y), nodes_[x].requires_grad, [x](Tape& t, Id self) {
    const MatrixXd& y = t.nodes_[self].value;
    MatrixXd d = y.cwiseProduct((1.0 - y.array()).matrix());
    t.accumulate(x, t.nodes_[self].grad.cwiseProduct(d));
  });
}

Tape::Id Tape::softplus(Id x) {
  MatrixXd y = nodes_[x].value.unaryExpr(&stable_softplus);
  return push(std::move(y), nodes_[x].requires_grad, [x](Tape& t, Id self) {
    MatrixXd d = t.nodes_[x].value.unaryExpr(&stable_sigmoid);
    t.accumulate(x, t.nodes_[self].grad.cwiseProduct(d));
  });
}

Tape::Id Tape::pow_const(Id x, double exponent) {
  if (exponent == 0.0)
    return push(MatrixXd::Ones(nodes_[x].value.rows(), nodes_[x].value.cols()),
                false, {});
  MatrixXd y = nodes_[x].value.array().pow(exponent).matrix();
  return push(std::move(y), nodes_[x].requires_grad, [x, exponent](Tape& t, Id self) {
    MatrixXd d =
        exponent * t.nodes_[x].value.array().pow(exponent - 1.0).matrix();
    t.accumulate(x, t.nodes_[self].grad.cwiseProduct(d));
  });
}

Tape::Id Tape::concat_cols(Id a, Id b) {
  const MatrixXd& va = nodes_[a].value;
  const MatrixXd& vb = nodes_[b].value;
  MatrixXd y(va.rows(), va.cols() + vb.cols());
  y << va, vb;
  bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  const Eigen::Index ca = va.cols();
  return push(std::move(y), rg, [a, b, ca](Tape& t, Id self) {
    const MatrixXd& g = t.nodes_[self].grad;
    t.accumulate(a, g.leftCols(ca));
    t.accumulate(b, g.rightCols(g.cols() - ca));
  });
}

Tape::Id Tape::concat_rows(Id a, Id b) {
  const MatrixXd& va = nodes_[a].value;
  const MatrixXd& vb = nodes_[b].value;
  MatrixXd y(va.rows() + vb.rows(), va.cols());
  y << va, vb;
  bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  const Eigen::Index ra = va.rows();
  return push(std::move(y), rg, [a, b, ra](Tape& t, Id self) {
    const MatrixXd& g = t.nodes_[self].grad;
    t.accumulate(a, g.topRows(ra));
    t.accumulate(b, g.bottomRows(g.rows() - ra));
  });
}

Tape::Id Tape::gather_rows(Id x, std::vector<Eigen::Index> rows) {
  const MatrixXd& v = nodes_[x].value;
  MatrixXd y(static_cast<Eigen::Index>(rows.size()), v.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) y.row(i) = v.row(rows[i]);
  return push(std::move(y), nodes_[x].requires_grad,
              [x, rows = std::move(rows)](Tape& t, Id self) {
                const MatrixXd& g = t.nodes_[self].grad;
                MatrixXd gx = MatrixXd::Zero(t.nodes_[x].value.rows(),
                                             t.nodes_[x].value.cols());
                for (std::size_t i = 0; i < rows.size(); ++i)
                  gx.row(rows[i]) += g.row(i);
                t.accumulate(x, gx);
              });
}

Tape::Id Tape::segment_max(Id x, std::vector<Eigen::Index> offsets) {
  const MatrixXd& v = nodes_[x].value;
  const Eigen::Index groups = static_cast<Eigen::Index>(offsets.size()) - 1;
  MatrixXd y(groups, v.cols());
  // First-row-wins argmax keeps backward deterministic under duplicates.
  std::vector<Eigen::Index> argmax(groups * v.cols());
  for (Eigen::Index g = 0; g < groups; ++g) {
    const Eigen::Index lo = offsets[g], hi = offsets[g + 1];
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
      Eigen::Index best = lo;
      for (Eigen::Index r = lo + 1; r < hi; ++r)
        if (v(r, c) > v(best, c)) best = r;
      y(g, c) = v(best, c);
      argmax[g * v.cols() + c] = best;
    }
  }
  return push(std::move(y), nodes_[x].requires_grad,
              [x, argmax = std::move(argmax)](Tape& t, Id self) {
                const MatrixXd& g = t.nodes_[self].grad;
                MatrixXd gx = MatrixXd::Zero(t.nodes_[x].value.rows(),
                                             t.nodes_[x].value.cols());
                for (Eigen::Index gi = 0; gi < g.rows(); ++gi)
                  for (Eigen::Index c = 0; c < g.cols(); ++c)
                    gx(argmax[gi * g.cols() + c], c) += g(gi, c);
                t.accumulate(x, gx);
              });
}

Tape::Id Tape::broadcast_row(Id x, Eigen::Index n) {
  MatrixXd y = nodes_[x].value.replicate(n, 1);
  return push(std::move(y), nodes_[x].requires_grad, [x](Tape& t, Id self) {
    t.accumulate(x, t.nodes_[self].grad.colwise().sum());
  });
}

Tape::Id Tape::temporal_mix(Id u, Id x, Eigen::Index j) {
  const MatrixXd& um = nodes_[u].value;
  const MatrixXd& xm = nodes_[x].value;
  const Eigen::Index tt = um.rows();
  MatrixXd y = MatrixXd::Zero(xm.rows(), xm.cols());
  for (Eigen::Index a = 0; a < tt; ++a)
    for (Eigen::Index b = 0; b < tt; ++b)
      if (um(a, b) != 0.0) y.middleRows(a * j, j) += um(a, b) * xm.middleRows(b * j, j);
  bool rg = nodes_[u].requires_grad || nodes_[x].requires_grad;
  return push(std::move(y), rg, [u, x, j, tt](Tape& t, Id self) {
    const MatrixXd& g = t.nodes_[self].grad;
    const MatrixXd& um = t.nodes_[u].value;
    const MatrixXd& xm = t.nodes_[x].value;
    MatrixXd gx = MatrixXd::Zero(xm.rows(), xm.cols());
    MatrixXd gu = MatrixXd::Zero(tt, tt);
    for (Eigen::Index a = 0; a < tt; ++a)
      for (Eigen::Index b = 0; b < tt; ++b) {
        gx.middleRows(b * j, j) += um(a, b) * g.middleRows(a * j, j);
        gu(a, b) = g.middleRows(a * j, j)
                       .cwiseProduct(xm.middleRows(b * j, j))
                       .sum();
      }
    t.accumulate(x, gx);
    t.accumulate(u, gu);
  });
}

Tape::Id Tape::transpose(Id x) {
  MatrixXd y = nodes_[x].value.transpose();
  return push(std::move(y), nodes_[x].requires_grad, [x](Tape& t, Id self) {
    t.accumulate(x, t.nodes_[self].grad.transpose());
  });
}

Tape::Id Tape::colwise_sum(Id x) {
  MatrixXd y = nodes_[x].value.colwise().sum();
  return push(std::move(y), nodes_[x].requires_grad, [x](Tape& t, Id self) {
    const MatrixXd& g = t.nodes_[self].grad;  // 1 x D
    t.accumulate(x, g.replicate(t.nodes_[x].value.rows(), 1));
  });
}

Tape::Id Tape::rowwise_sum(Id x) {
  MatrixXd y = nodes_[x].value.rowwise().sum();
  return push(std::move(y), nodes_[x].requires_grad, [x](Tape& t, Id self) {
    const MatrixXd& g = t.nodes_[self].grad;  // N x 1
    t.accumulate(x, g.replicate(1, t.nodes_[x].value.cols()));
  });
}

Tape::Id Tape::row_div_eps(Id x, Id d, double eps) {
  const MatrixXd& xv = nodes_[x].value;
  const MatrixXd& dv = nodes_[d].value;  // N x 1
  MatrixXd y(xv.rows(), xv.cols());
  for (Eigen::Index i = 0; i < xv.rows(); ++i) y.row(i) = xv.row(i) / (dv(i, 0) + eps);
  bool rg = nodes_[x].requires_grad || nodes_[d].requires_grad;
  return push(std::move(y), rg, [x, d, eps](Tape& t, Id self) {
    const MatrixXd& g = t.nodes_[self].grad;
    const MatrixXd& xv = t.nodes_[x].value;
    const MatrixXd& dv = t.nodes_[d].value;
    MatrixXd gx(xv.rows(), xv.cols());
    MatrixXd gd(dv.rows(), 1);
    for (Eigen::Index i = 0; i < xv.rows(); ++i) {
      const double den = dv(i, 0) + eps;
      gx.row(i) = g.row(i) / den;
      gd(i, 0) = -g.row(i).dot(xv.row(i)) / (den * den);
    }
    t.accumulate(x, gx);
    t.accumulate(d, gd);
  });
}

Tape::Id Tape::sum_all(Id x) {
  MatrixXd y(1, 1);
  y(0, 0) = nodes_[x].value.sum();
  return push(std::move(y), nodes_[x].requires_grad, [x](Tape& t, Id self) {
    const double g = t.nodes_[self].grad(0, 0);
    t.accumulate(x, MatrixXd::Constant(t.nodes_[x].value.rows(),
                                       t.nodes_[x].value.cols(), g));
  });
}

Tape::Id Tape::mean_all(Id x) {
  return scale(sum_all(x), 1.0 / static_cast<double>(nodes_[x].value.size()));
}

Tape::Id Tape::div_scalar(Id a, Id b) {
  MatrixXd y(1, 1);
  y(0, 0) = nodes_[a].value(0, 0) / nodes_[b].value(0, 0);
  bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  return push(std::move(y), rg, [a, b](Tape& t, Id self) {
    const double g = t.nodes_[self].grad(0, 0);
    const double av = t.nodes_[a].value(0, 0);
    const double bv = t.nodes_[b].value(0, 0);
    MatrixXd ga(1, 1), gb(1, 1);
    ga(0, 0) = g / bv;
    gb(0, 0) = -g * av / (bv * bv);
    t.accumulate(a, ga);
    t.accumulate(b, gb);
  });
}

Tape::Id Tape::add_const(Id x, double c) {
  MatrixXd y = nodes_[x].value.array() + c;
  return push(std::move(y), nodes_[x].requires_grad, [x](Tape& t, Id self) {
    t.accumulate(x, t.nodes_[self].grad);
  });
}

void Tape::backward(Id scalar_root) {
  Node& root = nodes_[scalar_root];
  if (root.value.rows() != 1 || root.value.cols() != 1)
    throw ArgumentError("backward: root must be a scalar node");
  root.grad = MatrixXd::Ones(1, 1);
  for (Id i = scalar_root; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.back && n.requires_grad && n.grad.size() != 0) n.back(*this, i);
  }
}

}  // namespace i3d::ad
