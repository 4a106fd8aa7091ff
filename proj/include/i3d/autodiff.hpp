#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "i3d/errors.hpp"

namespace i3d::ad {

using Eigen::MatrixXd;

// Reverse-mode tape over dense Eigen matrices. Nodes are created in
// evaluation order; backward() replays them in reverse. Scalars are 1x1.
class Tape {
 public:
  using Id = int;

  Id constant(MatrixXd value);
  Id param(MatrixXd value);  // leaf that accumulates a gradient

  const MatrixXd& value(Id id) const { return nodes_[id].value; }
  const MatrixXd& grad(Id id) const { return nodes_[id].grad; }

  // --- linear algebra ---
  Id matmul(Id a, Id b);
  Id const_premul(const MatrixXd& c, Id x);  // c * x, c fixed
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id scale(Id a, double s);
  Id cwise_mul(Id a, Id b);
  Id cwise_mul_const(Id a, const MatrixXd& c);
  Id add_row_broadcast(Id x, Id row_bias);  // x.rowwise() + bias (1xD param)

  // --- nonlinearities ---
  Id relu(Id x);
  Id elu_plus_one(Id x);  // x>0 ? x+1 : exp(x)  (strictly positive)
  Id sigmoid(Id x);
  Id softplus(Id x);  // stable log(1+e^x)
  Id pow_const(Id x, double exponent);  // x must be positive where exponent<1

  // --- structure ---
  Id concat_cols(Id a, Id b);
  Id concat_rows(Id a, Id b);
  Id gather_rows(Id x, std::vector<Eigen::Index> rows);
  // Columnwise max over consecutive row segments; offsets has G+1 entries.
  Id segment_max(Id x, std::vector<Eigen::Index> offsets);
  Id broadcast_row(Id x, Eigen::Index n);  // replicate a 1xD row n times
  // y = (u kron I_j) * x where u is a learned TxT map and x is (T*j) x D.
  Id temporal_mix(Id u, Id x, Eigen::Index j);
  Id transpose(Id x);
  Id colwise_sum(Id x);            // 1 x D
  Id rowwise_sum(Id x);            // N x 1
  Id row_div_eps(Id x, Id d, double eps);  // x(i,:) / (d(i) + eps)

  // --- reductions / scalar arithmetic (1x1 nodes) ---
  Id sum_all(Id x);
  Id mean_all(Id x);
  Id div_scalar(Id a, Id b);
  Id add_const(Id x, double c);

  void backward(Id scalar_root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    MatrixXd value;
    MatrixXd grad;
    std::function<void(Tape&, Id)> back;  // empty for leaves/constants
    bool requires_grad = false;
  };

  Id push(MatrixXd value, bool requires_grad, std::function<void(Tape&, Id)> back);
  void accumulate(Id id, const MatrixXd& g);

  std::vector<Node> nodes_;
};

}  // namespace i3d::ad
