#include "i3d/objective.hpp"

#include <cmath>

namespace i3d {

namespace {

double softplus(double v) {
  return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
}

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

void check_pair(const VectorXd& logits, const BinaryIntentionMask& mask) {
  mask.validate();
  if (logits.size() != mask.count())
    throw ArgumentError("loss: logits/mask length mismatch");
  if (!logits.allFinite()) throw NumericError("loss: non-finite logits");
}

}  // namespace

void BinaryIntentionMask::validate() const {
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels(i) != 0 && labels(i) != 1)
      throw ArgumentError("mask labels must be 0 or 1");
}

double class_weight(const BinaryIntentionMask& mask) {
  mask.validate();
  const Eigen::Index pos = mask.labels.sum();
  if (pos == 0)
    throw DegenerateInputError("class_weight: mask has no positive labels");
  return static_cast<double>(mask.count() - pos) / static_cast<double>(pos);
}

double weighted_bce(const VectorXd& logits, const BinaryIntentionMask& mask,
                    double w) {
  check_pair(logits, mask);
  if (w <= 0) throw ArgumentError("weighted_bce: weight must be positive");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double x = logits(i);
    // -log sigma(x) = softplus(-x);  -log(1 - sigma(x)) = softplus(x)
    acc += mask.labels(i) == 1 ? w * softplus(-x) : softplus(x);
  }
  return acc / static_cast<double>(logits.size());
}

double focal_loss(const VectorXd& logits, const BinaryIntentionMask& mask,
                  double alpha, double gamma) {
  check_pair(logits, mask);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    // s = logit of the true class: p_t = sigma(s)
    const double s = mask.labels(i) == 1 ? logits(i) : -logits(i);
    acc += alpha * std::pow(sigmoid(-s), gamma) * softplus(-s);
  }
  return acc / static_cast<double>(logits.size());
}

double dice_loss(const VectorXd& logits, const BinaryIntentionMask& mask,
                 double epsilon) {
  check_pair(logits, mask);
  double inter = 0.0, psum = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double p = sigmoid(logits(i));
    psum += p;
    if (mask.labels(i) == 1) inter += p;
  }
  const double ysum = static_cast<double>(mask.labels.sum());
  return 1.0 - (2.0 * inter + epsilon) / (psum + ysum + epsilon);
}

LossBreakdown total_loss(const VectorXd& logits, const BinaryIntentionMask& mask,
                         const LossConfig& config) {
  if (!config.bce && !config.focal && !config.dice)
    throw ArgumentError("total_loss: no loss terms enabled");
  LossBreakdown out;
  if (config.bce) {
    const double w =
        config.global_class_weight ? config.global_weight : class_weight(mask);
    out.bce = weighted_bce(logits, mask, w);
  }
  if (config.focal) out.focal = focal_loss(logits, mask, config.alpha, config.gamma);
  if (config.dice) out.dice = dice_loss(logits, mask, config.epsilon);
  out.total = out.bce + out.focal + out.dice;
  return out;
}

}  // namespace i3d
