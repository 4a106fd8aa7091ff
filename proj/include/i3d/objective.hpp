#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <set>
#include <string>

#include "i3d/errors.hpp"

namespace i3d {

using Eigen::VectorXd;

// Length-N binary ground-truth labels.
struct BinaryIntentionMask {
  Eigen::VectorXi labels;  // entries exactly 0 or 1

  Eigen::Index count() const { return labels.size(); }
  void validate() const;
};

struct LossConfig {
  double alpha = 0.25;
  double gamma = 2.0;
  double epsilon = 1e-6;
  bool bce = true;
  bool focal = true;
  bool dice = true;
  // Class weight from the per-sample mask (default) or dataset-global
  // counts supplied by the caller.
  bool global_class_weight = false;
  double global_weight = 1.0;  // used when global_class_weight is set
};

struct LossBreakdown {
  double total = 0.0;
  double bce = 0.0;
  double focal = 0.0;
  double dice = 0.0;
};

// w = N_neg / N_pos over the mask.
double class_weight(const BinaryIntentionMask& mask);

// Mean over points of -[w y log(sigma(x)) + (1-y) log(1-sigma(x))],
// evaluated in logit form.
double weighted_bce(const VectorXd& logits, const BinaryIntentionMask& mask,
                    double w);

// Mean over points of -alpha (1-p_t)^gamma log(p_t).
double focal_loss(const VectorXd& logits, const BinaryIntentionMask& mask,
                  double alpha, double gamma);

// 1 - (2 sum(p y) + eps) / (sum(p) + sum(y) + eps) with p = sigma(x).
double dice_loss(const VectorXd& logits, const BinaryIntentionMask& mask,
                 double epsilon);

LossBreakdown total_loss(const VectorXd& logits, const BinaryIntentionMask& mask,
                         const LossConfig& config);

}  // namespace i3d
