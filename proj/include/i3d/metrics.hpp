#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "i3d/objective.hpp"

namespace i3d {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Continuous Gaussian heatmap plus its thresholded binary mask.
struct GroundTruth {
  VectorXd heatmap;  // [0,1] per point
  BinaryIntentionMask mask;
};

struct MetricRow {
  std::optional<double> sim;   // [0,1]
  std::optional<double> auc;   // [0,100]
  std::optional<double> miou;  // [0,100]
  std::optional<double> dice;  // [0,1]
};

// Per (method, horizon_ms) metric table plus optional per-frame SRCC rows.
struct EvalReport {
  std::map<std::pair<std::string, int>, MetricRow> rows;
  std::map<std::string, std::vector<double>> attention_srcc;  // NaN = undefined

  std::string to_tsv() const;
  std::string to_json() const;
};

// Histogram intersection of the two sum-normalized distributions.
double sim(const VectorXd& pred_logits, const VectorXd& gt_heatmap);

// 100 x rank-based ROC AUC with the mid-rank tie convention.
double auc(const VectorXd& pred_logits, const BinaryIntentionMask& mask);

// 100 x mean over thresholds of binary IoU of {sigma(pred) >= tau'} vs mask.
double miou(const VectorXd& pred_logits, const BinaryIntentionMask& mask,
            const std::vector<double>& thresholds);

std::vector<double> default_miou_thresholds();  // {0.1, ..., 0.9}

// Dice of the binarized prediction; 1 when both sets are empty.
double dice_score(const VectorXd& pred_logits, const BinaryIntentionMask& mask,
                  double tau);

// Spearman rank correlation (Pearson of mid-ranks).
double srcc(const VectorXd& a, const VectorXd& b);

// Per motion frame j: srcc(weights column j, gt heatmap). Degenerate
// (constant) columns come back as NaN.
std::vector<double> attention_intention_srcc(const MatrixXd& weights,
                                             const VectorXd& gt_heatmap);

}  // namespace i3d
