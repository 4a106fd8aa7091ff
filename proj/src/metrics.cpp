#include "i3d/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace i3d {

namespace {

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

// Mid-ranks (1-based, average over ties).
VectorXd midranks(const VectorXd& v) {
  const Eigen::Index n = v.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return v(a) < v(b); });
  VectorXd ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && v(order[j + 1]) == v(order[i])) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) ranks(order[k]) = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double sim(const VectorXd& pred_logits, const VectorXd& gt_heatmap) {
  if (pred_logits.size() != gt_heatmap.size())
    throw ArgumentError("sim: length mismatch");
  const double gsum = gt_heatmap.sum();
  if (gsum <= 0.0) throw DegenerateInputError("sim: ground truth sums to zero");
  VectorXd p = pred_logits.unaryExpr(&sigmoid);
  p /= p.sum();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    acc += std::min(p(i), gt_heatmap(i) / gsum);
  return acc;
}

double auc(const VectorXd& pred_logits, const BinaryIntentionMask& mask) {
  mask.validate();
  if (pred_logits.size() != mask.count()) throw ArgumentError("auc: length mismatch");
  const Eigen::Index n = mask.count();
  const Eigen::Index pos = mask.labels.sum();
  const Eigen::Index neg = n - pos;
  if (pos == 0 || neg == 0)
    throw DegenerateInputError("auc: needs both classes present");
  // Mann-Whitney from mid-ranks: U = R_pos - pos(pos+1)/2.
  const VectorXd ranks = midranks(pred_logits);
  double rpos = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (mask.labels(i) == 1) rpos += ranks(i);
  const double u = rpos - 0.5 * static_cast<double>(pos) * (pos + 1.0);
  return 100.0 * u / (static_cast<double>(pos) * static_cast<double>(neg));
}

std::vector<double> default_miou_thresholds() {
  return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
}

double miou(const VectorXd& pred_logits, const BinaryIntentionMask& mask,
            const std::vector<double>& thresholds) {
  mask.validate();
  if (pred_logits.size() != mask.count()) throw ArgumentError("miou: length mismatch");
  if (thresholds.empty()) throw ArgumentError("miou: empty threshold list");
  for (double t : thresholds)
    if (t <= 0.0 || t >= 1.0) throw ArgumentError("miou: thresholds must be in (0,1)");
  double acc = 0.0;
  for (double t : thresholds) {
    Eigen::Index inter = 0, uni = 0;
    for (Eigen::Index i = 0; i < pred_logits.size(); ++i) {
      const bool p = sigmoid(pred_logits(i)) >= t;
      const bool y = mask.labels(i) == 1;
      inter += (p && y);
      uni += (p || y);
    }
    acc += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  }
  return 100.0 * acc / static_cast<double>(thresholds.size());
}

double dice_score(const VectorXd& pred_logits, const BinaryIntentionMask& mask,
                  double tau) {
  mask.validate();
  if (pred_logits.size() != mask.count())
    throw ArgumentError("dice_score: length mismatch");
  if (tau <= 0.0 || tau >= 1.0) throw ArgumentError("dice_score: tau must be in (0,1)");
  Eigen::Index inter = 0, px = 0;
  for (Eigen::Index i = 0; i < pred_logits.size(); ++i) {
    const bool p = sigmoid(pred_logits(i)) >= tau;
    px += p;
    inter += (p && mask.labels(i) == 1);
  }
  const Eigen::Index py = mask.labels.sum();
  if (px + py == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(px + py);
}

double srcc(const VectorXd& a, const VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2) throw ArgumentError("srcc: bad lengths");
  if ((a.array() == a(0)).all() || (b.array() == b(0)).all())
    throw DegenerateInputError("srcc: constant input vector");
  const VectorXd ra = midranks(a);
  const VectorXd rb = midranks(b);
  const VectorXd da = ra.array() - ra.mean();
  const VectorXd db = rb.array() - rb.mean();
  return da.dot(db) / std::sqrt(da.squaredNorm() * db.squaredNorm());
}

std::vector<double> attention_intention_srcc(const MatrixXd& weights,
                                             const VectorXd& gt_heatmap) {
  if (weights.rows() != gt_heatmap.size())
    throw ArgumentError("attention_intention_srcc: shape mismatch");
  std::vector<double> out(weights.cols());
  for (Eigen::Index j = 0; j < weights.cols(); ++j) {
    try {
      out[j] = srcc(weights.col(j), gt_heatmap);
    } catch (const DegenerateInputError&) {
      out[j] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

std::string EvalReport::to_tsv() const {
  std::ostringstream os;
  os << "method\thorizon_ms\tsim\tauc\tmiou\tdice\n";
  auto cell = [&](const std::optional<double>& v) {
    if (v)
      os << *v;
    else
      os << "-";
  };
  for (const auto& [key, row] : rows) {
    os << key.first << '\t';
    if (key.second < 0)
      os << "avg";
    else
      os << key.second;
    os << '\t';
    cell(row.sim);
    os << '\t';
    cell(row.auc);
    os << '\t';
    cell(row.miou);
    os << '\t';
    cell(row.dice);
    os << '\n';
  }
  for (const auto& [method, v] : attention_srcc) {
    os << "srcc\t" << method;
    for (double x : v) os << '\t' << x;
    os << '\n';
  }
  return os.str();
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  auto cell = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  for (const auto& [key, row] : rows) {
    nlohmann::json r;
    r["method"] = key.first;
    r["horizon_ms"] = key.second;
    r["sim"] = cell(row.sim);
    r["auc"] = cell(row.auc);
    r["miou"] = cell(row.miou);
    r["dice"] = cell(row.dice);
    j["rows"].push_back(r);
  }
  for (const auto& [method, v] : attention_srcc) {
    nlohmann::json arr = nlohmann::json::array();
    for (double x : v)
      arr.push_back(std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x));
    j["attention_srcc"][method] = arr;
  }
  return j.dump(2);
}

}  // namespace i3d
