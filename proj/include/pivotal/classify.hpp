#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pivotal/cohort.hpp"
#include "pivotal/diffgraph.hpp"

namespace pivotal {

struct FeatureMatrix {
  Eigen::MatrixXd rows;
  std::vector<Group> labels;
  std::vector<std::string> patient_ids;
  std::vector<std::string> feature_names;  // "(region_j, region_k)"
};

// Row v = upper triangle (j <= k, lexicographic over `nodes`) of patient v's
// matrix. `nodes` are row positions in the graphs; `region_names` is indexed
// by original region index.
FeatureMatrix vectorize(std::span<const DifferentialGraph> graphs, std::span<const std::size_t> nodes,
                        std::span<const std::string> region_names, bool include_diagonal = true);

struct Split {
  std::vector<std::size_t> train;  // ascending row indices
  std::vector<std::size_t> test;
};

// Per class, floor(train_fraction * n) rows (clamped to [1, n-1]) go to train,
// chosen by a seeded permutation.
Split stratified_split(std::span<const Group> labels, double train_fraction, std::uint64_t seed);

struct TrainParams {
  double l2 = 1.0;
  double step = 0.1;
  int max_iter = 2000;
};

// Multinomial logistic regression over the fixed class order (AD, CN, MCI).
struct LinearModel {
  Eigen::MatrixXd weights;  // classes x (kept features + 1); bias is the last column
  Eigen::VectorXd mean;     // over kept features, from training rows
  Eigen::VectorXd scale;
  std::vector<std::size_t> kept_columns;
  std::size_t input_columns = 0;
  TrainParams params;
  std::vector<double> loss_trace;  // accepted steps
  double final_loss = 0.0;
  std::vector<std::string> warnings;
};

// Standardized design matrix with a trailing column of ones.
Eigen::MatrixXd design_matrix(const LinearModel& model, const Eigen::MatrixXd& x);

// [sum_i -log p_i(y_i) + (l2/2) |W without bias|^2] / n. Fills `grad` when non-null.
double softmax_loss(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& design, std::span<const Group> labels,
                    double l2, Eigen::MatrixXd* grad);

LinearModel train(const Eigen::MatrixXd& x, std::span<const Group> labels, const TrainParams& params = {});

Eigen::MatrixXd predict_proba(const LinearModel& model, const Eigen::MatrixXd& x);

struct RocCurve {
  // Points sorted by descending threshold; the first point is (0,0) at +inf.
  std::vector<double> thresholds;
  std::vector<double> fpr;
  std::vector<double> tpr;
};

// `labels` are 1 for positive, 0 for negative.
RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels);

double auc(const RocCurve& curve);

struct YoudenPoint {
  double threshold = 0.0;
  double j = 0.0;
};

// Maximizes TPR - FPR; ties resolve to the lowest threshold.
YoudenPoint youden_cutoff(const RocCurve& curve);

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

Confusion confusion_at(std::span<const double> scores, std::span<const int> labels, double threshold);

struct ClassEval {
  Group group = Group::AD;
  RocCurve roc;
  double auc = 0.0;
  YoudenPoint youden;
  Confusion confusion;
};

struct EvalReport {
  std::array<ClassEval, kGroupCount> per_class;
  RocCurve micro_roc;
  double micro_auc = 0.0;
  double macro_auc = 0.0;
  std::uint64_t split_seed = 0;
};

// One-vs-rest evaluation; `probabilities` columns follow the class order.
EvalReport ovr_report(const Eigen::MatrixXd& probabilities, std::span<const Group> labels);

std::string roc_to_csv(const RocCurve& curve);

}  // namespace pivotal
