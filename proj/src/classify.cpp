#include "pivotal/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pivotal/error.hpp"
#include "pivotal/random.hpp"
#include "text_util.hpp"

namespace pivotal {

FeatureMatrix vectorize(std::span<const DifferentialGraph> graphs, std::span<const std::size_t> nodes,
                        std::span<const std::string> region_names, bool include_diagonal) {
  if (nodes.empty()) fail(ErrorCode::InvalidArgument, "vectorize: empty pivotal set");
  if (graphs.empty()) fail(ErrorCode::InvalidArgument, "vectorize: no graphs");
  const auto& first = graphs.front();
  for (const auto n : nodes) {
    if (n >= first.size()) fail(ErrorCode::InvalidArgument, "vectorize: node out of range");
  }

  FeatureMatrix out;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t x = 0; x < nodes.size(); ++x) {
    for (std::size_t y = include_diagonal ? x : x + 1; y < nodes.size(); ++y) {
      pairs.emplace_back(nodes[x], nodes[y]);
      const auto name = [&](std::size_t pos) {
        const auto original = first.nodes[pos];
        return original < region_names.size() ? region_names[original] : std::to_string(original);
      };
      out.feature_names.push_back("(" + name(nodes[x]) + ", " + name(nodes[y]) + ")");
    }
  }
  if (pairs.empty()) fail(ErrorCode::InvalidArgument, "vectorize: no features");

  out.rows.resize(static_cast<Eigen::Index>(graphs.size()), static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t v = 0; v < graphs.size(); ++v) {
    const auto& g = graphs[v];
    if (g.nodes != first.nodes) fail(ErrorCode::InvalidArgument, "vectorize: graphs differ in node space");
    for (std::size_t c = 0; c < pairs.size(); ++c) {
      out.rows(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(c)) =
          g.matrix(static_cast<Eigen::Index>(pairs[c].first), static_cast<Eigen::Index>(pairs[c].second));
    }
    out.labels.push_back(g.group);
    out.patient_ids.push_back(g.patient_id);
  }
  return out;
}

Split stratified_split(std::span<const Group> labels, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    fail(ErrorCode::InvalidArgument, "train fraction must be in (0, 1)");
  }
  Rng rng(seed);
  Split out;
  for (const Group g : kGroups) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == g) rows.push_back(i);
    }
    if (rows.empty()) continue;
    if (rows.size() < 2) {
      fail(ErrorCode::InvalidArgument, "class " + std::string(to_string(g)) + " has fewer than 2 rows");
    }
    rng.shuffle(std::span<std::size_t>(rows));
    const double target = train_fraction * static_cast<double>(rows.size());
    auto n_train = static_cast<std::size_t>(std::floor(target + 1e-9));
    n_train = std::clamp<std::size_t>(n_train, 1, rows.size() - 1);
    out.train.insert(out.train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.insert(out.test.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

Eigen::MatrixXd design_matrix(const LinearModel& model, const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(x.cols()) != model.input_columns) {
    fail(ErrorCode::InvalidArgument, "feature count " + std::to_string(x.cols()) + " does not match model (" +
                                         std::to_string(model.input_columns) + ")");
  }
  const auto p = static_cast<Eigen::Index>(model.kept_columns.size());
  Eigen::MatrixXd z(x.rows(), p + 1);
  for (Eigen::Index c = 0; c < p; ++c) {
    z.col(c) = (x.col(static_cast<Eigen::Index>(model.kept_columns[static_cast<std::size_t>(c)])).array() -
                model.mean[c]) / model.scale[c];
  }
  z.col(p).setOnes();
  return z;
}

namespace {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double top = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - top).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

}  // namespace

double softmax_loss(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& design, std::span<const Group> labels,
                    double l2, Eigen::MatrixXd* grad) {
  const auto n = design.rows();
  const auto p = design.cols() - 1;
  const Eigen::MatrixXd logits = design * weights.transpose();
  double loss = 0.0;
  Eigen::MatrixXd residual(n, weights.rows());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double top = logits.row(i).maxCoeff();
    const Eigen::ArrayXd shifted = logits.row(i).array().transpose() - top;
    const double log_norm = std::log(shifted.exp().sum());
    const auto y = static_cast<Eigen::Index>(group_index(labels[static_cast<std::size_t>(i)]));
    loss -= shifted[y] - log_norm;
    if (grad) {
      residual.row(i) = (shifted - log_norm).exp().transpose();
      residual(i, y) -= 1.0;
    }
  }
  const auto coef = weights.leftCols(p);
  loss += 0.5 * l2 * coef.squaredNorm();
  loss /= static_cast<double>(n);
  if (grad) {
    *grad = residual.transpose() * design;
    grad->leftCols(p) += l2 * coef;
    *grad /= static_cast<double>(n);
  }
  return loss;
}

LinearModel train(const Eigen::MatrixXd& x, std::span<const Group> labels, const TrainParams& params) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) fail(ErrorCode::InvalidArgument, "train: label count mismatch");
  if (!(params.l2 >= 0.0) || !(params.step > 0.0) || params.max_iter < 0) {
    fail(ErrorCode::InvalidArgument, "train: invalid hyperparameters");
  }
  std::array<bool, kGroupCount> present{};
  for (const Group g : labels) present[group_index(g)] = true;
  if (std::count(present.begin(), present.end(), true) < 2) {
    fail(ErrorCode::InvalidArgument, "train: need at least two classes in the training rows");
  }
  if (!x.allFinite()) fail(ErrorCode::Numerical, "train: non-finite features");

  LinearModel model;
  model.params = params;
  model.input_columns = static_cast<std::size_t>(x.cols());
  const double n = static_cast<double>(x.rows());
  std::vector<double> means, scales;
  std::size_t dropped = 0;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double mean = x.col(c).mean();
    const double sd = std::sqrt((x.col(c).array() - mean).square().sum() / n);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      ++dropped;
      continue;
    }
    model.kept_columns.push_back(static_cast<std::size_t>(c));
    means.push_back(mean);
    scales.push_back(sd);
  }
  if (dropped) {
    model.warnings.push_back("dropped " + std::to_string(dropped) + " zero-variance feature column(s)");
  }
  model.mean = Eigen::Map<const Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
  model.scale = Eigen::Map<const Eigen::VectorXd>(scales.data(), static_cast<Eigen::Index>(scales.size()));

  const Eigen::MatrixXd z = design_matrix(model, x);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(kGroupCount), z.cols());
  Eigen::MatrixXd grad;
  double loss = softmax_loss(w, z, labels, params.l2, &grad);
  model.loss_trace.push_back(loss);

  double step = params.step;
  Eigen::MatrixXd trial_grad;
  for (int it = 0; it < params.max_iter; ++it) {
    if (grad.norm() <= 1e-10 || step < 1e-14) break;
    const Eigen::MatrixXd trial = w - step * grad;
    const double trial_loss = softmax_loss(trial, z, labels, params.l2, &trial_grad);
    if (trial_loss > loss) {
      step *= 0.5;
      continue;
    }
    w = trial;
    loss = trial_loss;
    grad.swap(trial_grad);
    model.loss_trace.push_back(loss);
  }
  model.weights = std::move(w);
  model.final_loss = loss;
  return model;
}

Eigen::MatrixXd predict_proba(const LinearModel& model, const Eigen::MatrixXd& x) {
  return softmax_rows(design_matrix(model, x) * model.weights.transpose());
}

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) fail(ErrorCode::InvalidArgument, "roc_curve: size mismatch");
  std::size_t pos = 0;
  for (const int l : labels) pos += l ? 1 : 0;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) fail(ErrorCode::InvalidArgument, "roc_curve: both label values must be present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  curve.fpr.push_back(0.0);
  curve.tpr.push_back(0.0);
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    while (i < order.size() && scores[order[i]] == t) {
      (labels[order[i]] ? tp : fp) += 1;
      ++i;
    }
    curve.thresholds.push_back(t);
    curve.fpr.push_back(static_cast<double>(fp) / static_cast<double>(neg));
    curve.tpr.push_back(static_cast<double>(tp) / static_cast<double>(pos));
  }
  return curve;
}

double auc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.fpr.size(); ++i) {
    area += (curve.fpr[i] - curve.fpr[i - 1]) * (curve.tpr[i] + curve.tpr[i - 1]) * 0.5;
  }
  return area;
}

YoudenPoint youden_cutoff(const RocCurve& curve) {
  YoudenPoint best{curve.thresholds.front(), -1.0};
  for (std::size_t i = 0; i < curve.fpr.size(); ++i) {
    const double j = curve.tpr[i] - curve.fpr[i];
    if (j >= best.j - 1e-12) {
      best.threshold = curve.thresholds[i];
      best.j = std::max(j, best.j);
    }
  }
  best.j = std::clamp(best.j, 0.0, 1.0);
  return best;
}

Confusion confusion_at(std::span<const double> scores, std::span<const int> labels, double threshold) {
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i]) {
      (predicted ? c.tp : c.fn) += 1;
    } else {
      (predicted ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

EvalReport ovr_report(const Eigen::MatrixXd& probabilities, std::span<const Group> labels) {
  if (probabilities.cols() != static_cast<Eigen::Index>(kGroupCount)) {
    fail(ErrorCode::InvalidArgument, "ovr_report: expected 3 probability columns");
  }
  if (static_cast<std::size_t>(probabilities.rows()) != labels.size()) {
    fail(ErrorCode::InvalidArgument, "ovr_report: label count mismatch");
  }
  for (const Group g : kGroups) {
    if (std::find(labels.begin(), labels.end(), g) == labels.end()) {
      fail(ErrorCode::InvalidArgument, "ovr_report: class " + std::string(to_string(g)) + " missing from labels");
    }
  }

  EvalReport report;
  std::vector<double> pooled_scores;
  std::vector<int> pooled_labels;
  double auc_sum = 0.0;
  for (const Group g : kGroups) {
    const auto c = static_cast<Eigen::Index>(group_index(g));
    std::vector<double> scores(labels.size());
    std::vector<int> binary(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      scores[i] = probabilities(static_cast<Eigen::Index>(i), c);
      binary[i] = labels[i] == g ? 1 : 0;
    }
    auto& ce = report.per_class[group_index(g)];
    ce.group = g;
    ce.roc = roc_curve(scores, binary);
    ce.auc = auc(ce.roc);
    ce.youden = youden_cutoff(ce.roc);
    ce.confusion = confusion_at(scores, binary, ce.youden.threshold);
    auc_sum += ce.auc;
    pooled_scores.insert(pooled_scores.end(), scores.begin(), scores.end());
    pooled_labels.insert(pooled_labels.end(), binary.begin(), binary.end());
  }
  report.macro_auc = auc_sum / static_cast<double>(kGroupCount);
  report.micro_roc = roc_curve(pooled_scores, pooled_labels);
  report.micro_auc = auc(report.micro_roc);
  return report;
}

std::string roc_to_csv(const RocCurve& curve) {
  std::string out = "threshold,fpr,tpr\n";
  for (std::size_t i = 0; i < curve.fpr.size(); ++i) {
    out += std::isinf(curve.thresholds[i]) ? std::string("inf") : detail::format_double(curve.thresholds[i]);
    out += "," + detail::format_double(curve.fpr[i]) + "," + detail::format_double(curve.tpr[i]) + "\n";
  }
  return out;
}

}  // namespace pivotal
