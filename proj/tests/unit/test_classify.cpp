#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "generators.hpp"
#include "pivotal/classify.hpp"
#include "pivotal/error.hpp"

using namespace pivotal;
using namespace pivotal::testing;

namespace {

DifferentialGraph graph_of(const Eigen::MatrixXd& s, Group g, std::string id) {
  DifferentialGraph out;
  out.patient_id = std::move(id);
  out.group = g;
  out.matrix = s;
  for (Eigen::Index i = 0; i < s.rows(); ++i) out.nodes.push_back(static_cast<std::size_t>(i));
  return out;
}

std::vector<Group> random_labels(Rng& rng, std::size_t n) {
  std::vector<Group> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = kGroups[i < 3 ? i : rng.below(3)];
  rng.shuffle(std::span(out));
  return out;
}

// Youden by brute force: try every distinct score (and +inf) as a threshold.
YoudenPoint youden_sweep(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::set<double> thresholds(scores.begin(), scores.end());
  thresholds.insert(std::numeric_limits<double>::infinity());
  double pos = 0, neg = 0;
  for (int l : labels) (l ? pos : neg) += 1;
  YoudenPoint best{0, -2};
  for (auto it = thresholds.rbegin(); it != thresholds.rend(); ++it) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (scores[i] >= *it) (labels[i] ? tp : fp) += 1;
    const double j = tp / pos - fp / neg;
    if (j >= best.j - 1e-12) best = {*it, std::max(j, best.j)};
  }
  return best;
}

double auc_of(const std::vector<double>& s, const std::vector<int>& l) { return auc(roc_curve(s, l)); }

}  // namespace

TEST_CASE("vectorize column layout") {
  Eigen::MatrixXd s(3, 3);
  s << 1, 2, 3, 2, 4, 5, 3, 5, 6;
  std::vector<DifferentialGraph> graphs{graph_of(s, Group::AD, "a"), graph_of(-s, Group::CN, "b")};
  const std::vector<std::string> names{"x", "y", "z"};
  const std::vector<std::size_t> two{0, 2};
  const auto f = vectorize(graphs, two, names);
  REQUIRE(f.rows.cols() == 3);
  CHECK(f.feature_names == std::vector<std::string>{"(x, x)", "(x, z)", "(z, z)"});
  CHECK(f.rows.row(0) == Eigen::RowVector3d(1, 3, 6));
  CHECK(f.rows.row(1) == Eigen::RowVector3d(-1, -3, -6));
  CHECK(f.labels == std::vector<Group>{Group::AD, Group::CN});
  CHECK(f.patient_ids == std::vector<std::string>{"a", "b"});

  const auto off = vectorize(graphs, two, names, false);
  CHECK(off.rows.cols() == 1);
  CHECK(off.feature_names[0] == "(x, z)");

  std::vector<DifferentialGraph> zeros{graph_of(Eigen::MatrixXd::Zero(50, 50), Group::AD, "z")};
  std::vector<std::size_t> forty(40);
  for (std::size_t i = 0; i < 40; ++i) forty[i] = i;
  const auto big = vectorize(zeros, forty, {});
  CHECK(big.rows.cols() == 820);
  CHECK(big.rows.isZero(0.0));

  const std::vector<std::size_t> none;
  CHECK_THROWS_AS(vectorize(graphs, none, names), Error);
  const std::vector<std::size_t> single{1};
  CHECK_THROWS_AS(vectorize(graphs, single, names, false), Error);
}

TEST_CASE("stratified split examples") {
  std::vector<Group> labels;
  for (int i = 0; i < 10; ++i)
    for (const Group g : kGroups) labels.push_back(g);
  const auto s = stratified_split(labels, 0.8, 3);
  CHECK(s.train.size() == 24);
  CHECK(s.test.size() == 6);
  const auto again = stratified_split(labels, 0.8, 3);
  CHECK(again.train == s.train);
  CHECK(stratified_split(labels, 0.8, 4).train != s.train);

  std::vector<Group> paper;
  paper.insert(paper.end(), 213, Group::AD);
  paper.insert(paper.end(), 322, Group::MCI);
  paper.insert(paper.end(), 322, Group::CN);
  const auto p = stratified_split(paper, 0.8, 0);
  std::map<Group, std::size_t> train, test;
  for (auto i : p.train) ++train[paper[i]];
  for (auto i : p.test) ++test[paper[i]];
  CHECK(train[Group::AD] == 170);
  CHECK(train[Group::MCI] == 257);
  CHECK(train[Group::CN] == 257);
  CHECK(test[Group::AD] == 43);
  CHECK(test[Group::MCI] == 65);
  CHECK(test[Group::CN] == 65);

  std::vector<Group> lonely{Group::AD, Group::AD, Group::CN};
  CHECK_THROWS_AS(stratified_split(lonely, 0.8, 0), Error);
  CHECK_THROWS_AS(stratified_split(labels, 1.0, 0), Error);
}

TEST_CASE("property: stratified split is a per-class partition near the target") {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    std::vector<Group> labels;
    for (const Group g : kGroups) labels.insert(labels.end(), 2 + rng.below(60), g);
    rng.shuffle(std::span(labels));
    const double f = rng.uniform(0.05, 0.95);
    const auto s = stratified_split(labels, f, rng.next());
    std::vector<int> seen(labels.size(), 0);
    for (auto i : s.train) ++seen[i];
    for (auto i : s.test) ++seen[i];
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    for (const Group g : kGroups) {
      const double n = static_cast<double>(std::count(labels.begin(), labels.end(), g));
      const double got = static_cast<double>(std::count_if(s.train.begin(), s.train.end(), [&](auto i) { return labels[i] == g; }));
      // Within one row of the target, except where at least one row must stay on each side.
      if (f * n >= 1.0 && f * n <= n - 1.0) CHECK(std::abs(got - f * n) < 1.0);
      CHECK(got >= 1.0);
      CHECK(got <= n - 1.0);
    }
  }
}

TEST_CASE("gradient matches central differences") {
  Rng rng(5);
  for (int t = 0; t < 25; ++t) {
    const auto n = 5 + static_cast<Eigen::Index>(rng.below(20));
    const auto p = 1 + static_cast<Eigen::Index>(rng.below(6));
    Eigen::MatrixXd z(n, p + 1);
    z.leftCols(p) = random_matrix(rng, n, p);
    z.col(p).setOnes();
    const auto labels = random_labels(rng, static_cast<std::size_t>(n));
    const Eigen::MatrixXd w = random_matrix(rng, 3, p + 1, 0.5);
    const double l2 = rng.uniform(0, 2);
    Eigen::MatrixXd grad;
    softmax_loss(w, z, labels, l2, &grad);
    Eigen::MatrixXd fd(3, p + 1);
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j <= p; ++j) {
        Eigen::MatrixXd up = w, dn = w;
        up(i, j) += h;
        dn(i, j) -= h;
        fd(i, j) = (softmax_loss(up, z, labels, l2, nullptr) - softmax_loss(dn, z, labels, l2, nullptr)) / (2 * h);
      }
    CHECK((grad - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
  }
}

TEST_CASE("training: separable toy set, monotone loss trace, determinism") {
  Eigen::MatrixXd x(4, 1);
  x << -2, -1, 1, 2;
  const std::vector<Group> y{Group::AD, Group::AD, Group::CN, Group::CN};
  TrainParams params;
  params.l2 = 0.01;
  const auto model = train(x, y, params);
  const auto p = predict_proba(model, x);
  for (int i = 0; i < 4; ++i) {
    Eigen::Index arg;
    p.row(i).maxCoeff(&arg);
    CHECK(kGroups[static_cast<std::size_t>(arg)] == y[static_cast<std::size_t>(i)]);
  }
  for (std::size_t i = 1; i < model.loss_trace.size(); ++i) CHECK(model.loss_trace[i] <= model.loss_trace[i - 1]);
  const auto again = train(x, y, params);
  CHECK(again.weights == model.weights);
  CHECK(again.final_loss == model.final_loss);
  CHECK_THROWS_AS(predict_proba(model, Eigen::MatrixXd::Zero(2, 3)), Error);
  const std::vector<Group> one_class(4, Group::AD);
  CHECK_THROWS_AS(train(x, one_class, params), Error);
}

TEST_CASE("identical rows: columns dropped, priors predicted, AUC one half") {
  Rng rng(6);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(30, 4, 0.25);
  std::vector<Group> y(10, Group::AD);
  y.insert(y.end(), 12, Group::CN);
  y.insert(y.end(), 8, Group::MCI);
  rng.shuffle(std::span(y));
  const auto model = train(x, y);
  CHECK(model.kept_columns.empty());
  CHECK(model.warnings.size() == 1);
  const auto p = predict_proba(model, x);
  const double prior_cn = std::count(y.begin(), y.end(), Group::CN) / 30.0;
  CHECK(p(0, 1) == doctest::Approx(prior_cn).epsilon(1e-3));
  const auto report = ovr_report(p, y);
  for (const auto& ce : report.per_class) CHECK(ce.auc == 0.5);
}

TEST_CASE("zero-weight model is uniform; probabilities sum to one; monotone in a feature") {
  Rng rng(7);
  const Eigen::MatrixXd x = random_matrix(rng, 40, 5);
  const auto y = random_labels(rng, 40);
  auto model = train(x, y);
  const auto p = predict_proba(model, x);
  for (Eigen::Index i = 0; i < p.rows(); ++i) CHECK(std::abs(p.row(i).sum() - 1.0) <= 1e-12);

  LinearModel zero = model;
  zero.weights.setZero();
  CHECK((predict_proba(zero, x).array() - 1.0 / 3.0).abs().maxCoeff() <= 1e-15);

  // Raise feature 0 where class AD has the largest positive weight relative to the others.
  LinearModel mono = model;
  mono.weights.setZero();
  mono.weights(0, 0) = 1.0;
  Eigen::MatrixXd bumped = x;
  bumped(0, 0) += 1.0;
  CHECK(predict_proba(mono, bumped)(0, 0) > predict_proba(mono, x)(0, 0));
}

TEST_CASE("ROC and AUC examples") {
  const std::vector<double> s1{0.9, 0.8, 0.3, 0.1};
  const std::vector<int> l1{1, 1, 0, 0};
  const auto c1 = roc_curve(s1, l1);
  CHECK(auc(c1) == 1.0);
  bool through_corner = false;
  for (std::size_t i = 0; i < c1.fpr.size(); ++i) through_corner |= c1.fpr[i] == 0.0 && c1.tpr[i] == 1.0;
  CHECK(through_corner);
  CHECK(youden_cutoff(c1).j == 1.0);

  const std::vector<double> s2{0.9, 0.6, 0.4, 0.1};
  const std::vector<int> l2{1, 0, 1, 0};
  const auto c2 = roc_curve(s2, l2);
  CHECK(auc(c2) == 0.75);
  const auto y = youden_cutoff(c2);
  CHECK(y.j == 0.5);
  CHECK(y.threshold == 0.4);
  const auto conf = confusion_at(s2, l2, y.threshold);
  CHECK(conf.tp == 2);
  CHECK(conf.fp == 1);
  CHECK(conf.tn == 1);
  CHECK(conf.fn == 0);

  const std::vector<double> flat(6, 0.3);
  const std::vector<int> l3{1, 0, 1, 0, 0, 1};
  const auto c3 = roc_curve(flat, l3);
  CHECK(auc(c3) == 0.5);
  CHECK(youden_cutoff(c3).j == 0.0);
  CHECK(c3.fpr.size() == 2);

  const std::vector<int> single(4, 1);
  CHECK_THROWS_AS(roc_curve(s1, single), Error);
  CHECK(roc_to_csv(c1).starts_with("threshold,fpr,tpr\ninf,0,0\n"));
}

TEST_CASE("property: AUC equals pair counting, label flip, monotone transforms, Youden sweep") {
  Rng rng(8);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 2 + rng.below(199);
    std::vector<double> s(n);
    std::vector<int> l(n);
    const bool coarse = rng.below(2) == 0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = coarse ? static_cast<double>(rng.below(5)) / 4.0 : rng.uniform();
      l[i] = static_cast<int>(rng.below(2));
    }
    l[0] = 1;
    l[1] = 0;
    const auto curve = roc_curve(s, l);
    CHECK(curve.fpr.front() == 0.0);
    CHECK(curve.tpr.front() == 0.0);
    CHECK(curve.fpr.back() == 1.0);
    CHECK(curve.tpr.back() == 1.0);
    for (std::size_t i = 1; i < curve.fpr.size(); ++i) {
      CHECK(curve.fpr[i] >= curve.fpr[i - 1]);
      CHECK(curve.tpr[i] >= curve.tpr[i - 1]);
      CHECK(curve.thresholds[i] < curve.thresholds[i - 1]);
    }
    const double a = auc(curve);
    CHECK(std::abs(a - auc_pair_oracle(s, l)) <= 1e-12);
    std::vector<int> flipped(n);
    for (std::size_t i = 0; i < n; ++i) flipped[i] = 1 - l[i];
    CHECK(std::abs(a + auc_of(s, flipped) - 1.0) <= 1e-12);
    std::vector<double> transformed(n);
    for (std::size_t i = 0; i < n; ++i) transformed[i] = std::exp(3.0 * s[i]) - 7.0;
    CHECK(auc_of(transformed, l) == a);

    const auto y = youden_cutoff(curve);
    const auto oracle = youden_sweep(s, l);
    CHECK(std::abs(y.j - oracle.j) <= 1e-12);
    CHECK(y.threshold == oracle.threshold);
    CHECK(y.j >= 0.0);
    CHECK(y.j <= 1.0);
  }
}

TEST_CASE("one-vs-rest report") {
  std::vector<Group> y;
  for (int i = 0; i < 12; ++i) y.push_back(kGroups[static_cast<std::size_t>(i % 3)]);
  Eigen::MatrixXd perfect = Eigen::MatrixXd::Zero(12, 3);
  for (int i = 0; i < 12; ++i) perfect(i, i % 3) = 1.0;
  const auto r = ovr_report(perfect, y);
  CHECK(r.micro_auc == 1.0);
  CHECK(r.macro_auc == 1.0);
  for (const auto& ce : r.per_class) {
    CHECK(ce.auc == 1.0);
    CHECK(ce.youden.j == 1.0);
  }
  const auto uniform = ovr_report(Eigen::MatrixXd::Constant(12, 3, 1.0 / 3.0), y);
  for (const auto& ce : uniform.per_class) CHECK(ce.auc == 0.5);

  const std::vector<Group> missing(12, Group::AD);
  CHECK_THROWS_AS(ovr_report(perfect, missing), Error);
}

TEST_CASE("property: micro and macro AUC match a from-scratch recount") {
  Rng rng(9);
  for (int t = 0; t < 30; ++t) {
    const auto y = random_labels(rng, 60);
    Eigen::MatrixXd p(60, 3);
    for (int i = 0; i < 60; ++i) {
      Eigen::Vector3d v(rng.uniform(), rng.uniform(), rng.uniform());
      p.row(i) = v.transpose() / v.sum();
    }
    const auto r = ovr_report(p, y);
    std::vector<double> pooled;
    std::vector<int> pooled_labels;
    double mean = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      std::vector<double> s;
      std::vector<int> l;
      for (int i = 0; i < 60; ++i) {
        s.push_back(p(i, static_cast<Eigen::Index>(c)));
        l.push_back(y[static_cast<std::size_t>(i)] == kGroups[c] ? 1 : 0);
      }
      const double a = auc_pair_oracle(s, l);
      CHECK(std::abs(r.per_class[c].auc - a) <= 1e-12);
      mean += a / 3.0;
      pooled.insert(pooled.end(), s.begin(), s.end());
      pooled_labels.insert(pooled_labels.end(), l.begin(), l.end());
    }
    CHECK(std::abs(r.macro_auc - mean) <= 1e-12);
    CHECK(std::abs(r.macro_auc - (r.per_class[0].auc + r.per_class[1].auc + r.per_class[2].auc) / 3.0) <= 1e-12);
    CHECK(std::abs(r.micro_auc - auc_pair_oracle(pooled, pooled_labels)) <= 1e-12);
  }
}
