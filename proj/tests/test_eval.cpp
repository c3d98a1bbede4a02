#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "eegdiff/eval/classifiers.hpp"
#include "eegdiff/eval/cv.hpp"
#include "eegdiff/eval/features.hpp"
#include "eegdiff/eval/metrics.hpp"
#include "eegdiff/eval/report.hpp"
#include "eegdiff/eval/stats.hpp"
#include "eegdiff/errors.hpp"

using namespace eegdiff;
using namespace eegdiff::eval;

namespace {

FeatureMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  FeatureMatrix m{rows, cols, rng.normal_vector(rows * cols)};
  return m;
}

// Straight sort of all distances, majority vote, ties by mean distance then id.
int brute_knn(const FeatureMatrix& train, std::span<const int> labels, std::span<const double> q, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < train.rows; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < train.cols; ++j) s += (train.row(i)[j] - q[j]) * (train.row(i)[j] - q[j]);
    d.emplace_back(std::sqrt(s), i);
  }
  std::sort(d.begin(), d.end());
  std::map<int, std::pair<int, double>> votes;
  for (std::size_t i = 0; i < k; ++i) {
    auto& v = votes[labels[d[i].second]];
    v.first += 1;
    v.second += d[i].first;
  }
  int best = -1, best_n = 0;
  double best_mean = 0;
  for (const auto& [c, v] : votes) {
    const double mean = v.second / v.first;
    if (v.first > best_n || (v.first == best_n && mean < best_mean)) {
      best = c;
      best_n = v.first;
      best_mean = mean;
    }
  }
  return best;
}

// Two classes of 2-channel epochs: 4 vs 12 cycles per epoch, random phase.
std::vector<data::Epoch> tone_epochs(int per_class, std::size_t L, std::uint64_t seed) {
  Rng rng(seed);
  auto names = std::make_shared<const data::ChannelNames>(data::ChannelNames{"A", "B"});
  std::vector<data::Epoch> out;
  for (int i = 0; i < per_class; ++i) {
    for (int c = 0; c < 2; ++c) {
      data::Epoch e;
      e.samples = data::ChannelMatrix(2, L);
      e.label = c;
      e.channel_names = names;
      const double f = c == 0 ? 4.0 : 12.0;
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t n = 0; n < L; ++n) {
          e.samples(r, n) = std::sin(2.0 * std::numbers::pi * f * n / L + phase + r) + 0.3 * rng.normal();
        }
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("mse and pearson on hand examples") {
  const std::vector<double> a{1, 2, 3, 4}, b{2, 2, 2, 2}, c{2, 4, 6, 8}, d{4, 3, 2, 1};
  CHECK(mse(a, b) == doctest::Approx(1.5));
  CHECK(mse(a, a) == 0.0);
  CHECK(pearson(a, c) == doctest::Approx(1.0));
  CHECK(pearson(a, d) == doctest::Approx(-1.0));
  const std::vector<double> x{1, 2, 3}, y{1, 3, 2};
  CHECK(pearson(x, y) == doctest::Approx(0.5));
  CHECK_THROWS_AS(mse(a, std::vector<double>{1}), std::invalid_argument);
  CHECK_THROWS_AS(mse(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(pearson(a, b), std::invalid_argument);
  CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{2}), std::invalid_argument);
}

TEST_CASE("pearson is invariant to positive affine maps and bounded") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = rng.normal_vector(40), b = rng.normal_vector(40);
    std::vector<double> a2(a.size());
    const double scale = rng.uniform(0.1, 10.0), shift = rng.uniform(-5.0, 5.0);
    for (std::size_t i = 0; i < a.size(); ++i) a2[i] = scale * a[i] + shift;
    const double r = pearson(a, b);
    CHECK(std::abs(r) <= 1.0);
    CHECK(pearson(a2, b) == doctest::Approx(r).epsilon(1e-12));
    CHECK(pearson(b, a) == doctest::Approx(r).epsilon(1e-12));
    CHECK(mse(a, b) >= 0.0);
    CHECK(mse(a, b) == doctest::Approx(mse(b, a)));
  }
}

TEST_CASE("classification_report matches a confusion-matrix oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const int K = 2 + static_cast<int>(rng.below(4));
    const std::size_t n = 5 + rng.below(40);
    std::vector<int> y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(K));
      p[i] = rng.uniform() < 0.6 ? y[i] : static_cast<int>(rng.below(K));
    }
    std::vector<std::vector<double>> cm(K, std::vector<double>(K, 0));
    for (std::size_t i = 0; i < n; ++i) cm[y[i]][p[i]] += 1;
    double acc = 0, prec = 0, rec = 0, f1 = 0;
    for (int c = 0; c < K; ++c) {
      double row = 0, col = 0;
      for (int j = 0; j < K; ++j) {
        row += cm[c][j];
        col += cm[j][c];
      }
      acc += cm[c][c];
      const double pc = col > 0 ? cm[c][c] / col : 0.0;
      const double rc = row > 0 ? cm[c][c] / row : 0.0;
      const double fc = pc + rc > 0 ? 2 * pc * rc / (pc + rc) : 0.0;
      prec += row * pc;
      rec += row * rc;
      f1 += row * fc;
    }
    const auto s = classification_report(y, p);
    CHECK(s.accuracy == doctest::Approx(acc / n).epsilon(1e-12));
    CHECK(s.precision == doctest::Approx(prec / n).epsilon(1e-12));
    CHECK(s.recall == doctest::Approx(rec / n).epsilon(1e-12));
    CHECK(s.f1 == doctest::Approx(f1 / n).epsilon(1e-12));
    // weighted recall equals accuracy
    CHECK(s.recall == doctest::Approx(s.accuracy).epsilon(1e-12));
  }
}

TEST_CASE("classification_report on degenerate predictions") {
  const std::vector<int> y{0, 1, 2, 3, 0, 1, 2, 3};
  const std::vector<int> p(8, 0);
  const auto s = classification_report(y, p);
  CHECK(s.accuracy == doctest::Approx(0.25));
  CHECK(s.recall == doctest::Approx(0.25));
  CHECK(s.precision == doctest::Approx(0.0625));
  const auto perfect = classification_report(y, y);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.f1 == 1.0);
  const auto cm = confusion_matrix(y, p, 4);
  CHECK(cm[0][0] == 2);
  CHECK(cm[3][0] == 2);
  CHECK(cm[3][3] == 0);
  CHECK_THROWS_AS(classification_report(y, std::vector<int>{0}), std::invalid_argument);
}

TEST_CASE("knn agrees with brute force on random instances") {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + rng.below(26), dims = 1 + rng.below(5);
    const auto train = random_matrix(n, dims, rng);
    const auto test = random_matrix(10, dims, rng);
    std::vector<int> labels(n);
    for (auto& l : labels) l = static_cast<int>(rng.below(3));
    for (std::size_t k : {1u, 3u, 5u}) {
      if (k > n) continue;
      const auto got = knn_classify(train, labels, test, k);
      for (std::size_t i = 0; i < test.rows; ++i) CHECK(got[i] == brute_knn(train, labels, test.row(i), k));
    }
  }
}

TEST_CASE("knn limiting cases") {
  Rng rng(5);
  const auto train = random_matrix(20, 3, rng);
  std::vector<int> labels(20);
  for (std::size_t i = 0; i < 20; ++i) labels[i] = i < 13 ? 2 : static_cast<int>(i % 2);
  SUBCASE("k = 1 returns the training labels") { CHECK(knn_classify(train, labels, train, 1) == labels); }
  SUBCASE("k = n returns the global majority") {
    const auto test = random_matrix(7, 3, rng);
    for (int p : knn_classify(train, labels, test, 20)) CHECK(p == 2);
  }
  CHECK_THROWS_AS(knn_classify(train, labels, train, 0), std::invalid_argument);
  CHECK_THROWS_AS(knn_classify(train, labels, train, 21), std::invalid_argument);
}

TEST_CASE("standardizer uses training statistics") {
  FeatureMatrix x{3, 2, {1, 5, 2, 5, 3, 5}};
  const auto s = Standardizer::fit(x);
  const auto z = s.apply(x);
  CHECK(z.row(0)[0] == doctest::Approx(-std::sqrt(1.5)));
  CHECK(z.row(2)[0] == doctest::Approx(std::sqrt(1.5)));
  CHECK(z.row(1)[1] == 0.0);
  FeatureMatrix q{1, 2, {4, 6}};
  CHECK(s.apply(q).row(0)[1] == doctest::Approx(1.0));
}

TEST_CASE("logistic regression separates blobs and shrinks under heavy l2") {
  Rng rng(9);
  FeatureMatrix x{60, 2, {}};
  std::vector<int> y;
  for (int i = 0; i < 60; ++i) {
    const int c = i % 3;
    x.values.push_back(4.0 * std::cos(2.0 * c) + 0.3 * rng.normal());
    x.values.push_back(4.0 * std::sin(2.0 * c) + 0.3 * rng.normal());
    y.push_back(c);
  }
  LogRegConfig cfg;
  cfg.max_iter = 200;
  const auto model = LogisticRegression::train(x, y, cfg);
  CHECK(model.predict(x) == y);
  const auto proba = model.predict_proba(x);
  for (std::size_t r = 0; r < proba.rows; ++r) {
    const auto row = proba.row(r);
    CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0));
  }

  const auto again = LogisticRegression::train(x, y, cfg);
  CHECK(again.weights() == model.weights());
  CHECK(again.bias() == model.bias());

  cfg.l2 = 1e6;
  cfg.lr = 1e-3;
  const auto flat = LogisticRegression::train(x, y, cfg);
  for (double w : flat.weights()) CHECK(std::abs(w) < 1e-2);
  const auto prior = flat.predict_proba(x);
  for (double v : prior.values) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(0.02));

  CHECK_THROWS_AS(LogisticRegression::train(x, std::vector<int>(60, 1), LogRegConfig{}), std::invalid_argument);
}

TEST_CASE("student t cdf and paired t-test") {
  for (double dof : {1.0, 2.0, 5.0, 17.0, 60.0}) {
    boost::math::students_t dist(dof);
    for (double t : {-4.0, -1.3, 0.0, 0.7, 2.5, 8.0}) {
      CHECK(student_t_cdf(t, dof) == doctest::Approx(boost::math::cdf(dist, t)).epsilon(1e-9));
    }
  }
  CHECK(regularized_incomplete_beta(2, 3, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(2, 3, 1.0) == 1.0);
  // I_x(1, 1) = x, I_x(a, 1) = x^a
  CHECK(regularized_incomplete_beta(1, 1, 0.37) == doctest::Approx(0.37).epsilon(1e-12));
  CHECK(regularized_incomplete_beta(3, 1, 0.5) == doctest::Approx(0.125).epsilon(1e-12));

  const std::vector<double> a{2, 4, 6}, b{1, 2, 3};
  const auto r = paired_ttest(a, b);
  CHECK(r.degrees_of_freedom == 2);
  CHECK(std::abs(r.t_statistic - 3.4641016) < 1e-6);
  // two-sided p for t = 3.4641 on 2 dof from tables: 0.0742
  CHECK(std::abs(r.p_value - 0.0742) < 1e-3);
  CHECK_FALSE(r.significant);
  boost::math::students_t t2(2.0);
  CHECK(r.p_value == doctest::Approx(2.0 * boost::math::cdf(boost::math::complement(t2, r.t_statistic))).epsilon(1e-9));

  const auto flipped = paired_ttest(b, a);
  CHECK(flipped.t_statistic == doctest::Approx(-r.t_statistic));
  CHECK(flipped.p_value == doctest::Approx(r.p_value));

  CHECK_THROWS_AS(paired_ttest(std::vector<double>{1, 2, 3}, std::vector<double>{0, 1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(paired_ttest(std::vector<double>{1}, std::vector<double>{0}), std::invalid_argument);
  CHECK_THROWS_AS(paired_ttest(a, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST_CASE("stratified folds partition and balance") {
  std::vector<int> labels;
  for (int i = 0; i < 20; ++i) labels.push_back(i % 4);
  const auto fold = stratified_folds(labels, 5, 11);
  std::vector<int> size(5, 0);
  for (int f : fold) {
    REQUIRE(f >= 0);
    REQUIRE(f < 5);
    ++size[f];
  }
  for (int s : size) CHECK(s == 4);
  CHECK(stratified_folds(labels, 5, 11) == fold);

  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const int K = 2 + static_cast<int>(rng.below(3)), folds = 2 + static_cast<int>(rng.below(4));
    std::vector<int> y;
    for (int c = 0; c < K; ++c) {
      const int n = folds + static_cast<int>(rng.below(15));
      for (int i = 0; i < n; ++i) y.push_back(c);
    }
    rng.shuffle(y.begin(), y.end());
    const auto f = stratified_folds(y, folds, trial);
    std::vector<int> total(folds, 0);
    for (int c = 0; c < K; ++c) {
      std::vector<int> per(folds, 0);
      int n = 0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == c) {
          ++per[f[i]];
          ++n;
        }
      }
      for (int p : per) CHECK(std::abs(p - static_cast<double>(n) / folds) < 1.0);
    }
    for (int v : f) ++total[v];
    CHECK(*std::max_element(total.begin(), total.end()) - *std::min_element(total.begin(), total.end()) <= 1);
  }
  CHECK_THROWS_AS(stratified_folds(std::vector<int>{0, 0, 1}, 2, 1), std::invalid_argument);
  CHECK_THROWS_AS(stratified_folds(labels, 1, 1), std::invalid_argument);
}

TEST_CASE("epoch classifiers learn distinct tones") {
  const auto train = tone_epochs(16, 64, 1);
  const auto test = tone_epochs(8, 64, 2);
  ClassifierConfig cfg;
  cfg.net.epochs = 15;
  cfg.net.batch_size = 8;
  cfg.net.lr = 3e-3;
  for (const std::string name : {"cnn", "unet"}) {
    CAPTURE(name);
    auto clf = classifier_factory(name, cfg)();
    clf->fit(train);
    const auto acc = classification_report(labels_of(test), clf->predict(test)).accuracy;
    CHECK(acc >= 0.9);
    auto* net = dynamic_cast<NetClassifier*>(clf.get());
    REQUIRE(net);
    const auto p = net->predict_proba(test);
    for (std::size_t i = 0; i < test.size(); ++i) {
      double s = 0;
      for (std::size_t k = 0; k < p.dim(1); ++k) s += p.data()[i * p.dim(1) + k];
      CHECK(s == doctest::Approx(1.0));
    }
    auto twin = classifier_factory(name, cfg)();
    twin->fit(train);
    CHECK(dynamic_cast<NetClassifier*>(twin.get())->predict_proba(test).data()[0] == p.data()[0]);
  }
  std::vector<data::Epoch> one_class;
  for (const auto& e : train) {
    if (e.label == 0) one_class.push_back(e);
  }
  for (const auto& name : kClassifierNames) {
    if (name == "knn") continue;
    CHECK_THROWS_AS(classifier_factory(name, cfg)()->fit(one_class), std::invalid_argument);
  }
  CHECK_THROWS_AS(classifier_factory("svm", cfg), ConfigError);
}

TEST_CASE("cross_validate gives one accuracy per fold") {
  const auto epochs = tone_epochs(10, 32, 4);
  ClassifierConfig cfg;
  const auto r = cross_validate(epochs, classifier_factory("knn", cfg), 5, 11);
  REQUIRE(r.fold_accuracies.size() == 5);
  CHECK(r.mean_accuracy == doctest::Approx(std::accumulate(r.fold_accuracies.begin(), r.fold_accuracies.end(), 0.0) / 5));
  CHECK(r.mean_accuracy >= 0.9);
  auto bad = epochs;
  bad.pop_back();
  CHECK_THROWS_AS(cross_validate(epochs, bad, classifier_factory("knn", cfg), 5, 11), std::invalid_argument);
}

TEST_CASE("report writers emit fixed headers and stable bytes") {
  const auto dir = std::filesystem::temp_directory_path() / "eegdiff_test_eval";
  std::filesystem::remove_all(dir);
  MetricReport report;
  report.cv_folds = 5;
  report.per_channel.push_back({"F8", {"F4", "T8"}, "ddpm", 0.25, 1.0 / 3.0});
  report.per_classifier.push_back({"knn", "original", {0.9, 0.91, 0.9, 0.905}, {0.875, 0.925}});
  report.comparisons.push_back({"knn: original vs hybrid", paired_ttest(std::vector<double>{0.9, 0.8, 0.85},
                                                                         std::vector<double>{0.7, 0.7, 0.7})});
  write_channel_csv(dir / "channels.csv", report.per_channel);
  write_classifier_csv(dir / "classifiers.csv", report.per_classifier);
  write_report_json(dir / "report.json", report);
  CHECK(slurp(dir / "channels.csv") == "target,input_1,input_2,method,mse,pcc\nF8,F4,T8,ddpm,0.25,0.3333333333\n");
  CHECK(slurp(dir / "classifiers.csv") ==
        "classifier,dataset,accuracy,precision,recall,f1,fold_accuracies\nknn,original,0.9,0.91,0.9,0.905,0.875;0.925\n");
  const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(j["cv_folds"] == 5);
  CHECK(j["per_channel"][0]["target"] == "F8");
  CHECK(j["comparisons"][0]["degrees_of_freedom"] == 2);
  const auto first = slurp(dir / "classifiers.csv");
  write_classifier_csv(dir / "classifiers.csv", report.per_classifier);
  CHECK(slurp(dir / "classifiers.csv") == first);
  std::filesystem::remove_all(dir);
}

TEST_CASE("mean-of-inputs scoring") {
  auto names = std::make_shared<const data::ChannelNames>(data::ChannelNames{"F4", "T8", "F8"});
  data::Epoch e;
  e.channel_names = names;
  e.samples = data::ChannelMatrix(3, 4, std::vector<double>{1, 2, 3, 4, 3, 4, 5, 6, 2, 3, 4, 5});
  const data::AdjacencyTable table({data::AdjacencyEntry{"F8", {"F4", "T8"}}});
  const std::vector<data::Epoch> real{e};
  const auto m = score_mean_of_inputs(real, table);
  REQUIRE(m.size() == 1);
  CHECK(m[0].mse == 0.0);
  CHECK(m[0].pcc == doctest::Approx(1.0));
  auto recon = real;
  for (double& v : recon[0].samples.row(2)) v += 1.0;
  const auto r = score_reconstruction(real, recon, table, "ddpm");
  CHECK(r[0].mse == doctest::Approx(1.0));
  CHECK(r[0].method == "ddpm");
}
