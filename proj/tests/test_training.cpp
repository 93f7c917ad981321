#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "aqqr/training.hpp"
#include "testutil.hpp"

using namespace aqqr;

namespace {

QualityDataset constant_label_dataset(int n, double label) {
  QualityDataset ds;
  for (int i = 0; i < n; ++i) {
    McqRecord r;
    r.id = "c" + std::to_string(1000 + i);
    r.stem = "Question number " + std::to_string(i) + " text here.";
    r.answer = "Answer";
    r.distractors = {"Wrong", "Also wrong"};
    r.explanation = "Some explanation.";
    r.average_rating = label;
    r.rating_count = 20;
    ds.records.push_back(r);
  }
  return ds;
}

}  // namespace

TEST_CASE("split sizes follow 8:1:1") {
  for (int n : {10, 100, 1000}) {
    Split split = split_dataset(constant_label_dataset(n, 3.0), 2021);
    CHECK(split.train.size() == static_cast<std::size_t>(n * 8 / 10));
    CHECK(split.val.size() == static_cast<std::size_t>(n / 10));
    CHECK(split.test.size() ==
          static_cast<std::size_t>(n) - split.train.size() - split.val.size());

    // disjoint and exhaustive
    std::set<std::string> ids;
    for (const auto* part : {&split.train, &split.val, &split.test}) {
      for (const auto& r : *part) CHECK(ids.insert(r.id).second);
    }
    CHECK(ids.size() == static_cast<std::size_t>(n));
  }
}

TEST_CASE("same split seed gives the same split") {
  QualityDataset ds = constant_label_dataset(57, 3.0);
  Split a = split_dataset(ds, 2021);
  Split b = split_dataset(ds, 2021);
  for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(a.train[i].id == b.train[i].id);
  Split c = split_dataset(ds, 2022);
  bool all_same = a.train.size() == c.train.size();
  if (all_same) {
    all_same = std::equal(a.train.begin(), a.train.end(), c.train.begin(),
                          [](const McqRecord& x, const McqRecord& y) { return x.id == y.id; });
  }
  CHECK_FALSE(all_same);
}

TEST_CASE("evaluate: hand values, boundary, errors") {
  auto [mse, acc] = evaluate({1, 2}, {1, 3});
  CHECK(mse == doctest::Approx(0.5));
  CHECK(acc == doctest::Approx(0.5));

  // |error| exactly 0.25 counts as correct
  auto [mse2, acc2] = evaluate({2.75}, {2.5});
  CHECK(mse2 == doctest::Approx(0.0625));
  CHECK(acc2 == 1.0);
  auto [mse3, acc3] = evaluate({2.76}, {2.5});
  CHECK(acc3 == 0.0);
  CHECK(mse3 > 0.0625);

  auto [mse4, acc4] = evaluate({1, 2, 3}, {1, 2, 3});
  CHECK(mse4 == 0.0);
  CHECK(acc4 == 1.0);

  CHECK_THROWS_AS(evaluate({1}, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(evaluate({}, {}), std::invalid_argument);
}

TEST_CASE("evaluate is symmetric under pair permutation") {
  std::vector<double> preds{1.0, 2.4, 3.1, 0.2};
  std::vector<double> labels{1.2, 2.0, 3.3, 0.3};
  auto [mse1, acc1] = evaluate(preds, labels);
  std::vector<double> preds2{3.1, 1.0, 0.2, 2.4};
  std::vector<double> labels2{3.3, 1.2, 0.3, 2.0};
  auto [mse2, acc2] = evaluate(preds2, labels2);
  CHECK(mse1 == doctest::Approx(mse2));
  CHECK(acc1 == acc2);
}

TEST_CASE("classify_extremes: identity and degenerate predictor") {
  std::vector<double> labels{0.5, 1.0, 2.0, 2.5, 3.0, 4.5, 5.0};
  auto [lo, hi] = classify_extremes(labels, labels, 2.5, 1.0);
  CHECK(lo == 1.0);
  CHECK(hi == 1.0);

  // all predictions at mu: predicted class is always "not high"/"not low"
  std::vector<double> at_mu(labels.size(), 2.5);
  auto [lo2, hi2] = classify_extremes(at_mu, labels, 2.5, 1.0);
  int not_high = 0, not_low = 0;
  for (double l : labels) {
    if (!(l > 3.5)) ++not_high;
    if (!(l < 1.5)) ++not_low;
  }
  CHECK(hi2 == doctest::Approx(static_cast<double>(not_high) / labels.size()));
  CHECK(lo2 == doctest::Approx(static_cast<double>(not_low) / labels.size()));

  CHECK_THROWS_AS(classify_extremes(labels, labels, 2.5, 0.0), std::invalid_argument);
}

TEST_CASE("classify_extremes matches a brute-force recomputation on 20 samples") {
  // fixed fixture: 20 predictions/labels
  std::vector<double> labels{0.1, 0.4, 0.9, 1.2, 1.8, 2.0, 2.2, 2.5, 2.6, 2.8,
                             3.0, 3.1, 3.4, 3.7, 4.0, 4.2, 4.5, 4.7, 4.9, 5.0};
  std::vector<double> preds{0.3, 1.1, 0.7, 1.9, 1.5, 2.4, 2.1, 2.7, 2.2, 3.3,
                            2.9, 3.6, 3.2, 3.5, 4.4, 3.8, 4.1, 4.8, 4.6, 4.2};
  const double mu = 2.75, sigma = 1.25;
  auto [lo, hi] = classify_extremes(preds, labels, mu, sigma);

  int low_ok = 0, high_ok = 0;
  for (int i = 0; i < 20; ++i) {
    const bool t_hi = labels[i] > mu + sigma;
    const bool p_hi = preds[i] > mu + sigma;
    const bool t_lo = labels[i] < mu - sigma;
    const bool p_lo = preds[i] < mu - sigma;
    if (t_hi == p_hi) ++high_ok;
    if (t_lo == p_lo) ++low_ok;
  }
  CHECK(lo == doctest::Approx(low_ok / 20.0));
  CHECK(hi == doctest::Approx(high_ok / 20.0));
}

TEST_CASE("rating histogram") {
  Histogram h = rating_histogram(std::vector<double>(17, 2.6));
  CHECK(h.bins[10] == 17);  // [2.5, 2.75)
  int total = 0;
  for (int b : h.bins) total += b;
  CHECK(total == 17);
  CHECK(h.clamped == 0);

  Histogram h2 = rating_histogram({5.3, -0.2, 5.0, 0.0, 4.99});
  CHECK(h2.clamped == 2);
  CHECK(h2.bins[19] == 3);  // 5.3 clamped, 5.0 and 4.99 in range
  CHECK(h2.bins[0] == 2);   // -0.2 clamped, 0.0 in range
  total = 0;
  for (int b : h2.bins) total += b;
  CHECK(total == 5);
}

TEST_CASE("train_model fits constant labels and reports the protocol") {
  QualityDataset ds = constant_label_dataset(60, 0.5);
  Split split = split_dataset(ds, 2021);
  GloveTable glove = make_toy_glove(synthetic_vocabulary(), 8, 3);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.learning_rate = 0.05;  // run-to-criterion: enough step budget for the bias
  cfg.seed = 2021;

  TrainOutput out = train_model(ModelKind::EdfSolo, split, glove, cfg);
  CHECK(out.report.epochs.size() == 30);
  // schedule echoed per epoch: lr(e) = base * 0.7^floor(e/3)
  for (int e = 0; e < 30; ++e) {
    CHECK(out.report.epochs[e].learning_rate ==
          0.05 * std::pow(0.7, static_cast<double>(e / 3)));
  }
  // constant labels: the bias learns the constant
  CHECK(out.report.epochs.back().val_mse < 1e-4);

  // selected epoch is the argmin with earliest tie-break
  int argmin = 0;
  for (std::size_t e = 1; e < out.report.epochs.size(); ++e) {
    if (out.report.epochs[e].val_mse < out.report.epochs[argmin].val_mse) {
      argmin = static_cast<int>(e);
    }
  }
  CHECK(out.report.selected_epoch == argmin);
  CHECK(out.report.test_mse < 1e-4);
  CHECK(out.report.test_acc == 1.0);
}

TEST_CASE("train_model is deterministic given a seed") {
  SyntheticSpec spec;
  spec.signal = "length-linear";
  spec.n = 60;
  spec.noise_sigma = 0.05;
  SyntheticResult gen = generate_synthetic(spec, 3);
  Split split = split_dataset(gen.dataset, 2021);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.model.d_sf = 8;
  cfg.model.scqc_d_ff = 8;

  TrainOutput a = train_model(ModelKind::EdfEnriched, split, gen.glove, cfg);
  TrainOutput b = train_model(ModelKind::EdfEnriched, split, gen.glove, cfg);
  CHECK(a.report.test_mse == b.report.test_mse);
  CHECK(a.report.test_acc == b.report.test_acc);
  REQUIRE(a.test_predictions.size() == b.test_predictions.size());
  for (std::size_t i = 0; i < a.test_predictions.size(); ++i) {
    CHECK(a.test_predictions[i] == b.test_predictions[i]);
  }
  for (std::size_t e = 0; e < a.report.epochs.size(); ++e) {
    CHECK(a.report.epochs[e].train_loss == b.report.epochs[e].train_loss);
    CHECK(a.report.epochs[e].val_mse == b.report.epochs[e].val_mse);
  }
}

TEST_CASE("train_model aborts on NaN loss with a diagnostic") {
  QualityDataset ds = constant_label_dataset(40, 3.0);
  ds.records[0].average_rating = std::nan("");
  Split split;
  // put the poisoned record in train deterministically
  split.train.assign(ds.records.begin(), ds.records.begin() + 32);
  split.val.assign(ds.records.begin() + 32, ds.records.begin() + 36);
  split.test.assign(ds.records.begin() + 36, ds.records.end());
  GloveTable glove = make_toy_glove(synthetic_vocabulary(), 8, 3);
  TrainConfig cfg;
  cfg.epochs = 2;
  CHECK_THROWS_WITH_AS(train_model(ModelKind::EdfSolo, split, glove, cfg),
                       doctest::Contains("NaN loss at epoch"), std::runtime_error);
}

TEST_CASE("train_model rejects empty splits and missing qdqe") {
  QualityDataset ds = constant_label_dataset(20, 3.0);
  Split split = split_dataset(ds, 2021);
  GloveTable glove = make_toy_glove(synthetic_vocabulary(), 8, 3);
  TrainConfig cfg;
  Split empty = split;
  empty.val.clear();
  CHECK_THROWS_AS(train_model(ModelKind::EdfSolo, empty, glove, cfg), std::invalid_argument);
  CHECK_THROWS_WITH_AS(train_model(ModelKind::DeepQr, split, glove, cfg),
                       doctest::Contains("qdqe-pretrain"), std::invalid_argument);
}
