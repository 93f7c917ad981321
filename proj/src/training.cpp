#include "aqqr/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "aqqr/optim.hpp"

namespace aqqr {

std::vector<double> Split::all_labels() const {
  std::vector<double> labels;
  labels.reserve(train.size() + val.size() + test.size());
  for (const auto* part : {&train, &val, &test}) {
    for (const auto& r : *part) labels.push_back(r.label());
  }
  return labels;
}

Split split_dataset(const QualityDataset& dataset, unsigned long long seed) {
  const std::size_t n = dataset.records.size();
  if (n < 3) throw std::invalid_argument("split_dataset: need at least 3 records");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::size_t n_train = static_cast<std::size_t>(0.8 * static_cast<double>(n));
  const std::size_t n_val = static_cast<std::size_t>(0.1 * static_cast<double>(n));
  Split split;
  for (std::size_t i = 0; i < n; ++i) {
    const McqRecord& r = dataset.records[idx[i]];
    if (i < n_train) {
      split.train.push_back(r);
    } else if (i < n_train + n_val) {
      split.val.push_back(r);
    } else {
      split.test.push_back(r);
    }
  }
  return split;
}

std::pair<double, double> evaluate(const std::vector<double>& predictions,
                                   const std::vector<double>& labels) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("evaluate: got " + std::to_string(predictions.size()) +
                                " predictions for " + std::to_string(labels.size()) +
                                " labels");
  }
  if (predictions.empty()) throw std::invalid_argument("evaluate: empty input");
  double mse = 0;
  int correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double err = predictions[i] - labels[i];
    mse += err * err;
    if (std::abs(err) <= 0.25) ++correct;
  }
  mse /= static_cast<double>(predictions.size());
  return {mse, static_cast<double>(correct) / static_cast<double>(predictions.size())};
}

std::pair<double, double> classify_extremes(const std::vector<double>& predictions,
                                            const std::vector<double>& labels, double mu,
                                            double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("classify_extremes: sigma must be positive");
  if (predictions.size() != labels.size() || predictions.empty()) {
    throw std::invalid_argument("classify_extremes: prediction/label size mismatch");
  }
  const double hi = mu + sigma, lo = mu - sigma;
  int low_correct = 0, high_correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool truth_high = labels[i] > hi;
    const bool truth_low = labels[i] < lo;
    const bool pred_high = predictions[i] > hi;
    const bool pred_low = predictions[i] < lo;
    if (truth_high == pred_high) ++high_correct;
    if (truth_low == pred_low) ++low_correct;
  }
  const double n = static_cast<double>(predictions.size());
  return {low_correct / n, high_correct / n};
}

Histogram rating_histogram(const std::vector<double>& values) {
  Histogram h;
  for (double v : values) {
    int bin = static_cast<int>(std::floor(v / 0.25));
    if (bin < 0) {
      bin = 0;
      ++h.clamped;
    } else if (bin > 19) {
      if (v > 5.0) ++h.clamped;  // exactly 5.0 belongs to the last bin
      bin = 19;
    }
    ++h.bins[bin];
  }
  return h;
}

namespace {

std::array<double, 18> normalized_edf(const McqRecord& r, const FeatureStats& stats,
                                      const WordLists& lists) {
  HeuristicGrammarChecker checker;
  return normalize_edf(extract_edf(r, checker, lists), stats);
}

double validation_mse(const RatingModel& model, const std::vector<PreparedQuestion>& qs) {
  NoGradGuard guard;
  std::vector<double> preds, labels;
  preds.reserve(qs.size());
  labels.reserve(qs.size());
  for (const auto& q : qs) {
    preds.push_back(model_predict_one(model, q));
    labels.push_back(q.label);
  }
  return evaluate(preds, labels).first;
}

}  // namespace

TrainOutput train_model(ModelKind kind, const Split& split, const GloveTable& glove,
                        const TrainConfig& cfg, const QdqeEncoder* qdqe,
                        const WordLists* lists_in) {
  if (split.train.empty() || split.val.empty() || split.test.empty()) {
    throw std::invalid_argument("train_model: empty train/val/test split");
  }
  if (kind == ModelKind::DeepQr && qdqe == nullptr) {
    throw std::invalid_argument(
        "train_model: deepqr requires a pre-trained QDQE encoder (run qdqe-pretrain first)");
  }
  if (kind == ModelKind::DeepQr && qdqe->dim() != glove.padded_dim()) {
    throw std::invalid_argument("train_model: QDQE encoder width " +
                                std::to_string(qdqe->dim()) +
                                " does not match embedding width " +
                                std::to_string(glove.padded_dim()));
  }

  std::mt19937_64 rng(cfg.seed);
  TrainOutput out;
  out.model = RatingModel::init(kind, glove.padded_dim(), cfg.model, rng);
  if (kind == ModelKind::DeepQr) out.model.qdqe = QdqeEncoder{qdqe->layer.clone()};

  // normalization statistics come from the training split only
  const WordLists lists = lists_in ? *lists_in : WordLists::builtin();
  {
    HeuristicGrammarChecker checker;
    std::vector<EdfVector> train_edfs;
    train_edfs.reserve(split.train.size());
    for (const auto& r : split.train) train_edfs.push_back(extract_edf(r, checker, lists));
    out.model.stats = FeatureStats::fit(train_edfs);
  }

  auto prepare = [&](const std::vector<McqRecord>& records) {
    std::vector<PreparedQuestion> qs = prepare_questions(out.model, records, glove);
    if (out.model.uses_edf()) {
      for (std::size_t i = 0; i < records.size(); ++i) {
        qs[i].edf_norm = normalized_edf(records[i], out.model.stats, lists);
      }
    }
    return qs;
  };
  std::vector<PreparedQuestion> train_qs = prepare(split.train);
  std::vector<PreparedQuestion> val_qs = prepare(split.val);
  std::vector<PreparedQuestion> test_qs = prepare(split.test);

  std::vector<Tensor> params = out.model.trainable_parameters();
  AdamState adam;
  StepSchedule schedule{cfg.lr_step_size, cfg.lr_gamma, cfg.learning_rate};

  std::vector<std::size_t> order(train_qs.size());
  std::iota(order.begin(), order.end(), 0);

  double best_val = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_snapshot;
  int best_epoch = -1;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    adam.learning_rate = schedule.rate(epoch);
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<const PreparedQuestion*> batch;
      std::vector<double> labels;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(&train_qs[order[i]]);
        labels.push_back(train_qs[order[i]].label);
      }
      Tape::active().reset();
      Tensor preds = model_predict_batch(out.model, batch, true, rng);
      Tensor target = Tensor::from_values({static_cast<int>(labels.size()), 1}, labels);
      Tensor err = sub(preds, target);
      Tensor loss = mean_all(mul(err, err));
      if (std::isnan(loss.value())) {
        throw std::runtime_error("train_model: NaN loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(batches));
      }
      epoch_loss += loss.value();
      backward(loss);
      adam_step(params, adam);
      ++batches;
    }
    Tape::active().reset();

    EpochStats stats;
    stats.train_loss = batches ? epoch_loss / static_cast<double>(batches) : 0.0;
    stats.val_mse = validation_mse(out.model, val_qs);
    stats.learning_rate = adam.learning_rate;
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    out.report.epochs.push_back(stats);

    if (stats.val_mse < best_val) {
      best_val = stats.val_mse;
      best_epoch = epoch;
      best_snapshot.clear();
      for (const Tensor& t : params) best_snapshot.push_back(t.values());
    }
  }

  for (std::size_t i = 0; i < params.size(); ++i) params[i].values() = best_snapshot[i];
  out.report.selected_epoch = best_epoch;

  for (const auto& q : test_qs) {
    out.test_predictions.push_back(model_predict_one(out.model, q));
    out.test_labels.push_back(q.label);
  }
  const auto [mse, acc] = evaluate(out.test_predictions, out.test_labels);
  out.report.test_mse = mse;
  out.report.test_acc = acc;

  const std::vector<double> all = split.all_labels();
  double mu = 0;
  for (double v : all) mu += v;
  mu /= static_cast<double>(all.size());
  double var = 0;
  for (double v : all) var += (v - mu) * (v - mu);
  const double sigma = std::sqrt(var / static_cast<double>(all.size()));
  if (sigma > 0) {
    const auto [low_acc, high_acc] =
        classify_extremes(out.test_predictions, out.test_labels, mu, sigma);
    out.report.low_accuracy = low_acc;
    out.report.high_accuracy = high_acc;
  }
  return out;
}

}  // namespace aqqr
