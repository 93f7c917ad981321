#pragma once

#include <array>
#include <string>
#include <vector>

#include "aqqr/data_io.hpp"
#include "aqqr/models.hpp"
#include "aqqr/qdqe.hpp"

namespace aqqr {

/// 8:1:1 split by shuffled indices: floor(0.8n) / floor(0.1n) / remainder.
struct Split {
  std::vector<McqRecord> train;
  std::vector<McqRecord> val;
  std::vector<McqRecord> test;

  std::vector<double> all_labels() const;
};

Split split_dataset(const QualityDataset& dataset, unsigned long long seed);

struct TrainConfig {
  int epochs = 50;
  int batch_size = 16;
  double learning_rate = 1e-3;
  int lr_step_size = 3;
  double lr_gamma = 0.7;
  unsigned long long seed = 2021;
  ModelConfig model;
};

struct EpochStats {
  double train_loss = 0;
  double val_mse = 0;
  double learning_rate = 0;
  double wall_seconds = 0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int selected_epoch = -1;  // minimizes validation MSE, earliest on ties
  double test_mse = 0;
  double test_acc = 0;
  double low_accuracy = 0;
  double high_accuracy = 0;
};

struct TrainOutput {
  RatingModel model;
  TrainReport report;
  std::vector<double> test_predictions;
  std::vector<double> test_labels;
};

/// MSE training with Adam, step-decay schedule, batch size with the last
/// partial batch kept, dropout in training mode only, and best-validation
/// parameter restore. Aborts with a diagnostic on NaN loss. `lists` feeds
/// the readability features; pass the same lists at evaluation time.
TrainOutput train_model(ModelKind kind, const Split& split, const GloveTable& glove,
                        const TrainConfig& cfg, const QdqeEncoder* qdqe = nullptr,
                        const WordLists* lists = nullptr);

/// (MSE, ACC); a prediction is correct when |error| <= 0.25, boundary
/// inclusive.
std::pair<double, double> evaluate(const std::vector<double>& predictions,
                                   const std::vector<double>& labels);

/// High/low extreme classification against mu +/- sigma thresholds computed
/// on the full dataset's labels. Returns (low accuracy, high accuracy).
std::pair<double, double> classify_extremes(const std::vector<double>& predictions,
                                            const std::vector<double>& labels, double mu,
                                            double sigma);

struct Histogram {
  std::array<int, 20> bins{};  // width 0.25 over [0, 5]
  int clamped = 0;             // out-of-range values forced into edge bins
};

Histogram rating_histogram(const std::vector<double>& values);

}  // namespace aqqr
