#pragma once

#include <array>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "aqqr/embeddings.hpp"
#include "aqqr/qdqe.hpp"
#include "aqqr/scqc.hpp"
#include "aqqr/sf_encoder.hpp"
#include "aqqr/tensor.hpp"
#include "aqqr/text_features.hpp"

namespace aqqr {

enum class ModelKind { EdfSolo, EdfEnriched, Sf, Combined, DeepQr };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// Final linear layer: rating = w . features + b, unclamped.
struct PredictionHead {
  Tensor w;  // [width x 1]
  Tensor b;  // [1]

  static PredictionHead init(int width, std::mt19937_64& rng);
  int width() const { return w.rows(); }
};

struct ModelConfig {
  int d_scqc = 7;
  int d_sf = 16;
  int sf_heads = 4;
  int scqc_d_ff = 28;
  double dropout_p = 0.5;
  bool qdqe_finetune = false;
};

/// Feature width consumed by the prediction head for a given kind.
int model_feature_width(ModelKind kind, const ModelConfig& cfg);

/// One of the five rating models. Branch parameters exist only where the
/// architecture uses them; the head width is fixed at construction.
struct RatingModel {
  ModelKind kind = ModelKind::EdfSolo;
  ModelConfig config;
  int embed_dim = 0;  // transformer input width (padded embedding dim); 0 when unused
  std::optional<ScqcParams> scqc;
  std::optional<SfParams> sf;
  std::optional<QdqeEncoder> qdqe;  // DeepQr only
  PredictionHead head;
  FeatureStats stats;

  static RatingModel init(ModelKind kind, int embed_dim, const ModelConfig& cfg,
                          std::mt19937_64& rng);
  /// All tensors updated by the optimizer (includes the QDQE encoder only
  /// when config.qdqe_finetune is set).
  std::vector<Tensor> trainable_parameters();

  bool uses_embeddings() const { return kind != ModelKind::EdfSolo; }
  bool uses_edf() const { return kind != ModelKind::Sf; }
};

/// Per-question inputs, precomputed once per split. For a frozen-encoder
/// DeepQr model `re` already holds the QDQE-encoded components.
struct PreparedQuestion {
  std::string id;
  std::array<double, 18> edf_norm{};
  ComponentEmbeddings re;  // padded to the model width; undefined for EdfSolo
  double label = 0;
};

std::vector<PreparedQuestion> prepare_questions(const RatingModel& model,
                                                const std::vector<McqRecord>& records,
                                                const GloveTable& glove);

/// Differentiable feature vector for one question (width per model kind);
/// also exposes the SCQC attention matrix when `co_out` is given.
Tensor model_question_features(const RatingModel& model, const PreparedQuestion& q,
                               bool training, std::mt19937_64& rng,
                               std::array<double, 49>* co_out = nullptr);

/// Predictions for a batch: [B x 1].
Tensor model_predict_batch(const RatingModel& model,
                           const std::vector<const PreparedQuestion*>& batch, bool training,
                           std::mt19937_64& rng);

double model_predict_one(const RatingModel& model, const PreparedQuestion& q);

// Thin per-kind entry points mirroring the model contracts.
Tensor predict_edf_solo(const std::array<double, 18>& edf_norm, const PredictionHead& head);
Tensor predict_edf_enriched(const std::array<double, 18>& edf_norm, const Tensor& scqc_feature,
                            const PredictionHead& head);
Tensor predict_sf(const Tensor& sf_feature, const PredictionHead& head);
Tensor predict_combined(const std::array<double, 18>& edf_norm, const Tensor& scqc_feature,
                        const Tensor& sf_feature, const PredictionHead& head);

}  // namespace aqqr
