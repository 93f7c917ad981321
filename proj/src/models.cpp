#include "aqqr/models.hpp"

#include <stdexcept>

namespace aqqr {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::EdfSolo: return "edf-solo";
    case ModelKind::EdfEnriched: return "edf-enriched";
    case ModelKind::Sf: return "sf";
    case ModelKind::Combined: return "combined";
    case ModelKind::DeepQr: return "deepqr";
  }
  throw std::logic_error("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "edf-solo") return ModelKind::EdfSolo;
  if (name == "edf-enriched") return ModelKind::EdfEnriched;
  if (name == "sf") return ModelKind::Sf;
  if (name == "combined") return ModelKind::Combined;
  if (name == "deepqr") return ModelKind::DeepQr;
  throw std::invalid_argument(
      "unknown model kind '" + name +
      "' (expected edf-solo, edf-enriched, sf, combined, or deepqr)");
}

PredictionHead PredictionHead::init(int width, std::mt19937_64& rng) {
  if (width < 1) throw std::invalid_argument("PredictionHead: width must be positive");
  PredictionHead head;
  head.w = Tensor::uniform_init({width, 1}, width, rng);
  head.b = Tensor::zeros({1}, true);
  return head;
}

int model_feature_width(ModelKind kind, const ModelConfig& cfg) {
  switch (kind) {
    case ModelKind::EdfSolo: return 18;
    case ModelKind::EdfEnriched: return 18 + cfg.d_scqc;
    case ModelKind::Sf: return cfg.d_sf;
    case ModelKind::Combined:
    case ModelKind::DeepQr: return 18 + cfg.d_scqc + cfg.d_sf;
  }
  throw std::logic_error("unknown model kind");
}

RatingModel RatingModel::init(ModelKind kind, int embed_dim, const ModelConfig& cfg,
                              std::mt19937_64& rng) {
  RatingModel m;
  m.kind = kind;
  m.config = cfg;
  const bool needs_scqc = kind == ModelKind::EdfEnriched || kind == ModelKind::Combined ||
                          kind == ModelKind::DeepQr;
  const bool needs_sf =
      kind == ModelKind::Sf || kind == ModelKind::Combined || kind == ModelKind::DeepQr;
  if (needs_scqc || needs_sf) {
    if (embed_dim < 1) {
      throw std::invalid_argument("RatingModel: embedding dimension required for " +
                                  to_string(kind));
    }
    m.embed_dim = embed_dim;
  }
  if (needs_scqc) m.scqc = ScqcParams::init(m.embed_dim, cfg.d_scqc, cfg.scqc_d_ff, rng);
  if (needs_sf) m.sf = SfParams::init(m.embed_dim, cfg.d_sf, cfg.sf_heads, rng);
  if (kind == ModelKind::DeepQr) m.qdqe = QdqeEncoder::init(m.embed_dim, cfg.sf_heads, rng);
  m.head = PredictionHead::init(model_feature_width(kind, cfg), rng);
  return m;
}

std::vector<Tensor> RatingModel::trainable_parameters() {
  std::vector<Tensor> out;
  if (scqc) {
    auto p = scqc->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  if (sf) {
    auto p = sf->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  if (qdqe && config.qdqe_finetune) {
    auto p = qdqe->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  out.push_back(head.w);
  out.push_back(head.b);
  return out;
}

std::vector<PreparedQuestion> prepare_questions(const RatingModel& model,
                                                const std::vector<McqRecord>& records,
                                                const GloveTable& glove) {
  std::vector<PreparedQuestion> out;
  out.reserve(records.size());
  HeuristicGrammarChecker default_checker;
  for (const auto& r : records) {
    PreparedQuestion q;
    q.id = r.id;
    q.label = r.has_label() ? r.label() : 0.0;
    if (model.uses_embeddings()) {
      ComponentEmbeddings re = pad_components(embed_question(r, glove), model.embed_dim);
      if (model.kind == ModelKind::DeepQr && !model.config.qdqe_finetune) {
        re = qdqe_component_embeddings(re, *model.qdqe);
      }
      q.re = std::move(re);
    }
    out.push_back(std::move(q));
  }
  return out;
}

namespace {

Tensor edf_constant(const std::array<double, 18>& edf_norm) {
  return Tensor::from_values({18}, std::vector<double>(edf_norm.begin(), edf_norm.end()));
}

Tensor head_apply(const PredictionHead& head, const Tensor& features) {
  // [1 x k] . [k x 1] + b
  Tensor row = reshape(features, {1, static_cast<int>(features.size())});
  return reshape(add_rowvec(matmul(row, head.w), head.b), {1});
}

}  // namespace

Tensor model_question_features(const RatingModel& model, const PreparedQuestion& q,
                               bool training, std::mt19937_64& rng,
                               std::array<double, 49>* co_out) {
  switch (model.kind) {
    case ModelKind::EdfSolo:
      return edf_constant(q.edf_norm);
    case ModelKind::EdfEnriched: {
      ScqcOutput scqc = scqc_forward(q.re, *model.scqc, training, model.config.dropout_p, rng);
      if (co_out) *co_out = scqc.co_matrix;
      return concat_vec({edf_constant(q.edf_norm), scqc.feature});
    }
    case ModelKind::Sf:
      return sf_forward(q.re, *model.sf, training, model.config.dropout_p, rng);
    case ModelKind::Combined:
    case ModelKind::DeepQr: {
      ComponentEmbeddings re = q.re;
      if (model.kind == ModelKind::DeepQr && model.config.qdqe_finetune) {
        re.matrix = qdqe_encode_matrix(q.re.matrix, *model.qdqe, training,
                                       model.config.dropout_p, rng);
      }
      ScqcOutput scqc = scqc_forward(re, *model.scqc, training, model.config.dropout_p, rng);
      if (co_out) *co_out = scqc.co_matrix;
      Tensor sf = sf_forward(re, *model.sf, training, model.config.dropout_p, rng);
      return concat_vec({edf_constant(q.edf_norm), scqc.feature, sf});
    }
  }
  throw std::logic_error("unknown model kind");
}

Tensor model_predict_batch(const RatingModel& model,
                           const std::vector<const PreparedQuestion*>& batch, bool training,
                           std::mt19937_64& rng) {
  if (batch.empty()) throw std::invalid_argument("model_predict_batch: empty batch");
  std::vector<Tensor> rows;
  rows.reserve(batch.size());
  for (const PreparedQuestion* q : batch) {
    rows.push_back(model_question_features(model, *q, training, rng));
  }
  Tensor features = stack_rows(rows);  // [B x k]
  return add_rowvec(matmul(features, model.head.w), model.head.b);
}

double model_predict_one(const RatingModel& model, const PreparedQuestion& q) {
  NoGradGuard guard;
  std::mt19937_64 unused(0);
  Tensor features = model_question_features(model, q, false, unused);
  return head_apply(model.head, features).value();
}

Tensor predict_edf_solo(const std::array<double, 18>& edf_norm, const PredictionHead& head) {
  if (head.width() != 18) {
    throw std::invalid_argument("predict_edf_solo: head width " + std::to_string(head.width()) +
                                " != 18");
  }
  return head_apply(head, edf_constant(edf_norm));
}

Tensor predict_edf_enriched(const std::array<double, 18>& edf_norm, const Tensor& scqc_feature,
                            const PredictionHead& head) {
  const int width = 18 + static_cast<int>(scqc_feature.size());
  if (head.width() != width) {
    throw std::invalid_argument("predict_edf_enriched: head width " +
                                std::to_string(head.width()) + " != " + std::to_string(width));
  }
  return head_apply(head, concat_vec({edf_constant(edf_norm), scqc_feature}));
}

Tensor predict_sf(const Tensor& sf_feature, const PredictionHead& head) {
  if (head.width() != static_cast<int>(sf_feature.size())) {
    throw std::invalid_argument("predict_sf: head width " + std::to_string(head.width()) +
                                " != " + std::to_string(sf_feature.size()));
  }
  return head_apply(head, sf_feature);
}

Tensor predict_combined(const std::array<double, 18>& edf_norm, const Tensor& scqc_feature,
                        const Tensor& sf_feature, const PredictionHead& head) {
  const int width = 18 + static_cast<int>(scqc_feature.size() + sf_feature.size());
  if (head.width() != width) {
    throw std::invalid_argument("predict_combined: head width " + std::to_string(head.width()) +
                                " != " + std::to_string(width));
  }
  return head_apply(head, concat_vec({edf_constant(edf_norm), scqc_feature, sf_feature}));
}

}  // namespace aqqr
