#pragma once

#include <random>
#include <string>
#include <vector>

#include "aqqr/embeddings.hpp"
#include "aqqr/mcq.hpp"
#include "aqqr/sf_encoder.hpp"
#include "aqqr/tensor.hpp"

namespace aqqr {

struct Triple {
  std::string anchor_id;
  std::string pos_id;
  std::string neg_id;
  bool from_high = false;  // anchor/pos drawn from the high-rated extreme set
};

struct TripleSet {
  std::vector<Triple> triples;
  int c = 0;

  std::size_t size() const { return triples.size(); }
};

/// Contrastive triples from rating extremes: the c lowest- and c highest-
/// rated questions (ties broken by ascending id) form S_L and S_H; every
/// ordered pair within a set is matched with one random negative from the
/// opposite set. Yields exactly 2c(c-1) triples.
TripleSet build_triples(const std::vector<McqRecord>& records, int c, std::mt19937_64& rng);

/// One-layer transformer encoder fine-tuned with the contrastive loss.
struct QdqeEncoder {
  MultiHeadLayer layer;

  static QdqeEncoder init(int dim, int heads, std::mt19937_64& rng);
  std::vector<Tensor> parameters();
  int dim() const { return layer.dim(); }
};

/// Encoded 7 x d matrix for one question.
Tensor qdqe_encode_matrix(const Tensor& re, const QdqeEncoder& encoder, bool training,
                          double dropout_p, std::mt19937_64& rng);

/// Column means of the encoded matrix: the question's d-dim embedding.
Tensor encode_question(const ComponentEmbeddings& re, const QdqeEncoder& encoder,
                       bool training, double dropout_p, std::mt19937_64& rng);

/// Frozen-encoder component embeddings for downstream rating models: the
/// 7 x d encoded matrix before pooling, as a constant.
ComponentEmbeddings qdqe_component_embeddings(const ComponentEmbeddings& re,
                                              const QdqeEncoder& encoder);

/// Two-term InfoNCE over cosine similarities at temperature tau.
Tensor info_nce(const Tensor& anchor, const Tensor& pos, const Tensor& neg, double tau);

struct QdqeTrainConfig {
  int c_train = 80;
  int c_val = 20;
  double tau = 0.07;
  int epochs = 10;
  double learning_rate = 1e-3;
  int lr_step_size = 3;
  double lr_gamma = 0.7;
  double dropout_p = 0.5;
  int heads = 4;
};

struct QdqeTrainResult {
  QdqeEncoder encoder;
  std::vector<double> train_losses;
  std::vector<double> val_losses;
  int selected_epoch = -1;
};

/// Contrastive pre-training: batch size 1 over the triple set, Adam with the
/// step schedule, parameters restored from the epoch with the lowest
/// validation InfoNCE (earliest on ties).
QdqeTrainResult train_qdqe(const std::vector<McqRecord>& train,
                           const std::vector<McqRecord>& val, const GloveTable& glove,
                           const QdqeTrainConfig& cfg, std::mt19937_64& rng);

/// Fraction of triples with cos(a, pos) > cos(a, neg) under the encoder.
double triple_accuracy(const std::vector<McqRecord>& records, const TripleSet& triples,
                       const GloveTable& glove, const QdqeEncoder& encoder);

}  // namespace aqqr
