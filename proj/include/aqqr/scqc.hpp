#pragma once

#include <array>
#include <random>
#include <vector>

#include "aqqr/embeddings.hpp"
#include "aqqr/tensor.hpp"

namespace aqqr {

/// One single-head encoder layer at width 7 (the Co matrix is consumed as a
/// sequence of seven 7-vectors).
struct ScqcLayer {
  Tensor wq, wk, wv;  // 7 x 7
  Tensor w1, b1;      // 7 x d_ff, [d_ff]
  Tensor w2, b2;      // d_ff x 7, [7]
  Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias;  // [7]

  static ScqcLayer init(int d_ff, std::mt19937_64& rng);
  void collect_parameters(std::vector<Tensor>& out);
};

/// Semantic correlation of question components: trainable correlation
/// attention, a 2-layer transformer encoder over the 7x7 score matrix, and
/// a linear reduction to the SCQC feature.
struct ScqcParams {
  Tensor w;  // input_dim x input_dim correlation weight
  std::array<ScqcLayer, 2> layers;
  Tensor proj_w;  // 7 x d_scqc
  Tensor proj_b;  // [d_scqc]

  static ScqcParams init(int input_dim, int d_scqc, int d_ff, std::mt19937_64& rng);
  std::vector<Tensor> parameters();
  int feature_dim() const { return proj_w.cols(); }
  int input_dim() const { return w.rows(); }
};

struct ScqcOutput {
  std::array<double, 49> co_matrix;  // pre-encoder attention scores, row-major
  Tensor feature;                    // [d_scqc]
};

/// Co = softmax_rows(Re W Re^T), rows indexed by query component.
Tensor correlation_attention(const Tensor& re, const Tensor& w);

Tensor scqc_transformer_layer(const Tensor& x, const ScqcLayer& layer, bool training,
                              double dropout_p, std::mt19937_64& rng);

ScqcOutput scqc_forward(const ComponentEmbeddings& re, const ScqcParams& params,
                        bool training, double dropout_p, std::mt19937_64& rng);

}  // namespace aqqr
