#pragma once

#include <array>
#include <random>
#include <vector>

#include "aqqr/embeddings.hpp"
#include "aqqr/tensor.hpp"

namespace aqqr {

/// Optional capture of attention probabilities for inspection/testing.
struct AttentionTrace {
  // one [7 x 7] row-major matrix per head
  std::vector<std::array<double, 49>> head_probs;
};

/// One multi-head encoder layer at width d (d divisible by the head count).
struct MultiHeadLayer {
  std::vector<Tensor> wq, wk, wv;  // per head: d x (d/h)
  Tensor wo;                       // d x d
  Tensor w1, b1;                   // d x d_ff, [d_ff]
  Tensor w2, b2;                   // d_ff x d, [d]
  Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias;  // [d]

  static MultiHeadLayer init(int dim, int heads, int d_ff, std::mt19937_64& rng);
  void collect_parameters(std::vector<Tensor>& out);
  MultiHeadLayer clone() const;
  int dim() const { return wo.rows(); }
  int heads() const { return static_cast<int>(wq.size()); }
};

/// Scaled dot-product self-attention per head (scaling by sqrt of the full
/// model width), heads concatenated and projected by wo.
Tensor multi_head_attention(const Tensor& x, const MultiHeadLayer& layer,
                            AttentionTrace* trace = nullptr);

/// Residual + layer-norm around attention and feed-forward sub-layers,
/// dropout on each sub-layer output while training.
Tensor multi_head_layer_forward(const Tensor& x, const MultiHeadLayer& layer, bool training,
                                double dropout_p, std::mt19937_64& rng,
                                AttentionTrace* trace = nullptr);

/// Semantic-feature extractor: 2 multi-head layers over the 7 component
/// embeddings, mean-pooled over positions, linearly projected to d_sf.
struct SfParams {
  std::array<MultiHeadLayer, 2> layers;
  Tensor proj_w;  // d x d_sf
  Tensor proj_b;  // [d_sf]

  static SfParams init(int dim, int d_sf, int heads, std::mt19937_64& rng);
  std::vector<Tensor> parameters();
  int feature_dim() const { return proj_w.cols(); }
  int input_dim() const { return proj_w.rows(); }
};

Tensor sf_forward(const ComponentEmbeddings& re, const SfParams& params, bool training,
                  double dropout_p, std::mt19937_64& rng);

}  // namespace aqqr
