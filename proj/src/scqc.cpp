#include "aqqr/scqc.hpp"

#include <cmath>
#include <stdexcept>

namespace aqqr {

namespace {
constexpr int kComponents = 7;
}

ScqcLayer ScqcLayer::init(int d_ff, std::mt19937_64& rng) {
  if (d_ff < 1) throw std::invalid_argument("ScqcLayer: d_ff must be positive");
  ScqcLayer layer;
  layer.wq = Tensor::uniform_init({kComponents, kComponents}, kComponents, rng);
  layer.wk = Tensor::uniform_init({kComponents, kComponents}, kComponents, rng);
  layer.wv = Tensor::uniform_init({kComponents, kComponents}, kComponents, rng);
  layer.w1 = Tensor::uniform_init({kComponents, d_ff}, kComponents, rng);
  layer.b1 = Tensor::zeros({d_ff}, true);
  layer.w2 = Tensor::uniform_init({d_ff, kComponents}, d_ff, rng);
  layer.b2 = Tensor::zeros({kComponents}, true);
  layer.ln1_gain = Tensor::full({kComponents}, 1.0, true);
  layer.ln1_bias = Tensor::zeros({kComponents}, true);
  layer.ln2_gain = Tensor::full({kComponents}, 1.0, true);
  layer.ln2_bias = Tensor::zeros({kComponents}, true);
  return layer;
}

void ScqcLayer::collect_parameters(std::vector<Tensor>& out) {
  for (Tensor* t : {&wq, &wk, &wv, &w1, &b1, &w2, &b2, &ln1_gain, &ln1_bias, &ln2_gain,
                    &ln2_bias}) {
    out.push_back(*t);
  }
}

ScqcParams ScqcParams::init(int input_dim, int d_scqc, int d_ff, std::mt19937_64& rng) {
  if (input_dim < 1 || d_scqc < 1) {
    throw std::invalid_argument("ScqcParams: dimensions must be positive");
  }
  ScqcParams p;
  p.w = Tensor::uniform_init({input_dim, input_dim}, input_dim, rng);
  p.layers = {ScqcLayer::init(d_ff, rng), ScqcLayer::init(d_ff, rng)};
  p.proj_w = Tensor::uniform_init({kComponents, d_scqc}, kComponents, rng);
  p.proj_b = Tensor::zeros({d_scqc}, true);
  return p;
}

std::vector<Tensor> ScqcParams::parameters() {
  std::vector<Tensor> out;
  out.push_back(w);
  for (auto& layer : layers) layer.collect_parameters(out);
  out.push_back(proj_w);
  out.push_back(proj_b);
  return out;
}

Tensor correlation_attention(const Tensor& re, const Tensor& w) {
  if (re.shape().size() != 2 || re.rows() != kComponents) {
    throw std::invalid_argument("correlation_attention: embeddings must be [7 x d], got " +
                                shape_str(re.shape()));
  }
  if (w.shape() != Shape{re.cols(), re.cols()}) {
    throw std::invalid_argument("correlation_attention: weight " + shape_str(w.shape()) +
                                " does not match embeddings " + shape_str(re.shape()));
  }
  return softmax_rows(matmul(matmul(re, w), transpose(re)));
}

Tensor scqc_transformer_layer(const Tensor& x, const ScqcLayer& layer, bool training,
                              double dropout_p, std::mt19937_64& rng) {
  if (x.shape() != Shape{kComponents, kComponents}) {
    throw std::invalid_argument("scqc_transformer_layer: expected [7 x 7], got " +
                                shape_str(x.shape()));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(kComponents));
  Tensor q = matmul(x, layer.wq);
  Tensor k = matmul(x, layer.wk);
  Tensor v = matmul(x, layer.wv);
  Tensor attn = matmul(softmax_rows(mul_scalar(matmul(q, transpose(k)), scale)), v);
  Tensor y1 = layer_norm(add(x, dropout(attn, dropout_p, training, rng)), layer.ln1_gain,
                         layer.ln1_bias);
  Tensor ff = add_rowvec(
      matmul(relu(add_rowvec(matmul(y1, layer.w1), layer.b1)), layer.w2), layer.b2);
  return layer_norm(add(y1, dropout(ff, dropout_p, training, rng)), layer.ln2_gain,
                    layer.ln2_bias);
}

ScqcOutput scqc_forward(const ComponentEmbeddings& re, const ScqcParams& params,
                        bool training, double dropout_p, std::mt19937_64& rng) {
  ScqcOutput out;
  Tensor co = correlation_attention(re.matrix, params.w);
  for (int i = 0; i < 49; ++i) out.co_matrix[i] = co.values()[i];
  Tensor x = co;
  for (const auto& layer : params.layers) {
    x = scqc_transformer_layer(x, layer, training, dropout_p, rng);
  }
  Tensor per_component = mean_cols(x);  // average attention score per component
  Tensor projected = add_rowvec(matmul(reshape(per_component, {1, kComponents}), params.proj_w),
                                params.proj_b);
  out.feature = reshape(projected, {params.feature_dim()});
  return out;
}

}  // namespace aqqr
