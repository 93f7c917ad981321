#include "aqqr/sf_encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace aqqr {

namespace {
constexpr int kPositions = 7;
}

MultiHeadLayer MultiHeadLayer::init(int dim, int heads, int d_ff, std::mt19937_64& rng) {
  if (heads < 1) throw std::invalid_argument("MultiHeadLayer: head count must be positive");
  if (dim % heads != 0) {
    throw std::invalid_argument("MultiHeadLayer: width " + std::to_string(dim) +
                                " is not divisible by " + std::to_string(heads) + " heads");
  }
  const int head_dim = dim / heads;
  MultiHeadLayer layer;
  for (int j = 0; j < heads; ++j) {
    layer.wq.push_back(Tensor::uniform_init({dim, head_dim}, dim, rng));
    layer.wk.push_back(Tensor::uniform_init({dim, head_dim}, dim, rng));
    layer.wv.push_back(Tensor::uniform_init({dim, head_dim}, dim, rng));
  }
  layer.wo = Tensor::uniform_init({dim, dim}, dim, rng);
  layer.w1 = Tensor::uniform_init({dim, d_ff}, dim, rng);
  layer.b1 = Tensor::zeros({d_ff}, true);
  layer.w2 = Tensor::uniform_init({d_ff, dim}, d_ff, rng);
  layer.b2 = Tensor::zeros({dim}, true);
  layer.ln1_gain = Tensor::full({dim}, 1.0, true);
  layer.ln1_bias = Tensor::zeros({dim}, true);
  layer.ln2_gain = Tensor::full({dim}, 1.0, true);
  layer.ln2_bias = Tensor::zeros({dim}, true);
  return layer;
}

void MultiHeadLayer::collect_parameters(std::vector<Tensor>& out) {
  for (auto* group : {&wq, &wk, &wv}) {
    for (Tensor& t : *group) out.push_back(t);
  }
  for (Tensor* t : {&wo, &w1, &b1, &w2, &b2, &ln1_gain, &ln1_bias, &ln2_gain, &ln2_bias}) {
    out.push_back(*t);
  }
}

MultiHeadLayer MultiHeadLayer::clone() const {
  MultiHeadLayer copy;
  for (const Tensor& t : wq) copy.wq.push_back(t.clone());
  for (const Tensor& t : wk) copy.wk.push_back(t.clone());
  for (const Tensor& t : wv) copy.wv.push_back(t.clone());
  copy.wo = wo.clone();
  copy.w1 = w1.clone();
  copy.b1 = b1.clone();
  copy.w2 = w2.clone();
  copy.b2 = b2.clone();
  copy.ln1_gain = ln1_gain.clone();
  copy.ln1_bias = ln1_bias.clone();
  copy.ln2_gain = ln2_gain.clone();
  copy.ln2_bias = ln2_bias.clone();
  return copy;
}

Tensor multi_head_attention(const Tensor& x, const MultiHeadLayer& layer,
                            AttentionTrace* trace) {
  if (x.shape().size() != 2 || x.cols() != layer.dim()) {
    throw std::invalid_argument("multi_head_attention: input " + shape_str(x.shape()) +
                                " does not match layer width " + std::to_string(layer.dim()));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(layer.dim()));
  std::vector<Tensor> heads;
  heads.reserve(layer.wq.size());
  for (std::size_t j = 0; j < layer.wq.size(); ++j) {
    Tensor q = matmul(x, layer.wq[j]);
    Tensor k = matmul(x, layer.wk[j]);
    Tensor v = matmul(x, layer.wv[j]);
    Tensor probs = softmax_rows(mul_scalar(matmul(q, transpose(k)), scale));
    if (trace) {
      std::array<double, 49> snap{};
      for (int i = 0; i < 49 && i < static_cast<int>(probs.size()); ++i) {
        snap[i] = probs.values()[i];
      }
      trace->head_probs.push_back(snap);
    }
    heads.push_back(matmul(probs, v));
  }
  return matmul(concat_cols(heads), layer.wo);
}

Tensor multi_head_layer_forward(const Tensor& x, const MultiHeadLayer& layer, bool training,
                                double dropout_p, std::mt19937_64& rng,
                                AttentionTrace* trace) {
  Tensor attn = multi_head_attention(x, layer, trace);
  Tensor y1 = layer_norm(add(x, dropout(attn, dropout_p, training, rng)), layer.ln1_gain,
                         layer.ln1_bias);
  Tensor ff = add_rowvec(
      matmul(relu(add_rowvec(matmul(y1, layer.w1), layer.b1)), layer.w2), layer.b2);
  return layer_norm(add(y1, dropout(ff, dropout_p, training, rng)), layer.ln2_gain,
                    layer.ln2_bias);
}

SfParams SfParams::init(int dim, int d_sf, int heads, std::mt19937_64& rng) {
  if (d_sf < 1) throw std::invalid_argument("SfParams: d_sf must be positive");
  SfParams p;
  const int d_ff = 4 * dim;
  p.layers = {MultiHeadLayer::init(dim, heads, d_ff, rng),
              MultiHeadLayer::init(dim, heads, d_ff, rng)};
  p.proj_w = Tensor::uniform_init({dim, d_sf}, dim, rng);
  p.proj_b = Tensor::zeros({d_sf}, true);
  return p;
}

std::vector<Tensor> SfParams::parameters() {
  std::vector<Tensor> out;
  for (auto& layer : layers) layer.collect_parameters(out);
  out.push_back(proj_w);
  out.push_back(proj_b);
  return out;
}

Tensor sf_forward(const ComponentEmbeddings& re, const SfParams& params, bool training,
                  double dropout_p, std::mt19937_64& rng) {
  if (re.matrix.rows() != kPositions || re.matrix.cols() != params.input_dim()) {
    throw std::invalid_argument("sf_forward: embeddings " + shape_str(re.matrix.shape()) +
                                " do not match encoder width " +
                                std::to_string(params.input_dim()));
  }
  Tensor x = re.matrix;
  for (const auto& layer : params.layers) {
    x = multi_head_layer_forward(x, layer, training, dropout_p, rng);
  }
  Tensor pooled = mean_rows(x);  // average over the 7 positions
  Tensor projected =
      add_rowvec(matmul(reshape(pooled, {1, params.input_dim()}), params.proj_w), params.proj_b);
  return reshape(projected, {params.feature_dim()});
}

}  // namespace aqqr
