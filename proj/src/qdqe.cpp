#include "aqqr/qdqe.hpp"

#include <limits>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "aqqr/optim.hpp"

namespace aqqr {

TripleSet build_triples(const std::vector<McqRecord>& records, int c, std::mt19937_64& rng) {
  const int n = static_cast<int>(records.size());
  if (n < 4) {
    throw std::invalid_argument("build_triples: need at least 4 questions, got " +
                                std::to_string(n));
  }
  if (c < 1 || 2 * c >= n) {
    throw std::invalid_argument("build_triples: extreme-set size c=" + std::to_string(c) +
                                " must satisfy 1 <= c < n/2 for n=" + std::to_string(n) +
                                "; choose a smaller c");
  }
  std::vector<const McqRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const McqRecord* a, const McqRecord* b) {
    const double la = a->label(), lb = b->label();
    if (la != lb) return la < lb;
    return a->id < b->id;
  });

  std::vector<const McqRecord*> low(sorted.begin(), sorted.begin() + c);
  std::vector<const McqRecord*> high(sorted.end() - c, sorted.end());

  TripleSet set;
  set.c = c;
  set.triples.reserve(2 * static_cast<std::size_t>(c) * (c - 1));
  std::uniform_int_distribution<int> pick(0, c - 1);
  auto emit_pairs = [&](const std::vector<const McqRecord*>& same,
                        const std::vector<const McqRecord*>& other, bool from_high) {
    for (int i = 0; i < c; ++i) {
      for (int j = 0; j < c; ++j) {
        if (i == j) continue;
        set.triples.push_back(
            {same[i]->id, same[j]->id, other[pick(rng)]->id, from_high});
      }
    }
  };
  emit_pairs(low, high, false);
  emit_pairs(high, low, true);
  return set;
}

QdqeEncoder QdqeEncoder::init(int dim, int heads, std::mt19937_64& rng) {
  QdqeEncoder enc;
  enc.layer = MultiHeadLayer::init(dim, heads, 4 * dim, rng);
  return enc;
}

std::vector<Tensor> QdqeEncoder::parameters() {
  std::vector<Tensor> out;
  layer.collect_parameters(out);
  return out;
}

Tensor qdqe_encode_matrix(const Tensor& re, const QdqeEncoder& encoder, bool training,
                          double dropout_p, std::mt19937_64& rng) {
  return multi_head_layer_forward(re, encoder.layer, training, dropout_p, rng);
}

Tensor encode_question(const ComponentEmbeddings& re, const QdqeEncoder& encoder,
                       bool training, double dropout_p, std::mt19937_64& rng) {
  return mean_rows(qdqe_encode_matrix(re.matrix, encoder, training, dropout_p, rng));
}

ComponentEmbeddings qdqe_component_embeddings(const ComponentEmbeddings& re,
                                              const QdqeEncoder& encoder) {
  NoGradGuard guard;
  std::mt19937_64 unused(0);
  Tensor encoded = qdqe_encode_matrix(re.matrix, encoder, false, 0.0, unused);
  return ComponentEmbeddings{Tensor::from_values(encoded.shape(), encoded.values())};
}

Tensor info_nce(const Tensor& anchor, const Tensor& pos, const Tensor& neg, double tau) {
  if (tau <= 0.0) {
    throw std::invalid_argument("info_nce: temperature must be positive, got " +
                                std::to_string(tau));
  }
  Tensor sim_pos = cosine_sim(anchor, pos);
  Tensor sim_neg = cosine_sim(anchor, neg);
  // -log(e^{sp/t} / (e^{sp/t} + e^{sn/t})) == softplus((sn - sp)/t)
  return softplus(mul_scalar(sub(sim_neg, sim_pos), 1.0 / tau));
}

namespace {

using EmbeddingCache = std::unordered_map<std::string, ComponentEmbeddings>;

EmbeddingCache cache_embeddings(const std::vector<McqRecord>& records,
                                const GloveTable& glove, int width) {
  EmbeddingCache cache;
  for (const auto& r : records) {
    cache.emplace(r.id, pad_components(embed_question(r, glove), width));
  }
  return cache;
}

double eval_mean_loss(const TripleSet& triples, const EmbeddingCache& cache,
                      const QdqeEncoder& encoder, double tau) {
  if (triples.triples.empty()) return 0.0;
  NoGradGuard guard;
  std::mt19937_64 unused(0);
  double total = 0.0;
  for (const auto& t : triples.triples) {
    Tensor a = encode_question(cache.at(t.anchor_id), encoder, false, 0.0, unused);
    Tensor p = encode_question(cache.at(t.pos_id), encoder, false, 0.0, unused);
    Tensor n = encode_question(cache.at(t.neg_id), encoder, false, 0.0, unused);
    total += info_nce(a, p, n, tau).value();
  }
  return total / static_cast<double>(triples.triples.size());
}

}  // namespace

QdqeTrainResult train_qdqe(const std::vector<McqRecord>& train,
                           const std::vector<McqRecord>& val, const GloveTable& glove,
                           const QdqeTrainConfig& cfg, std::mt19937_64& rng) {
  if (cfg.epochs < 1) throw std::invalid_argument("train_qdqe: epochs must be positive");
  TripleSet train_triples = build_triples(train, cfg.c_train, rng);
  TripleSet val_triples = build_triples(val, cfg.c_val, rng);

  const int width = glove.padded_dim();
  EmbeddingCache train_cache = cache_embeddings(train, glove, width);
  EmbeddingCache val_cache = cache_embeddings(val, glove, width);

  QdqeTrainResult result;
  result.encoder = QdqeEncoder::init(width, cfg.heads, rng);
  std::vector<Tensor> params = result.encoder.parameters();
  AdamState adam;
  StepSchedule schedule{cfg.lr_step_size, cfg.lr_gamma, cfg.learning_rate};

  std::vector<std::size_t> order(train_triples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_val = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_snapshot;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    adam.learning_rate = schedule.rate(epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t idx : order) {
      const Triple& t = train_triples.triples[idx];
      Tape::active().reset();
      Tensor a = encode_question(train_cache.at(t.anchor_id), result.encoder, true,
                                 cfg.dropout_p, rng);
      Tensor p = encode_question(train_cache.at(t.pos_id), result.encoder, true,
                                 cfg.dropout_p, rng);
      Tensor n = encode_question(train_cache.at(t.neg_id), result.encoder, true,
                                 cfg.dropout_p, rng);
      Tensor loss = info_nce(a, p, n, cfg.tau);
      if (std::isnan(loss.value())) {
        throw std::runtime_error("train_qdqe: NaN loss at epoch " + std::to_string(epoch));
      }
      epoch_loss += loss.value();
      backward(loss);
      adam_step(params, adam);
    }
    Tape::active().reset();
    result.train_losses.push_back(
        train_triples.triples.empty() ? 0.0
                                      : epoch_loss / static_cast<double>(train_triples.size()));
    const double val_loss = eval_mean_loss(val_triples, val_cache, result.encoder, cfg.tau);
    result.val_losses.push_back(val_loss);
    if (val_loss < best_val) {
      best_val = val_loss;
      result.selected_epoch = epoch;
      best_snapshot.clear();
      for (const Tensor& t : params) best_snapshot.push_back(t.values());
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i].values() = best_snapshot[i];
  return result;
}

double triple_accuracy(const std::vector<McqRecord>& records, const TripleSet& triples,
                       const GloveTable& glove, const QdqeEncoder& encoder) {
  if (triples.triples.empty()) throw std::invalid_argument("triple_accuracy: no triples");
  EmbeddingCache cache = cache_embeddings(records, glove, encoder.dim());
  NoGradGuard guard;
  std::mt19937_64 unused(0);
  int correct = 0;
  for (const auto& t : triples.triples) {
    Tensor a = encode_question(cache.at(t.anchor_id), encoder, false, 0.0, unused);
    Tensor p = encode_question(cache.at(t.pos_id), encoder, false, 0.0, unused);
    Tensor n = encode_question(cache.at(t.neg_id), encoder, false, 0.0, unused);
    if (cosine_sim(a, p).value() > cosine_sim(a, n).value()) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(triples.size());
}

}  // namespace aqqr
