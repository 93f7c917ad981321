#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "aqqr/mcq.hpp"
#include "aqqr/tensor.hpp"

namespace aqqr {

/// Pre-trained word vectors. Lookup is case-insensitive (keys are stored
/// lowercase); out-of-vocabulary words map to the zero vector.
class GloveTable {
 public:
  GloveTable() = default;
  GloveTable(int dim, std::unordered_map<std::string, std::vector<double>> vectors);

  int dim() const { return dim_; }
  /// Smallest multiple of 4 >= dim(): the transformer width the embeddings
  /// are zero-padded to when a multi-head encoder consumes them.
  int padded_dim() const { return ((dim_ + 3) / 4) * 4; }
  std::size_t size() const { return vectors_.size(); }

  /// Zero vector (and oov=true) for unknown words.
  const std::vector<double>& lookup(const std::string& word, bool* oov = nullptr) const;
  bool contains(const std::string& word) const;

  const std::unordered_map<std::string, std::vector<double>>& vectors() const {
    return vectors_;
  }

 private:
  int dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
  std::vector<double> zero_;
};

/// Reads the standard "word v1 v2 ... vd" distribution format; the dimension
/// is inferred from the first line and enforced afterwards.
GloveTable load_glove(const std::string& path);
void save_glove(const GloveTable& table, const std::string& path);

/// Deterministic random table over a closed vocabulary, for synthetic runs.
GloveTable make_toy_glove(const std::vector<std::string>& vocab, int dim,
                          unsigned long long seed);

/// Mean of the vectors of in-vocabulary tokens; empty or all-OOV text gives
/// the zero vector.
std::vector<double> embed_component(const std::string& text, const GloveTable& table);

/// 7 x d_em matrix of pooled component embeddings, rows in fixed order
/// [S, A, D1, D2, D3, D4, E]. Absent components are zero rows.
struct ComponentEmbeddings {
  Tensor matrix;  // 7 x d_em, constant (no grad)

  int dim() const { return matrix.cols(); }
};

ComponentEmbeddings embed_question(const McqRecord& mcq, const GloveTable& table);

/// Zero-pads the embedding columns to `width` (>= current dim).
ComponentEmbeddings pad_components(const ComponentEmbeddings& re, int width);

}  // namespace aqqr
