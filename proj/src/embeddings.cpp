#include "aqqr/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "aqqr/errors.hpp"
#include "aqqr/text_features.hpp"

namespace aqqr {

namespace {

std::string to_lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

GloveTable::GloveTable(int dim, std::unordered_map<std::string, std::vector<double>> vectors)
    : dim_(dim), vectors_(std::move(vectors)), zero_(static_cast<std::size_t>(dim), 0.0) {
  for (const auto& [word, vec] : vectors_) {
    if (static_cast<int>(vec.size()) != dim_) {
      throw std::invalid_argument("GloveTable: vector for '" + word + "' has length " +
                                  std::to_string(vec.size()) + ", expected " +
                                  std::to_string(dim_));
    }
  }
}

const std::vector<double>& GloveTable::lookup(const std::string& word, bool* oov) const {
  auto it = vectors_.find(to_lower(word));
  if (it == vectors_.end()) {
    if (oov) *oov = true;
    return zero_;
  }
  if (oov) *oov = false;
  return it->second;
}

bool GloveTable::contains(const std::string& word) const {
  return vectors_.count(to_lower(word)) > 0;
}

GloveTable load_glove(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file: " + path);
  std::unordered_map<std::string, std::vector<double>> vectors;
  int dim = -1;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<double> vec;
    double v;
    while (ss >> v) vec.push_back(v);
    if (!ss.eof()) {
      throw SchemaError("embedding parse error at line " + std::to_string(line_no) +
                               " of " + path + ": non-numeric value");
    }
    if (word.empty() || vec.empty()) {
      throw SchemaError("embedding parse error at line " + std::to_string(line_no) +
                               " of " + path + ": empty word or vector");
    }
    if (dim < 0) {
      dim = static_cast<int>(vec.size());
    } else if (static_cast<int>(vec.size()) != dim) {
      throw SchemaError("embedding parse error at line " + std::to_string(line_no) +
                               " of " + path + ": expected " + std::to_string(dim) +
                               " values, got " + std::to_string(vec.size()));
    }
    vectors[to_lower(word)] = std::move(vec);
  }
  if (dim < 0) throw SchemaError("embedding file is empty: " + path);
  return GloveTable(dim, std::move(vectors));
}

void save_glove(const GloveTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write embedding file: " + path);
  out << std::setprecision(17);
  // sorted for byte-stable output
  std::vector<std::string> words;
  words.reserve(table.size());
  for (const auto& [w, _] : table.vectors()) words.push_back(w);
  std::sort(words.begin(), words.end());
  for (const auto& w : words) {
    out << w;
    for (double v : table.lookup(w)) out << ' ' << v;
    out << '\n';
  }
}

GloveTable make_toy_glove(const std::vector<std::string>& vocab, int dim,
                          unsigned long long seed) {
  if (dim <= 0) throw std::invalid_argument("make_toy_glove: dim must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::unordered_map<std::string, std::vector<double>> vectors;
  for (const auto& word : vocab) {
    std::vector<double>& vec = vectors[to_lower(word)];
    if (!vec.empty()) continue;  // duplicate entry keeps first draw
    vec.resize(static_cast<std::size_t>(dim));
    for (double& v : vec) v = dist(rng);
  }
  return GloveTable(dim, std::move(vectors));
}

std::vector<double> embed_component(const std::string& text, const GloveTable& table) {
  std::vector<double> sum(static_cast<std::size_t>(table.dim()), 0.0);
  int found = 0;
  for (const auto& word : tokenize(text).words) {
    bool oov = false;
    const auto& vec = table.lookup(word, &oov);
    if (oov) continue;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += vec[i];
    ++found;
  }
  if (found > 0) {
    for (double& v : sum) v /= found;
  }
  return sum;
}

ComponentEmbeddings embed_question(const McqRecord& mcq, const GloveTable& table) {
  const int d = table.dim();
  std::vector<double> data;
  data.reserve(7 * static_cast<std::size_t>(d));
  for (const std::string* component : mcq.components()) {
    const auto vec = embed_component(*component, table);
    data.insert(data.end(), vec.begin(), vec.end());
  }
  return ComponentEmbeddings{Tensor::from_values({7, d}, std::move(data))};
}

ComponentEmbeddings pad_components(const ComponentEmbeddings& re, int width) {
  const int d = re.dim();
  if (width < d) {
    throw std::invalid_argument("pad_components: width " + std::to_string(width) +
                                " below current dim " + std::to_string(d));
  }
  if (width == d) return re;
  std::vector<double> data(7 * static_cast<std::size_t>(width), 0.0);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < d; ++j)
      data[static_cast<std::size_t>(i) * width + j] = re.matrix.at(i, j);
  return ComponentEmbeddings{Tensor::from_values({7, width}, std::move(data))};
}

}  // namespace aqqr
