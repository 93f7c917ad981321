#include "aqqr/data_io.hpp"

#include "aqqr/errors.hpp"

#include <iomanip>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

namespace aqqr {

using nlohmann::json;

std::vector<std::string> validate_record(const McqRecord& record, bool allow_unlabeled) {
  std::vector<std::string> problems;
  if (record.id.empty()) problems.push_back("missing id");
  if (record.answer.empty()) problems.push_back("answer must be non-empty");
  if (record.distractors.empty()) problems.push_back("at least one distractor is required");
  if (record.distractors.size() > 4) {
    problems.push_back("at most 4 distractors are allowed, got " +
                       std::to_string(record.distractors.size()));
  }
  bool any_distractor = false;
  for (const auto& d : record.distractors) {
    if (!d.empty()) any_distractor = true;
  }
  if (!record.distractors.empty() && !any_distractor) {
    problems.push_back("at least one distractor must be non-empty");
  }
  for (int r : record.ratings) {
    if (r < 0 || r > 5) {
      problems.push_back("rating " + std::to_string(r) + " outside the 0..5 scale");
      break;
    }
  }
  if (record.average_rating) {
    if (*record.average_rating < 0.0 || *record.average_rating > 5.0) {
      problems.push_back("average_rating outside [0, 5]");
    }
    if (!record.ratings.empty()) {
      double mean = 0;
      for (int r : record.ratings) mean += r;
      mean /= static_cast<double>(record.ratings.size());
      if (std::abs(mean - *record.average_rating) > 1e-9) {
        problems.push_back("average_rating disagrees with the mean of ratings");
      }
    }
  }
  if (!allow_unlabeled && !record.has_label()) {
    problems.push_back("record has neither ratings nor average_rating");
  }
  if (record.rating_count < 0) problems.push_back("rating_count must be non-negative");
  return problems;
}

namespace {

McqRecord parse_record(const json& j) {
  McqRecord r;
  if (!j.is_object()) throw std::runtime_error("line is not a JSON object");
  auto require_string = [&](const char* key) -> std::string {
    if (!j.contains(key)) throw std::runtime_error(std::string("missing field '") + key + "'");
    if (!j.at(key).is_string()) {
      throw std::runtime_error(std::string("field '") + key + "' must be a string");
    }
    return j.at(key).get<std::string>();
  };
  r.id = require_string("id");
  r.stem = require_string("stem");
  r.answer = require_string("answer");
  if (!j.contains("distractors") || !j.at("distractors").is_array()) {
    throw std::runtime_error("missing field 'distractors' (array of strings)");
  }
  for (const auto& d : j.at("distractors")) {
    if (!d.is_string()) throw std::runtime_error("distractors must be strings");
    r.distractors.push_back(d.get<std::string>());
  }
  r.explanation = j.value("explanation", std::string{});
  if (j.contains("ratings")) {
    if (!j.at("ratings").is_array()) throw std::runtime_error("'ratings' must be an array");
    for (const auto& v : j.at("ratings")) {
      if (!v.is_number_integer()) {
        throw std::runtime_error("'ratings' entries must be integers");
      }
      r.ratings.push_back(v.get<int>());
    }
  }
  if (j.contains("average_rating")) {
    if (!j.at("average_rating").is_number()) {
      throw std::runtime_error("'average_rating' must be a number");
    }
    r.average_rating = j.at("average_rating").get<double>();
  }
  if (j.contains("rating_count")) {
    if (!j.at("rating_count").is_number_integer()) {
      throw std::runtime_error("'rating_count' must be an integer");
    }
    r.rating_count = j.at("rating_count").get<int>();
  } else {
    r.rating_count = static_cast<int>(r.ratings.size());
  }
  return r;
}

}  // namespace

LoadResult load_jsonl(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);
  LoadResult result;
  result.dataset.provenance = path;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& message) {
    const std::string full = "line " + std::to_string(line_no) + ": " + message;
    if (options.strict) throw SchemaError(path + ": " + full);
    result.issues.push_back({line_no, message});
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    McqRecord record;
    try {
      record = parse_record(json::parse(line));
    } catch (const std::exception& e) {
      fail(e.what());
      continue;
    }
    const auto problems = validate_record(record, options.allow_unlabeled);
    if (!problems.empty()) {
      std::string joined;
      for (const auto& p : problems) {
        if (!joined.empty()) joined += "; ";
        joined += p;
      }
      fail(joined);
      continue;
    }
    if (!seen_ids.insert(record.id).second) {
      fail("duplicate id '" + record.id + "'");
      continue;
    }
    result.dataset.records.push_back(std::move(record));
  }
  return result;
}

void save_jsonl(const QualityDataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset file: " + path);
  for (const auto& r : dataset.records) {
    json j;
    j["id"] = r.id;
    j["stem"] = r.stem;
    j["answer"] = r.answer;
    j["distractors"] = r.distractors;
    j["explanation"] = r.explanation;
    if (!r.ratings.empty()) j["ratings"] = r.ratings;
    if (r.average_rating) j["average_rating"] = *r.average_rating;
    j["rating_count"] = r.rating_count;
    out << j.dump() << '\n';
  }
}

QualityDataset filter_and_label(const QualityDataset& dataset, int min_ratings) {
  QualityDataset out;
  out.course = dataset.course;
  out.provenance = dataset.provenance;
  for (const auto& r : dataset.records) {
    if (r.rating_count < min_ratings) continue;
    McqRecord kept = r;
    if (!kept.average_rating) kept.average_rating = kept.label();
    out.records.push_back(std::move(kept));
  }
  if (out.records.empty()) {
    throw SchemaError("filter_and_label: no question has at least " +
                      std::to_string(min_ratings) + " ratings (empty dataset)");
  }
  return out;
}

namespace {

const std::vector<std::string>& common_pool() {
  static const std::vector<std::string> pool = {
      "blood",  "bone",   "brain",  "cell",   "doctor", "dream",  "heart",  "light",
      "mind",   "money",  "nerve",  "paper",  "people", "plant",  "river",  "school",
      "sleep",  "sound",  "stone",  "storm",  "story",  "table",  "think",  "water",
      "window", "winter", "world",  "answer", "body",   "child",  "friend", "garden",
  };
  return pool;
}

const std::vector<std::string>& high_pool() {
  static const std::vector<std::string> pool = {
      "azure",   "beacon", "bloom",   "breeze", "crystal", "dawn",   "ember",  "falcon",
      "garnet",  "harbor", "horizon", "ivory",  "jasmine", "lantern", "meadow", "opal",
  };
  return pool;
}

const std::vector<std::string>& low_pool() {
  static const std::vector<std::string> pool = {
      "cinder", "crater", "drizzle", "fog",    "grit",   "gutter", "mud",    "murk",
      "rubble", "rust",   "shadow",  "sludge", "smoke",  "soot",   "swamp",  "thorn",
  };
  return pool;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::vector<std::string> sample_words(const std::vector<std::string>& pool, int count,
                                      std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<std::string> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(pool[pick(rng)]);
  return out;
}

double clip_rating(double r) { return std::min(5.0, std::max(0.0, r)); }

std::string make_id(int i) {
  std::ostringstream os;
  os << "q" << std::setw(5) << std::setfill('0') << i;
  return os.str();
}

}  // namespace

std::vector<std::string> synthetic_vocabulary() {
  std::vector<std::string> vocab = common_pool();
  vocab.insert(vocab.end(), high_pool().begin(), high_pool().end());
  vocab.insert(vocab.end(), low_pool().begin(), low_pool().end());
  return vocab;
}

SyntheticResult generate_synthetic(const SyntheticSpec& spec, unsigned long long seed) {
  if (spec.n < 4) throw std::invalid_argument("generate_synthetic: n must be at least 4");
  if (spec.signal != "length-linear" && spec.signal != "correlation" &&
      spec.signal != "vocabulary-split") {
    throw std::invalid_argument("generate_synthetic: unknown signal '" + spec.signal +
                                "' (expected length-linear, correlation, or vocabulary-split)");
  }
  SyntheticResult out;
  out.dataset.course = "synthetic-" + spec.signal;
  out.dataset.provenance = "generated, seed " + std::to_string(seed);
  // the embedding table is a pure function of the vocabulary and seed
  out.glove = make_toy_glove(synthetic_vocabulary(), spec.glove_dim, seed ^ 0x9e3779b97f4a7c15ULL);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);
  const auto& common = common_pool();

  for (int i = 0; i < spec.n; ++i) {
    McqRecord r;
    r.id = make_id(i);
    double rating = 0;
    if (spec.signal == "length-linear") {
      std::uniform_int_distribution<int> stem_len(5, 195);
      const int len = stem_len(rng);
      r.stem = join_words(sample_words(common, len, rng));
      r.answer = join_words(sample_words(common, 2, rng));
      r.distractors = {join_words(sample_words(common, 2, rng)),
                       join_words(sample_words(common, 2, rng)),
                       join_words(sample_words(common, 2, rng)),
                       join_words(sample_words(common, 2, rng))};
      r.explanation = join_words(sample_words(common, 6, rng));
      rating = spec.a + spec.b * len;
    } else if (spec.signal == "correlation") {
      // fixed-length components: the signal lives only in the
      // answer/distractor-1 embedding similarity
      r.stem = join_words(sample_words(common, 8, rng));
      r.answer = join_words(sample_words(common, 1, rng));
      r.distractors = {join_words(sample_words(common, 1, rng)),
                       join_words(sample_words(common, 2, rng)),
                       join_words(sample_words(common, 2, rng)),
                       join_words(sample_words(common, 2, rng))};
      r.explanation = join_words(sample_words(common, 6, rng));
      const auto& va = out.glove.lookup(r.answer);
      const auto& vd = out.glove.lookup(r.distractors[0]);
      double ab = 0, aa = 0, bb = 0;
      for (std::size_t k = 0; k < va.size(); ++k) {
        ab += va[k] * vd[k];
        aa += va[k] * va[k];
        bb += vd[k] * vd[k];
      }
      const double cos = (aa > 0 && bb > 0) ? ab / std::sqrt(aa * bb) : 0.0;
      rating = 2.5 + 2.0 * cos;
    } else {  // vocabulary-split
      const bool is_high = i % 2 == 0;
      const auto& pool = is_high ? high_pool() : low_pool();
      r.stem = join_words(sample_words(pool, 8, rng));
      r.answer = join_words(sample_words(pool, 1, rng));
      r.distractors = {join_words(sample_words(pool, 1, rng)),
                       join_words(sample_words(pool, 2, rng)),
                       join_words(sample_words(pool, 2, rng)),
                       join_words(sample_words(pool, 2, rng))};
      r.explanation = join_words(sample_words(pool, 5, rng));
      std::uniform_real_distribution<double> band(is_high ? 3.5 : 0.0, is_high ? 5.0 : 1.5);
      rating = band(rng);
    }
    if (spec.noise_sigma > 0) rating += noise(rng);
    r.average_rating = clip_rating(rating);
    r.rating_count = 50;
    out.dataset.records.push_back(std::move(r));
  }
  return out;
}

}  // namespace aqqr
