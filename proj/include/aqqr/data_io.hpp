#pragma once

#include <string>
#include <vector>

#include "aqqr/embeddings.hpp"
#include "aqqr/mcq.hpp"

namespace aqqr {

struct QualityDataset {
  std::string course;
  std::vector<McqRecord> records;
  std::string provenance;

  std::size_t size() const { return records.size(); }
};

struct LoadOptions {
  bool strict = true;           // abort on the first malformed line
  bool allow_unlabeled = false; // accept records without ratings (prediction input)
};

struct LoadIssue {
  int line = 0;
  std::string message;
};

struct LoadResult {
  QualityDataset dataset;
  std::vector<LoadIssue> issues;  // skipped lines in lenient mode
};

/// One JSON object per line. Mandatory fields: id, stem, answer, distractors
/// (1-4 non-empty entries), and a label (ratings list of 0..5 integers or
/// average_rating in [0,5]) unless allow_unlabeled is set.
LoadResult load_jsonl(const std::string& path, const LoadOptions& options = {});

void save_jsonl(const QualityDataset& dataset, const std::string& path);

/// Problems with a single record; empty means valid.
std::vector<std::string> validate_record(const McqRecord& record, bool allow_unlabeled = false);

/// Drops records with fewer than min_ratings ratings and materializes the
/// label as the mean of the rating list. Throws if nothing survives.
QualityDataset filter_and_label(const QualityDataset& dataset, int min_ratings = 10);

/// Synthetic data with a planted signal that makes the true rating a known
/// function of the question text.
struct SyntheticSpec {
  std::string signal = "length-linear";  // length-linear | correlation | vocabulary-split
  int n = 200;
  double noise_sigma = 0.0;
  // length-linear: rating = a + b * stem_word_count, clipped to [0, 5]
  double a = 3.0;
  double b = 0.01;
  int glove_dim = 16;
};

struct SyntheticResult {
  QualityDataset dataset;
  GloveTable glove;  // toy embeddings over the closed vocabulary
};

SyntheticResult generate_synthetic(const SyntheticSpec& spec, unsigned long long seed);

/// The closed vocabulary the generator samples from.
std::vector<std::string> synthetic_vocabulary();

}  // namespace aqqr
