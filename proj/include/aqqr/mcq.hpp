#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace aqqr {

/// One multiple-choice question: stem, correct answer, up to four
/// distractors, explanation, and its aggregated quality rating.
struct McqRecord {
  std::string id;
  std::string stem;
  std::string answer;
  std::vector<std::string> distractors;  // up to 4; missing slots read as ""
  std::string explanation;
  std::vector<int> ratings;              // raw 0..5 ratings, possibly empty
  std::optional<double> average_rating;  // precomputed aggregate in [0, 5]
  int rating_count = 0;

  const std::string& distractor(int i) const {
    static const std::string kEmpty;
    return (i >= 0 && i < static_cast<int>(distractors.size())) ? distractors[i] : kEmpty;
  }

  /// Component texts in fixed order [S, A, D1, D2, D3, D4, E].
  std::array<const std::string*, 7> components() const {
    return {&stem,          &answer,        &distractor(0), &distractor(1),
            &distractor(2), &distractor(3), &explanation};
  }

  bool has_label() const { return average_rating.has_value() || !ratings.empty(); }

  /// Ground-truth label: the precomputed average when present, otherwise the
  /// arithmetic mean of the rating list.
  double label() const {
    if (average_rating) return *average_rating;
    if (ratings.empty()) throw std::runtime_error("McqRecord " + id + " has no rating label");
    double sum = 0;
    for (int r : ratings) sum += r;
    return sum / static_cast<double>(ratings.size());
  }
};

}  // namespace aqqr
