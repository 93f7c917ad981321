#pragma once

#include <array>
#include <string>
#include <unordered_set>
#include <vector>

#include "aqqr/mcq.hpp"

namespace aqqr {

struct TokenizedText {
  std::vector<std::string> words;
  std::vector<std::string> sentences;
};

/// Words are maximal alphanumeric runs with internal apostrophes/hyphens;
/// sentences split on '.', '!', '?' followed by whitespace or end of text
/// and must contain at least one word.
TokenizedText tokenize(const std::string& text);

/// Vowel-group heuristic over {a,e,i,o,u,y}; a trailing silent 'e' is
/// subtracted unless the count would drop to zero; minimum 1.
int count_syllables(const std::string& word);

/// Pluggable grammar checking. Implementations may throw; the message is
/// propagated to the caller.
class GrammarChecker {
 public:
  virtual ~GrammarChecker() = default;
  virtual int count_errors(const std::string& text) const = 0;
};

/// Bundled deterministic checker. Flags sentences that do not start with an
/// uppercase letter, doubled words, and unbalanced brackets/quotes.
class HeuristicGrammarChecker : public GrammarChecker {
 public:
  int count_errors(const std::string& text) const override;
};

/// Errors per 100 words: 100 * errors / max(1, word count).
double grammar_error_rate(const std::string& text, const GrammarChecker& checker);

/// Easy-word lists for Dale-Chall and Spache, lowercase. Defaults are
/// compiled in; either list can be replaced from a one-word-per-line file.
struct WordLists {
  std::unordered_set<std::string> dale_chall;
  std::unordered_set<std::string> spache;

  static WordLists builtin();
  static std::unordered_set<std::string> load_file(const std::string& path);
};

struct ReadabilityIndices {
  double flesch_reading_ease = 0;
  double flesch_kincaid_grade = 0;
  double gunning_fog = 0;
  double coleman_liau = 0;
  double linsear_write = 0;
  double automated_readability_index = 0;
  double spache = 0;
  double dale_chall = 0;
  double smog = 0;

  std::array<double, 9> as_array() const {
    return {flesch_reading_ease, flesch_kincaid_grade, gunning_fog,
            coleman_liau,        linsear_write,        automated_readability_index,
            spache,              dale_chall,           smog};
  }
};

/// The nine canonical published formulas; a text with no words yields all
/// zeros.
ReadabilityIndices readability_indices(const std::string& text, const WordLists& lists);

/// The 18 explicitly-defined features in fixed order:
/// [n_op, wc_S, wc_A, wc_D1..wc_D4, wc_E, grammar_rate, 9 readability indices].
struct EdfVector {
  int n_op = 0;
  std::array<int, 7> word_counts{};  // S, A, D1..D4, E
  double grammar_rate = 0;
  ReadabilityIndices readability;

  std::array<double, 18> as_array() const;
  static const std::array<const char*, 18>& feature_names();
};

EdfVector extract_edf(const McqRecord& mcq, const GrammarChecker& checker,
                      const WordLists& lists);

/// Per-feature mean/stddev fitted on the training split. Stddevs below
/// 1e-12 are replaced by 1 so constant features normalize to 0.
struct FeatureStats {
  std::array<double, 18> mean{};
  std::array<double, 18> stddev{};

  static FeatureStats fit(const std::vector<EdfVector>& train);
};

std::array<double, 18> normalize_edf(const EdfVector& v, const FeatureStats& stats);

}  // namespace aqqr
