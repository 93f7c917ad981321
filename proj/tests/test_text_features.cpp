#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "aqqr/text_features.hpp"
#include "readability_fixtures.hpp"

using namespace aqqr;

TEST_CASE("tokenize: words and sentences") {
  auto t0 = tokenize("");
  CHECK(t0.words.empty());
  CHECK(t0.sentences.empty());

  auto t1 = tokenize("Microbiology");
  CHECK(t1.words == std::vector<std::string>{"Microbiology"});
  CHECK(t1.sentences.size() == 1);

  auto t2 = tokenize("Mr. Bram-son is resting.");
  CHECK(t2.words == std::vector<std::string>{"Mr", "Bram-son", "is", "resting"});
  // the abbreviation period is treated as a sentence terminator
  CHECK(t2.sentences.size() == 2);

  auto t3 = tokenize("Pi is 3.14 and that's fine");
  CHECK(t3.words == std::vector<std::string>{"Pi", "is", "3", "14", "and", "that's", "fine"});
  CHECK(t3.sentences.size() == 1);  // decimal point is not followed by whitespace

  auto t4 = tokenize("Wait... what?!");
  CHECK(t4.sentences.size() == 2);
}

TEST_CASE("count_syllables") {
  CHECK(count_syllables("cat") == 1);
  CHECK(count_syllables("chilling") == 2);
  CHECK(count_syllables("a") == 1);
  CHECK(count_syllables("see") == 1);
  CHECK(count_syllables("cake") == 1);       // trailing silent e
  CHECK(count_syllables("resting") == 2);
  CHECK(count_syllables("hospital") == 3);
  CHECK(count_syllables("mysterious") == 3);
  CHECK(count_syllables("rhythm") == 1);     // y as vowel
  CHECK(count_syllables("Mr") == 1);         // no vowels, minimum rule
  CHECK_THROWS_AS(count_syllables(""), std::invalid_argument);
}

TEST_CASE("grammar error rate with the default checker") {
  HeuristicGrammarChecker checker;
  CHECK(grammar_error_rate("The cat sat.", checker) == 0.0);
  // lowercase sentence start + doubled word = 2 errors over 4 words
  CHECK(grammar_error_rate("the the cat sat.", checker) == doctest::Approx(50.0));
  CHECK(grammar_error_rate("", checker) == 0.0);
  // unbalanced bracket
  CHECK(grammar_error_rate("The (cat sat.", checker) == doctest::Approx(100.0 / 3.0));
  // odd quote count
  CHECK(grammar_error_rate("The \"cat sat.", checker) == doctest::Approx(100.0 / 3.0));
}

TEST_CASE("grammar checker failures propagate") {
  struct FailingChecker : GrammarChecker {
    int count_errors(const std::string&) const override {
      throw std::runtime_error("checker backend unavailable");
    }
  } checker;
  CHECK_THROWS_WITH_AS(grammar_error_rate("Text.", checker), "checker backend unavailable",
                       std::runtime_error);
}

TEST_CASE("readability indices match hand-computed fixtures") {
  const WordLists lists = WordLists::builtin();
  for (const auto& f : fixtures::kReadabilityFixtures) {
    const auto rd = readability_indices(f.text, lists).as_array();
    for (int i = 0; i < 9; ++i) {
      INFO(f.text << " index " << i);
      CHECK(std::abs(rd[i] - f.expected[i]) < 1e-6);
    }
  }
}

TEST_CASE("readability of empty text is all zeros") {
  const WordLists lists = WordLists::builtin();
  const auto rd = readability_indices("", lists).as_array();
  for (double v : rd) CHECK(v == 0.0);
}

TEST_CASE("single-word text") {
  const WordLists lists = WordLists::builtin();
  const auto rd = readability_indices("Hi", lists);
  CHECK(rd.flesch_reading_ease == doctest::Approx(206.835 - 1.015 - 84.6));
}

TEST_CASE("bundled word list files match the compiled-in defaults") {
  const WordLists builtin = WordLists::builtin();
  const auto dc = WordLists::load_file(std::string(AQQR_SOURCE_DIR) +
                                       "/data/wordlists/dale_chall_easy.txt");
  const auto sp =
      WordLists::load_file(std::string(AQQR_SOURCE_DIR) + "/data/wordlists/spache_easy.txt");
  CHECK(dc == builtin.dale_chall);
  CHECK(sp == builtin.spache);
  CHECK_THROWS_AS(WordLists::load_file("/nonexistent/words.txt"), std::runtime_error);
}

namespace {
McqRecord sample_mcq() {
  McqRecord mcq;
  mcq.id = "q1";
  mcq.stem =
      "Mr. Bram-son is resting in his office thinking about a new plan. What is Mr. Bram-son "
      "suffering from?";
  mcq.answer = "Paranoia";
  mcq.distractors = {"Hallucinations", "Illusions", "Over ambition", "Being far too calm"};
  mcq.explanation = "Paranoia would be the best answer as it covers all the ideas.";
  mcq.average_rating = 2.71;
  mcq.rating_count = 20;
  return mcq;
}
}  // namespace

TEST_CASE("extract_edf on a full five-option question") {
  HeuristicGrammarChecker checker;
  const WordLists lists = WordLists::builtin();
  const EdfVector edf = extract_edf(sample_mcq(), checker, lists);
  CHECK(edf.n_op == 5);
  CHECK(edf.word_counts[0] == 18);  // stem
  CHECK(edf.word_counts[1] == 1);   // answer
  CHECK(edf.word_counts[5] == 4);   // D4
  CHECK(edf.word_counts[6] == 12);  // explanation
  CHECK(edf.grammar_rate >= 0.0);

  // determinism
  const EdfVector again = extract_edf(sample_mcq(), checker, lists);
  CHECK(edf.as_array() == again.as_array());
}

TEST_CASE("extract_edf with absent distractors") {
  HeuristicGrammarChecker checker;
  const WordLists lists = WordLists::builtin();
  McqRecord mcq = sample_mcq();
  mcq.distractors = {"Hallucinations", "Illusions"};
  const EdfVector edf = extract_edf(mcq, checker, lists);
  CHECK(edf.n_op == 3);
  CHECK(edf.word_counts[4] == 0);
  CHECK(edf.word_counts[5] == 0);

  mcq.distractors = {"Hallucinations", "   ", "Illusions"};  // whitespace-only is absent
  CHECK(extract_edf(mcq, checker, lists).n_op == 3);
}

TEST_CASE("extract_edf zero propagation on a minimal record") {
  HeuristicGrammarChecker checker;
  const WordLists lists = WordLists::builtin();
  McqRecord mcq;
  mcq.id = "tiny";
  mcq.stem = "Why";
  mcq.answer = "Because";
  mcq.distractors = {"Maybe"};
  const EdfVector edf = extract_edf(mcq, checker, lists);
  CHECK(edf.n_op == 2);
  CHECK(edf.word_counts[0] == 1);
  CHECK(edf.word_counts[6] == 0);
}

TEST_CASE("normalize_edf") {
  FeatureStats stats;
  stats.mean.fill(2.0);
  stats.stddev.fill(2.0);
  EdfVector v;
  v.n_op = 5;  // feature 0: (5-2)/2 = 1.5
  v.word_counts.fill(2);
  v.grammar_rate = 2.0;
  v.readability.flesch_reading_ease = 2.0;
  v.readability.flesch_kincaid_grade = 2.0;
  v.readability.gunning_fog = 2.0;
  v.readability.coleman_liau = 2.0;
  v.readability.linsear_write = 2.0;
  v.readability.automated_readability_index = 2.0;
  v.readability.spache = 2.0;
  v.readability.dale_chall = 2.0;
  v.readability.smog = 2.0;
  const auto z = normalize_edf(v, stats);
  CHECK(z[0] == doctest::Approx(1.5));
  for (int i = 1; i < 18; ++i) CHECK(z[i] == doctest::Approx(0.0));
}

TEST_CASE("FeatureStats: fit/normalize yields zero mean, unit variance") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> wc(0, 40);
  std::uniform_real_distribution<double> real(-10, 120);
  std::vector<EdfVector> train;
  for (int i = 0; i < 200; ++i) {
    EdfVector v;
    v.n_op = 3;  // constant feature: sigma floor path
    for (auto& c : v.word_counts) c = wc(rng);
    v.grammar_rate = real(rng);
    v.readability.flesch_reading_ease = real(rng);
    v.readability.flesch_kincaid_grade = real(rng);
    v.readability.gunning_fog = real(rng);
    v.readability.coleman_liau = real(rng);
    v.readability.linsear_write = real(rng);
    v.readability.automated_readability_index = real(rng);
    v.readability.spache = real(rng);
    v.readability.dale_chall = real(rng);
    v.readability.smog = real(rng);
    train.push_back(v);
  }
  const FeatureStats stats = FeatureStats::fit(train);
  std::array<double, 18> mean{}, var{};
  for (const auto& v : train) {
    const auto z = normalize_edf(v, stats);
    for (int i = 0; i < 18; ++i) mean[i] += z[i];
  }
  for (auto& m : mean) m /= train.size();
  for (const auto& v : train) {
    const auto z = normalize_edf(v, stats);
    for (int i = 0; i < 18; ++i) var[i] += (z[i] - mean[i]) * (z[i] - mean[i]);
  }
  for (auto& s : var) s /= train.size();
  for (int i = 0; i < 18; ++i) {
    CHECK(std::abs(mean[i]) < 1e-9);
    if (i == 0) {
      CHECK(var[i] == 0.0);  // constant feature normalizes to exactly 0
    } else {
      CHECK(std::abs(var[i] - 1.0) < 1e-6);
    }
  }
}
