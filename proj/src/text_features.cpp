#include "aqqr/text_features.hpp"

#include "aqqr/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace aqqr {

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string to_lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool has_word(const std::string& s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return is_word_char(c); });
}

bool is_vowel(char c) {
  switch (c) {
    case 'a':
    case 'e':
    case 'i':
    case 'o':
    case 'u':
    case 'y':
      return true;
    default:
      return false;
  }
}

}  // namespace

TokenizedText tokenize(const std::string& text) {
  TokenizedText out;
  for (std::size_t i = 0; i < text.size();) {
    if (is_word_char(text[i])) {
      std::size_t j = i + 1;
      while (j < text.size()) {
        if (is_word_char(text[j])) {
          ++j;
        } else if ((text[j] == '\'' || text[j] == '-') && j + 1 < text.size() &&
                   is_word_char(text[j + 1])) {
          ++j;
        } else {
          break;
        }
      }
      out.words.push_back(text.substr(i, j - i));
      i = j;
    } else {
      ++i;
    }
  }

  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    const bool terminator = c == '.' || c == '!' || c == '?';
    if (terminator &&
        (i + 1 >= text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])))) {
      std::string seg = text.substr(start, i - start + 1);
      if (has_word(seg)) out.sentences.push_back(trim(seg));
      start = i + 1;
    }
  }
  if (start < text.size()) {
    std::string seg = text.substr(start);
    if (has_word(seg)) out.sentences.push_back(trim(seg));
  }
  return out;
}

int count_syllables(const std::string& word) {
  if (word.empty()) throw std::invalid_argument("count_syllables: empty word");
  const std::string w = to_lower(word);
  int groups = 0;
  bool in_group = false;
  char last_letter = 0;
  char before_last = 0;
  for (char c : w) {
    if (std::isalpha(static_cast<unsigned char>(c)) == 0) {
      in_group = false;
      continue;
    }
    before_last = last_letter;
    last_letter = c;
    if (is_vowel(c)) {
      if (!in_group) ++groups;
      in_group = true;
    } else {
      in_group = false;
    }
  }
  if (last_letter == 'e' && !is_vowel(before_last) && groups > 1) --groups;
  return std::max(groups, 1);
}

int HeuristicGrammarChecker::count_errors(const std::string& text) const {
  int errors = 0;
  const TokenizedText tok = tokenize(text);

  for (const auto& sentence : tok.sentences) {
    for (char c : sentence) {
      if (is_word_char(c)) {
        if (std::isalpha(static_cast<unsigned char>(c)) &&
            std::islower(static_cast<unsigned char>(c))) {
          ++errors;
        }
        break;
      }
    }
  }

  for (std::size_t i = 1; i < tok.words.size(); ++i) {
    if (to_lower(tok.words[i]) == to_lower(tok.words[i - 1])) ++errors;
  }

  const std::pair<char, char> pairs[] = {{'(', ')'}, {'[', ']'}, {'{', '}'}};
  for (auto [open, close] : pairs) {
    long balance = 0;
    for (char c : text) {
      if (c == open) ++balance;
      if (c == close) --balance;
    }
    if (balance != 0) ++errors;
  }
  if (std::count(text.begin(), text.end(), '"') % 2 != 0) ++errors;
  return errors;
}

double grammar_error_rate(const std::string& text, const GrammarChecker& checker) {
  const int errors = checker.count_errors(text);
  const std::size_t words = tokenize(text).words.size();
  return 100.0 * errors / static_cast<double>(std::max<std::size_t>(1, words));
}

namespace {

// Compiled-in copies of data/wordlists/*.txt (small everyday-word subsets;
// the full published lists can be supplied via file).
const char* const kDaleChallWords[] = {
    "a",       "about",  "after",  "again",  "all",    "also",   "always", "an",
    "and",     "animal", "answer", "any",    "are",    "as",     "ask",    "at",
    "away",    "back",   "ball",   "be",     "because", "bed",   "been",   "before",
    "begin",   "best",   "better", "big",    "bird",   "black",  "blood",  "blue",
    "body",    "bone",   "book",   "both",   "box",    "boy",    "bread",  "bring",
    "brother", "but",    "buy",    "by",     "call",   "can",    "car",    "care",
    "carry",   "cat",    "cell",   "change", "child",  "city",   "clean",  "close",
    "cold",    "come",   "could",  "cut",    "day",    "did",    "do",     "doctor",
    "does",    "dog",    "done",   "door",   "down",   "draw",   "dream",  "drink",
    "each",    "ear",    "eat",    "egg",    "end",    "even",   "ever",   "every",
    "eye",     "face",   "fall",   "far",    "fast",   "father", "feel",   "feet",
    "few",     "find",   "fine",   "fire",   "first",  "fish",   "five",   "fly",
    "food",    "foot",   "for",    "four",   "friend", "from",   "full",   "fun",
    "game",    "gave",   "get",    "girl",   "give",   "go",     "good",   "got",
    "grass",   "green",  "grow",   "had",    "hand",   "happy",  "hard",   "has",
    "have",    "he",     "head",   "hear",   "heart",  "help",   "her",    "here",
    "high",    "him",    "his",    "hold",   "home",   "hot",    "house",  "how",
    "if",      "in",     "into",   "is",     "it",     "its",    "jump",   "just",
    "keep",    "kind",   "know",   "land",   "large",  "last",   "learn",  "left",
    "leg",     "let",    "letter", "life",   "light",  "like",   "line",   "little",
    "live",    "long",   "look",   "made",   "make",   "man",    "many",   "may",
    "me",      "men",    "milk",   "mind",   "money",  "more",   "morning", "most",
    "mother",  "move",   "much",   "must",   "my",     "name",   "near",   "need",
    "never",   "new",    "next",   "night",  "no",     "not",    "now",    "of",
    "off",     "old",    "on",     "once",   "one",    "only",   "open",   "or",
    "other",   "our",    "out",    "over",   "own",    "paper",  "part",   "people",
    "pick",    "place",  "plant",  "play",   "put",    "rain",   "ran",    "read",
    "red",     "rest",   "ride",   "right",  "road",   "room",   "run",    "said",
    "same",    "sat",    "saw",    "say",    "school", "sea",    "see",    "seem",
    "send",    "set",    "seven",  "she",    "ship",   "show",   "sick",   "side",
    "sing",    "sit",    "six",    "sleep",  "small",  "so",     "some",   "soon",
    "sound",   "stand",  "start",  "stay",   "step",   "still",  "stop",   "story",
    "sun",     "take",   "talk",   "tell",   "ten",    "than",   "that",   "the",
    "their",   "them",   "then",   "there",  "these",  "they",   "thing",  "think",
    "this",    "three",  "time",   "to",     "today",  "too",    "took",   "top",
    "tree",    "true",   "try",    "turn",   "two",    "under",  "up",     "us",
    "use",     "very",   "walk",   "want",   "warm",   "was",    "watch",  "water",
    "way",     "we",     "well",   "went",   "were",   "what",   "when",   "where",
    "which",   "while",  "white",  "who",    "why",    "will",   "wind",   "wish",
    "with",    "word",   "work",   "world",  "would",  "write",  "year",   "yes",
    "you",     "your",
};

const char* const kSpacheWords[] = {
    "a",      "about", "after",  "again", "all",   "and",   "animal", "any",
    "are",    "as",    "at",     "away",  "back",  "ball",  "be",     "bed",
    "been",   "before", "big",   "bird",  "black", "blue",  "book",   "box",
    "boy",    "but",   "by",     "call",  "came",  "can",   "car",    "cat",
    "chair",  "child", "city",   "cold",  "come",  "could", "cut",    "day",
    "did",    "do",    "dog",    "done",  "door",  "down",  "eat",    "end",
    "every",  "eye",   "far",    "fast",  "father", "feet", "find",   "fire",
    "first",  "fish",  "five",   "fly",   "food",  "for",   "four",   "friend",
    "from",   "fun",   "game",   "gave",  "get",   "girl",  "give",   "go",
    "good",   "got",   "green",  "grow",  "had",   "hand",  "happy",  "hard",
    "has",    "have",  "he",     "head",  "hear",  "help",  "her",    "here",
    "him",    "his",   "hold",   "home",  "hot",   "house", "how",    "if",
    "in",     "into",  "is",     "it",    "its",   "jump",  "just",   "keep",
    "kind",   "know",  "land",   "large", "last",  "learn", "left",   "let",
    "like",   "little", "live",  "long",  "look",  "made",  "make",   "man",
    "many",   "may",   "me",     "men",   "milk",  "more",  "morning", "most",
    "mother", "move",  "much",   "must",  "my",    "name",  "near",   "need",
    "never",  "new",   "next",   "night", "no",    "not",   "now",    "of",
    "off",    "old",   "on",     "once",  "one",   "only",  "open",   "or",
    "other",  "our",   "out",    "over",  "own",   "play",  "put",    "rain",
    "ran",    "read",  "red",    "ride",  "right", "road",  "room",   "run",
    "said",   "same",  "sat",    "saw",   "say",   "school", "sea",   "see",
    "she",    "show",  "side",   "sing",  "sit",   "six",   "sleep",  "small",
    "so",     "some",  "soon",   "stop",  "sun",   "take",  "talk",   "tell",
    "ten",    "than",  "that",   "the",   "their", "them",  "then",   "there",
    "these",  "they",  "thing",  "think", "this",  "three", "time",   "to",
    "too",    "took",  "top",    "tree",  "try",   "two",   "under",  "up",
    "us",     "use",   "very",   "walk",  "want",  "was",   "water",  "way",
    "we",     "well",  "went",   "were",  "what",  "when",  "where",  "which",
    "white",  "who",   "why",    "will",  "with",  "word",  "work",   "would",
    "yes",    "you",   "your",
};

}  // namespace

WordLists WordLists::builtin() {
  WordLists lists;
  for (const char* w : kDaleChallWords) lists.dale_chall.insert(w);
  for (const char* w : kSpacheWords) lists.spache.insert(w);
  return lists;
}

std::unordered_set<std::string> WordLists::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open word list file: " + path);
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (!line.empty()) words.insert(to_lower(line));
  }
  if (words.empty()) throw SchemaError("word list file is empty: " + path);
  return words;
}

ReadabilityIndices readability_indices(const std::string& text, const WordLists& lists) {
  ReadabilityIndices rd;
  const TokenizedText tok = tokenize(text);
  const double words = static_cast<double>(tok.words.size());
  if (tok.words.empty()) return rd;  // degenerate input: all indices 0
  const double sentences = static_cast<double>(tok.sentences.size());

  double syllables = 0, letters = 0, alnum_chars = 0;
  double polysyllables = 0, easy_words = 0;
  double dc_difficult = 0, spache_difficult = 0;
  for (const auto& w : tok.words) {
    const int syl = count_syllables(w);
    syllables += syl;
    if (syl >= 3) {
      ++polysyllables;
    } else {
      ++easy_words;
    }
    for (char c : w) {
      if (std::isalpha(static_cast<unsigned char>(c))) ++letters;
      if (std::isalnum(static_cast<unsigned char>(c))) ++alnum_chars;
    }
    const std::string lw = to_lower(w);
    if (!lists.dale_chall.count(lw)) ++dc_difficult;
    if (!lists.spache.count(lw)) ++spache_difficult;
  }

  const double wps = words / sentences;
  const double spw = syllables / words;

  rd.flesch_reading_ease = 206.835 - 1.015 * wps - 84.6 * spw;
  rd.flesch_kincaid_grade = 0.39 * wps + 11.8 * spw - 15.59;
  rd.gunning_fog = 0.4 * (wps + 100.0 * polysyllables / words);
  rd.coleman_liau =
      0.0588 * (100.0 * letters / words) - 0.296 * (100.0 * sentences / words) - 15.8;
  {
    const double points = easy_words * 1.0 + polysyllables * 3.0;
    const double r = points / sentences;
    rd.linsear_write = r > 20.0 ? r / 2.0 : r / 2.0 - 1.0;
  }
  rd.automated_readability_index = 4.71 * (alnum_chars / words) + 0.5 * wps - 21.43;
  rd.spache = 0.141 * wps + 0.086 * (100.0 * spache_difficult / words) + 0.839;
  {
    const double pct = 100.0 * dc_difficult / words;
    rd.dale_chall = 0.1579 * pct + 0.0496 * wps + (pct > 5.0 ? 3.6365 : 0.0);
  }
  rd.smog = 1.0430 * std::sqrt(polysyllables * 30.0 / sentences) + 3.1291;
  return rd;
}

std::array<double, 18> EdfVector::as_array() const {
  std::array<double, 18> out{};
  out[0] = n_op;
  for (int i = 0; i < 7; ++i) out[1 + i] = word_counts[i];
  out[8] = grammar_rate;
  const auto rds = readability.as_array();
  for (int i = 0; i < 9; ++i) out[9 + i] = rds[i];
  return out;
}

const std::array<const char*, 18>& EdfVector::feature_names() {
  static const std::array<const char*, 18> names = {
      "n_op",           "wc_stem",
      "wc_answer",      "wc_d1",
      "wc_d2",          "wc_d3",
      "wc_d4",          "wc_explanation",
      "grammar_error_rate", "flesch_reading_ease",
      "flesch_kincaid_grade", "gunning_fog",
      "coleman_liau",   "linsear_write",
      "automated_readability_index", "spache",
      "dale_chall",     "smog",
  };
  return names;
}

EdfVector extract_edf(const McqRecord& mcq, const GrammarChecker& checker,
                      const WordLists& lists) {
  EdfVector edf;
  const auto components = mcq.components();
  std::string full;
  for (int i = 0; i < 7; ++i) {
    const TokenizedText tok = tokenize(*components[i]);
    edf.word_counts[i] = static_cast<int>(tok.words.size());
    if (tok.words.empty()) continue;
    std::string part = trim(*components[i]);
    const char tail = part.back();
    if (tail != '.' && tail != '!' && tail != '?') part += '.';
    if (!full.empty()) full += ' ';
    full += part;
  }
  int present_distractors = 0;
  for (int i = 2; i <= 5; ++i) {
    if (edf.word_counts[i] > 0) ++present_distractors;
  }
  edf.n_op = 1 + present_distractors;
  edf.grammar_rate = grammar_error_rate(full, checker);
  edf.readability = readability_indices(full, lists);
  return edf;
}

FeatureStats FeatureStats::fit(const std::vector<EdfVector>& train) {
  if (train.empty()) throw std::invalid_argument("FeatureStats::fit: empty training set");
  FeatureStats stats;
  const double n = static_cast<double>(train.size());
  for (const auto& v : train) {
    const auto a = v.as_array();
    for (int i = 0; i < 18; ++i) stats.mean[i] += a[i];
  }
  for (int i = 0; i < 18; ++i) stats.mean[i] /= n;
  for (const auto& v : train) {
    const auto a = v.as_array();
    for (int i = 0; i < 18; ++i) {
      const double d = a[i] - stats.mean[i];
      stats.stddev[i] += d * d;
    }
  }
  for (int i = 0; i < 18; ++i) {
    stats.stddev[i] = std::sqrt(stats.stddev[i] / n);
    if (stats.stddev[i] < 1e-12) stats.stddev[i] = 1.0;
  }
  return stats;
}

std::array<double, 18> normalize_edf(const EdfVector& v, const FeatureStats& stats) {
  const auto a = v.as_array();
  std::array<double, 18> out{};
  for (int i = 0; i < 18; ++i) out[i] = (a[i] - stats.mean[i]) / stats.stddev[i];
  return out;
}

}  // namespace aqqr
