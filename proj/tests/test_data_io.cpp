#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "aqqr/data_io.hpp"
#include "aqqr/text_features.hpp"
#include "testutil.hpp"

using namespace aqqr;
using testutil::TempFile;

namespace {

const char* kValidLines =
    R"({"id":"a1","stem":"What is this?","answer":"Yes","distractors":["No","Maybe"],"explanation":"Because.","ratings":[3,4,5]}
{"id":"a2","stem":"Second question.","answer":"Two","distractors":["One"],"average_rating":3.5,"rating_count":12}
{"id":"a3","stem":"Third.","answer":"Three","distractors":["Four","Five","Six","Seven"],"ratings":[2,2,2,2]}
)";

}  // namespace

TEST_CASE("load_jsonl: valid file") {
  TempFile f(kValidLines);
  LoadResult result = load_jsonl(f.path);
  CHECK(result.dataset.size() == 3);
  CHECK(result.issues.empty());
  CHECK(result.dataset.records[0].label() == doctest::Approx(4.0));
  CHECK(result.dataset.records[1].label() == doctest::Approx(3.5));
  CHECK(result.dataset.records[0].rating_count == 3);  // derived from the list
  CHECK(result.dataset.records[1].rating_count == 12);
}

TEST_CASE("load_jsonl: missing answer aborts in strict mode, names the line") {
  TempFile f(
      R"({"id":"a1","stem":"s","answer":"A","distractors":["d"],"ratings":[3]}
{"id":"a2","stem":"s","distractors":["d"],"ratings":[3]}
)");
  CHECK_THROWS_WITH_AS(load_jsonl(f.path), doctest::Contains("line 2"), std::runtime_error);

  LoadOptions lenient;
  lenient.strict = false;
  LoadResult result = load_jsonl(f.path, lenient);
  CHECK(result.dataset.size() == 1);
  REQUIRE(result.issues.size() == 1);
  CHECK(result.issues[0].line == 2);
}

TEST_CASE("load_jsonl: rating outside 0..5 is rejected") {
  TempFile f(R"({"id":"a1","stem":"s","answer":"A","distractors":["d"],"ratings":[3,6]}
)");
  CHECK_THROWS_WITH_AS(load_jsonl(f.path), doctest::Contains("0..5"), std::runtime_error);
}

TEST_CASE("load_jsonl: duplicate id") {
  TempFile f(
      R"({"id":"a1","stem":"s","answer":"A","distractors":["d"],"ratings":[3]}
{"id":"a1","stem":"s","answer":"B","distractors":["d"],"ratings":[4]}
)");
  CHECK_THROWS_WITH_AS(load_jsonl(f.path), doctest::Contains("duplicate"), std::runtime_error);
}

TEST_CASE("load_jsonl: malformed JSON and inconsistent average") {
  TempFile f("this is not json\n");
  CHECK_THROWS_AS(load_jsonl(f.path), std::runtime_error);

  TempFile g(
      R"({"id":"a1","stem":"s","answer":"A","distractors":["d"],"ratings":[3,4],"average_rating":4.9}
)");
  CHECK_THROWS_WITH_AS(load_jsonl(g.path), doctest::Contains("disagrees"), std::runtime_error);
}

TEST_CASE("load_jsonl: unlabeled records only with allow_unlabeled") {
  TempFile f(R"({"id":"a1","stem":"s","answer":"A","distractors":["d"]}
)");
  CHECK_THROWS_AS(load_jsonl(f.path), std::runtime_error);
  LoadOptions opts;
  opts.allow_unlabeled = true;
  CHECK(load_jsonl(f.path, opts).dataset.size() == 1);
}

TEST_CASE("save/load round trip is the identity") {
  TempFile f(kValidLines);
  QualityDataset original = load_jsonl(f.path).dataset;
  TempFile out;
  save_jsonl(original, out.path);
  QualityDataset reloaded = load_jsonl(out.path).dataset;
  REQUIRE(reloaded.size() == original.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    const McqRecord& a = original.records[i];
    const McqRecord& b = reloaded.records[i];
    CHECK(a.id == b.id);
    CHECK(a.stem == b.stem);
    CHECK(a.answer == b.answer);
    CHECK(a.distractors == b.distractors);
    CHECK(a.explanation == b.explanation);
    CHECK(a.ratings == b.ratings);
    CHECK(a.average_rating == b.average_rating);
    CHECK(a.rating_count == b.rating_count);
  }
}

TEST_CASE("filter_and_label") {
  QualityDataset ds;
  McqRecord keep;
  keep.id = "k";
  keep.stem = "s";
  keep.answer = "A";
  keep.distractors = {"d"};
  keep.ratings = {2, 3, 4};
  keep.rating_count = 11;
  McqRecord drop = keep;
  drop.id = "d";
  drop.rating_count = 9;
  ds.records = {keep, drop};

  QualityDataset filtered = filter_and_label(ds, 10);
  REQUIRE(filtered.size() == 1);
  CHECK(filtered.records[0].id == "k");
  CHECK(*filtered.records[0].average_rating == doctest::Approx(3.0));

  // idempotent
  QualityDataset again = filter_and_label(filtered, 10);
  CHECK(again.size() == 1);
  CHECK(*again.records[0].average_rating == *filtered.records[0].average_rating);

  CHECK_THROWS_WITH_AS(filter_and_label(ds, 100), doctest::Contains("empty"),
                       std::runtime_error);
}

TEST_CASE("filter_and_label with threshold 1 takes the mean of ratings") {
  QualityDataset ds;
  McqRecord r;
  r.id = "m";
  r.stem = "s";
  r.answer = "A";
  r.distractors = {"d"};
  r.ratings = {2, 3, 4};
  r.rating_count = 3;
  ds.records = {r};
  CHECK(*filter_and_label(ds, 1).records[0].average_rating == doctest::Approx(3.0));
}

TEST_CASE("generate_synthetic: length-linear rule") {
  SyntheticSpec spec;
  spec.signal = "length-linear";
  spec.n = 50;
  spec.a = 3.0;
  spec.b = 0.01;
  SyntheticResult gen = generate_synthetic(spec, 11);
  CHECK(gen.dataset.size() == 50);
  for (const auto& r : gen.dataset.records) {
    const int wc = static_cast<int>(tokenize(r.stem).words.size());
    const double expected = std::min(5.0, std::max(0.0, 3.0 + 0.01 * wc));
    CHECK(*r.average_rating == doctest::Approx(expected).epsilon(1e-12));
    CHECK(r.rating_count >= 10);
  }
}

TEST_CASE("generate_synthetic: determinism and label range") {
  SyntheticSpec spec;
  spec.signal = "correlation";
  spec.n = 30;
  spec.noise_sigma = 0.2;
  SyntheticResult a = generate_synthetic(spec, 5);
  SyntheticResult b = generate_synthetic(spec, 5);
  REQUIRE(a.dataset.size() == b.dataset.size());
  for (std::size_t i = 0; i < a.dataset.size(); ++i) {
    CHECK(a.dataset.records[i].stem == b.dataset.records[i].stem);
    CHECK(*a.dataset.records[i].average_rating == *b.dataset.records[i].average_rating);
    CHECK(*a.dataset.records[i].average_rating >= 0.0);
    CHECK(*a.dataset.records[i].average_rating <= 5.0);
  }
  // glove tables agree too
  CHECK(a.glove.lookup("blood") == b.glove.lookup("blood"));
}

TEST_CASE("generate_synthetic: vocabulary-split pools are disjoint") {
  SyntheticSpec spec;
  spec.signal = "vocabulary-split";
  spec.n = 40;
  SyntheticResult gen = generate_synthetic(spec, 13);
  std::set<std::string> high_words, low_words;
  for (const auto& r : gen.dataset.records) {
    const bool is_high = *r.average_rating > 2.5;
    std::string all = r.stem + " " + r.answer + " " + r.explanation;
    for (const auto& d : r.distractors) all += " " + d;
    for (const auto& w : tokenize(all).words) {
      (is_high ? high_words : low_words).insert(w);
    }
  }
  CHECK(!high_words.empty());
  CHECK(!low_words.empty());
  for (const auto& w : high_words) CHECK(low_words.count(w) == 0);
}

TEST_CASE("generate_synthetic: unknown signal") {
  SyntheticSpec spec;
  spec.signal = "nonsense";
  CHECK_THROWS_AS(generate_synthetic(spec, 1), std::invalid_argument);
}

TEST_CASE("validate_record collects problems") {
  McqRecord r;
  r.id = "";
  r.answer = "";
  const auto problems = validate_record(r);
  CHECK(problems.size() >= 3);  // id, answer, distractors, label
}
