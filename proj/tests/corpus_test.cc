#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "ner/corpus.h"

#include <set>
#include <sstream>

#include "doctest.h"
#include "ner/random.h"
#include "test_util.h"

using namespace ner;
using ner::testing::labels_from;
using ner::testing::make_sentence;
using ner::testing::token_texts;

namespace {

constexpr std::string_view kFigureSentence = "Aspirin has an antiplatelet effect.";

std::vector<SentenceInterval> intervals(std::initializer_list<std::pair<Offset, Offset>> list) {
  std::vector<SentenceInterval> out;
  for (auto [b, e] : list) out.push_back({b, e});
  return out;
}

}  // namespace

TEST_CASE("split_sentences examples") {
  CHECK(split_sentences("").empty());
  CHECK(split_sentences("   \n ").empty());
  CHECK(split_sentences(kFigureSentence) == intervals({{0, 35}}));
  CHECK(split_sentences("It failed. We retried.") == intervals({{0, 10}, {11, 22}}));
}

TEST_CASE("split_sentences respects abbreviations and initials") {
  CHECK(split_sentences("Dr. Smith arrived. He left.") == intervals({{0, 18}, {19, 27}}));
  CHECK(split_sentences("The U.S. Team won.").size() == 1);
  CHECK(split_sentences("Drugs, e.g. Aspirin, help.").size() == 1);
  CHECK(split_sentences("Written by J. Doe today.").size() == 1);
  // Lowercase continuation never starts a sentence.
  CHECK(split_sentences("It failed. we retried.").size() == 1);
  // Digits do.
  CHECK(split_sentences("It failed! 3 retries followed?") == intervals({{0, 10}, {11, 30}}));
  CHECK(split_sentences("He said \"stop.\" Then left.") == intervals({{0, 15}, {16, 26}}));
}

TEST_CASE("split_sentences covers every non-whitespace character") {
  Rng rng(3);
  const std::string alphabet = "ab A.!? \n";
  for (int round = 0; round < 500; ++round) {
    std::string text;
    const std::size_t n = rng.index(40);
    for (std::size_t k = 0; k < n; ++k) text += alphabet[rng.index(alphabet.size())];
    const auto parts = split_sentences(text);
    std::vector<bool> covered(text.size(), false);
    Offset last = 0;
    for (const auto& p : parts) {
      REQUIRE(p.begin < p.end);
      REQUIRE(p.begin >= last);
      last = p.end;
      for (Offset k = p.begin; k < p.end; ++k) covered[k] = true;
    }
    for (std::size_t k = 0; k < text.size(); ++k) {
      if (text[k] != ' ' && text[k] != '\n') REQUIRE(covered[k]);
    }
  }
}

TEST_CASE("tokenize examples") {
  CHECK(token_texts(tokenize(kFigureSentence, 0)) ==
        std::vector<std::string>{"Aspirin", "has", "an", "antiplatelet", "effect", "."});
  CHECK(token_texts(tokenize("anti-CD15 cross-linked", 0)) ==
        std::vector<std::string>{"anti-CD15", "cross-linked"});
  CHECK(token_texts(tokenize("(CD15)", 0)) == std::vector<std::string>{"(", "CD15", ")"});
  CHECK(token_texts(tokenize("and/or \"quoted\", U.S. 1,000.", 0)) ==
        std::vector<std::string>{"and/or", "\"", "quoted", "\"", ",", "U.S.", "1,000", "."});
}

TEST_CASE("tokenize shifts offsets by the sentence start") {
  const std::string doc = "It failed. We retried.";
  for (const auto& interval : split_sentences(doc)) {
    const auto tokens =
        tokenize(std::string_view(doc).substr(interval.begin, interval.end - interval.begin),
                 interval.begin);
    for (const auto& t : tokens) {
      CHECK(doc.substr(t.begin, t.end - t.begin) == t.text);
    }
  }
  const auto tokens = tokenize("We retried.", 11);
  CHECK(tokens.front().begin == 11);
  CHECK(tokens.back().end == 22);
}

TEST_CASE("segment keeps token offsets consistent with the text") {
  Rng rng(17);
  const std::vector<std::string> pieces = {"Aspirin", "(CD15)",  "anti-CD15", "e.g.",  "U.S.",
                                           "It",      "failed.", "We",        "\"x\"", "3",
                                           "a,",      "b;",      "?",         "Dr.",   "end!"};
  for (int round = 0; round < 300; ++round) {
    std::string text;
    const std::size_t n = rng.index(25);
    for (std::size_t k = 0; k < n; ++k) {
      text += pieces[rng.index(pieces.size())];
      text += rng.bernoulli(0.2) ? "  " : (rng.bernoulli(0.1) ? "\n" : " ");
    }
    Offset last = 0;
    for (const auto& s : segment(text)) {
      for (const auto& t : s.tokens) {
        REQUIRE(t.begin < t.end);
        REQUIRE(t.begin >= last);
        REQUIRE(text.substr(t.begin, t.end - t.begin) == t.text);
        last = t.end;
      }
    }
  }
}

TEST_CASE("mentions_to_bio2 examples") {
  const Sentence s = make_sentence("Aspirin has an antiplatelet effect .");
  const std::vector<MentionSpan> mentions = {{"d", 0, 7}, {"d", 15, 34}};
  CHECK(mentions_to_bio2(s, mentions) == labels_from("BOOBIO"));
  CHECK(mentions_to_bio2(s, {}) == labels_from("OOOOOO"));

  const Sentence pair = make_sentence("Aspirin Ibuprofen");
  CHECK(mentions_to_bio2(pair, {{"d", 0, 7}, {"d", 8, 17}}) == labels_from("BB"));
}

TEST_CASE("mentions_to_bio2 labels partially covered tokens") {
  const Sentence s = make_sentence("anti-CD15 cells");
  CHECK(mentions_to_bio2(s, {{"d", 5, 9}}) == labels_from("BO"));
  CHECK(mentions_to_bio2(s, {{"d", 5, 12}}) == labels_from("BI"));
}

TEST_CASE("mentions_to_bio2 rejects overlapping mentions") {
  const Sentence s = make_sentence("Aspirin has an antiplatelet effect .");
  CHECK_THROWS_AS(mentions_to_bio2(s, {{"d", 0, 7}, {"d", 5, 10}}), ValidationError);
  CHECK_THROWS_AS(mentions_to_bio2(s, {{"d", 15, 34}, {"d", 20, 22}}), ValidationError);
}

TEST_CASE("mentions_to_bio2 never starts a sentence with I") {
  Rng rng(5);
  const Sentence s = ner::testing::letter_sentence(12);
  for (int round = 0; round < 1000; ++round) {
    std::vector<MentionSpan> mentions;
    Offset pos = rng.index(4);
    while (pos < 24) {
      const Offset len = 1 + rng.index(6);
      mentions.push_back({"d", pos, pos + len});
      pos += len + rng.index(5);
    }
    const auto labels = mentions_to_bio2(s, mentions);
    REQUIRE(labels.front() != Label::I);
  }
}

TEST_CASE("read_bio_column_file fixtures") {
  SUBCASE("single mention") {
    const Corpus c = parse_bio_columns("Aspirin\tB\n.\tO\n\n");
    REQUIRE(c.documents.size() == 1);
    REQUIRE(c.documents[0].sentences.size() == 1);
    REQUIRE(c.documents[0].gold_mentions.size() == 1);
    CHECK(c.documents[0].text == "Aspirin .");
    CHECK(c.documents[0].gold_mentions[0] == MentionSpan{"doc0", 0, 7});
  }
  SUBCASE("empty file") { CHECK(parse_bio_columns("").documents.empty()); }
  SUBCASE("unknown label") {
    try {
      parse_bio_columns("foo\tX\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 1);
    }
  }
  SUBCASE("wrong column count") {
    try {
      parse_bio_columns("a\tO\nlonely\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
}

TEST_CASE("read_bio_column_file documents, typed labels and IOB1 input") {
  const std::string text =
      "-DOCSTART- -X- O O\n\n"
      "EU NNP B-NP I-ORG\nrejects VBZ B-VP O\nGerman JJ B-NP I-MISC\ncall NN I-NP O\n\n"
      "-DOCSTART-\n\n"
      "Peter\tB-PER\nBlackburn\tI-PER\n\nBRUSSELS\tI-LOC\n";
  const Corpus c = parse_bio_columns(text);
  REQUIRE(c.documents.size() == 2);
  CHECK(c.documents[0].doc_id == "doc0");
  CHECK(c.documents[1].doc_id == "doc1");
  CHECK(*c.documents[0].sentences[0].labels == labels_from("BOBO"));
  CHECK(c.documents[0].gold_mentions.size() == 2);
  CHECK(c.documents[1].sentences.size() == 2);
  // A leading I is normalized to B.
  CHECK(*c.documents[1].sentences[1].labels == labels_from("B"));
  CHECK(c.documents[1].gold_mentions.size() == 2);
  validate_corpus(c);
}

TEST_CASE("column parser is total: valid corpus or located error") {
  Rng rng(11);
  const std::vector<std::string> lines = {"a\tB",        "b\tI",      "c\tO", "",
                                          "-DOCSTART-",  "x\tQ",      "y",    "\t",
                                          "z\tO\textra", "w\tI-GENE", "q B"};
  for (int round = 0; round < 2000; ++round) {
    std::string text;
    const std::size_t n = rng.index(12);
    for (std::size_t k = 0; k < n; ++k) text += lines[rng.index(lines.size())] + "\n";
    try {
      const Corpus c = parse_bio_columns(text);
      validate_corpus(c);
      for (const auto& d : c.documents) {
        for (const auto& s : d.sentences) {
          REQUIRE(s.labels);
          REQUIRE(s.labels->size() == s.size());
          if (!s.labels->empty()) REQUIRE(s.labels->front() != Label::I);
        }
      }
    } catch (const ParseError& e) {
      REQUIRE(e.line() >= 1);
      REQUIRE(e.line() <= n);
    }
  }
}

TEST_CASE("write_bio_columns round-trips through the parser") {
  const Corpus c =
      parse_bio_columns("Aspirin\tB\nhas\tO\nan\tO\nantiplatelet\tB\neffect\tI\n.\tO\n\n");
  std::ostringstream out;
  write_bio_columns(c, out);
  const Corpus again = parse_bio_columns(out.str());
  REQUIRE(again.documents.size() == 1);
  CHECK(again.documents[0].text == c.documents[0].text);
  CHECK(*again.documents[0].sentences[0].labels == *c.documents[0].sentences[0].labels);
}

TEST_CASE("read_standoff fixtures") {
  const std::string text = "Aspirin has an antiplatelet effect.\n";
  REQUIRE(text.size() == 36);
  SUBCASE("one mention") {
    const Corpus c = parse_standoff(
        R"([{"doc_id": "fig1", "text": "Aspirin has an antiplatelet effect.\n", "mentions": [{"begin": 0, "end": 7}]}])");
    REQUIRE(c.documents.size() == 1);
    const auto& d = c.documents[0];
    REQUIRE(d.gold_mentions.size() == 1);
    CHECK(d.text.substr(d.gold_mentions[0].begin, 7) == "Aspirin");
    CHECK(*d.sentences[0].labels == labels_from("BOOOOO"));
  }
  SUBCASE("out of bounds") {
    CHECK_THROWS_AS(
        parse_standoff(
            R"({"doc_id": "x", "text": "Aspirin has an antiplatelet effect.\n", "mentions": [{"begin": 30, "end": 99}]})"),
        ValidationError);
  }
  SUBCASE("zero mentions") {
    const Corpus c =
        parse_standoff(R"({"documents": [{"doc_id": "x", "text": "No mentions here."}]})");
    REQUIRE(c.documents.size() == 1);
    CHECK(c.documents[0].gold_mentions.empty());
    CHECK(*c.documents[0].sentences[0].labels == labels_from("OOOO"));
  }
  SUBCASE("JSON Lines with overlap rejected") {
    CHECK_THROWS_AS(parse_standoff("{\"doc_id\": \"a\", \"text\": \"abc def\", \"mentions\": "
                                   "[{\"begin\": 0, \"end\": 5}, {\"begin\": 4, \"end\": 7}]}\n"),
                    ValidationError);
  }
  SUBCASE("duplicate ids rejected") {
    CHECK_THROWS_AS(
        parse_standoff(
            "{\"doc_id\": \"a\", \"text\": \"x\"}\n{\"doc_id\": \"a\", \"text\": \"y\"}\n"),
        ValidationError);
  }
}

TEST_CASE("write_standoff_record output parses back") {
  std::ostringstream out;
  write_standoff_record("fig1", kFigureSentence, {{"fig1", 0, 7}, {"fig1", 15, 34}}, out);
  write_standoff_record("empty", "", {}, out);
  const Corpus c = parse_standoff(out.str());
  REQUIRE(c.documents.size() == 2);
  CHECK(c.documents[0].gold_mentions.size() == 2);
  CHECK(c.documents[0].gold_mentions[1] == MentionSpan{"fig1", 15, 34});
  CHECK(out.str().find("\"surface\":\"antiplatelet effect\"") != std::string::npos);
}

namespace {

Corpus numbered_corpus(std::size_t n) {
  std::string text;
  for (std::size_t k = 0; k < n; ++k) {
    if (k % 100 == 0) text += "-DOCSTART-\n\n";
    text += "s" + std::to_string(k) + "\tO\n\n";
  }
  return parse_bio_columns(text);
}

}  // namespace

TEST_CASE("sample_split") {
  const Corpus c = numbered_corpus(4000);
  REQUIRE(c.sentence_count() == 4000);

  const auto split = sample_split(c, 2000, 2000, 42);
  std::set<std::string> train, test;
  for (const auto& s : split.train) train.insert(s.tokens[0].text);
  for (const auto& s : split.test) test.insert(s.tokens[0].text);
  CHECK(train.size() == 2000);
  CHECK(test.size() == 2000);
  std::set<std::string> all = train;
  all.insert(test.begin(), test.end());
  CHECK(all.size() == 4000);

  CHECK(sample_split(c, 0, 10, 1).train.empty());

  const auto again = sample_split(c, 2000, 2000, 42);
  for (std::size_t k = 0; k < 2000; ++k) {
    REQUIRE(again.train[k].tokens[0].text == split.train[k].tokens[0].text);
  }
  const auto other = sample_split(c, 2000, 2000, 43);
  bool differs = false;
  for (std::size_t k = 0; k < 2000; ++k)
    differs |= other.train[k].tokens[0].text != split.train[k].tokens[0].text;
  CHECK(differs);

  try {
    sample_split(c, 3000, 1001, 1);
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("4000") != std::string::npos);
  }
}
