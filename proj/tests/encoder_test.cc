#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "ner/encoder.h"

#include "doctest.h"
#include "ner/random.h"
#include "test_util.h"

using namespace ner;
using ner::testing::make_sentence;

namespace {

SurfaceFlags flags(bool initial, bool upper, bool lower, bool mixed) {
  return SurfaceFlags{initial, upper, lower, mixed};
}

std::vector<Sentence> one_sentence(std::string_view text) { return {make_sentence(text)}; }

std::string random_word(Rng& rng) {
  const std::string letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-";
  std::string w;
  const std::size_t n = 1 + rng.index(12);
  for (std::size_t k = 0; k < n; ++k) w += letters[rng.index(letters.size())];
  return w;
}

}  // namespace

TEST_CASE("surface_flags") {
  CHECK(surface_flags("Aspirin") == flags(true, false, false, false));
  CHECK(surface_flags("CD15") == flags(true, true, false, false));
  CHECK(surface_flags(".") == flags(false, false, false, false));
  CHECK(surface_flags("1,000") == flags(false, false, false, false));
  CHECK(surface_flags("aspirin") == flags(false, false, true, false));
  CHECK(surface_flags("iPhone") == flags(false, false, false, true));
  CHECK(surface_flags("McDonald") == flags(true, false, false, true));
  CHECK(surface_flags("A") == flags(true, true, false, false));
  CHECK(surface_flags("anti-CD15") == flags(false, false, false, true));
}

TEST_CASE("surface_flags sets at most one case bit") {
  Rng rng(8);
  for (int round = 0; round < 2000; ++round) {
    const auto f = surface_flags(random_word(rng));
    REQUIRE(int(f.all_uppercase) + int(f.all_lowercase) + int(f.mixed_case) <= 1);
  }
}

TEST_CASE("extract_trigrams") {
  CHECK(extract_trigrams("Aspirin") ==
        std::vector<std::string>{"#as", "asp", "spi", "pir", "iri", "rin", "in#"});
  CHECK(extract_trigrams("a") == std::vector<std::string>{"#a#"});
  CHECK(extract_trigrams("CD15") == std::vector<std::string>{"#cd", "cd1", "d15", "15#"});
  CHECK(extract_trigrams("").empty());
  // Multi-byte characters are windowed as single characters.
  CHECK(extract_trigrams("\xC3\xA9t") == std::vector<std::string>{"#\xC3\xA9t", "\xC3\xA9t#"});
}

TEST_CASE("build_trigram_vocab") {
  const auto v = build_trigram_vocab(one_sentence("aa"));
  CHECK(v.keys() == std::vector<std::string>{"#aa", "aa#"});
  CHECK(v.find("#aa") == 0);
  CHECK(v.find("aa#") == 1);
  CHECK(v.find("zzz") == -1);

  const auto corpus = one_sentence("Aspirin has an antiplatelet effect .");
  CHECK(build_trigram_vocab(corpus) == build_trigram_vocab(corpus));
  CHECK(build_trigram_vocab(one_sentence("ab ab")).size() ==
        build_trigram_vocab(one_sentence("ab")).size());
  CHECK_THROWS_AS(build_trigram_vocab({}), std::invalid_argument);
}

TEST_CASE("build_word_vocab lowercases") {
  const auto v = build_word_vocab(one_sentence("Aspirin aspirin ASPIRIN has"));
  CHECK(v.keys() == std::vector<std::string>{"aspirin", "has"});
  CHECK_THROWS_AS(build_word_vocab({}), std::invalid_argument);
}

TEST_CASE("TRI encoding") {
  const Encoder enc = Encoder::tri(build_trigram_vocab(one_sentence("Aspirin has an effect")));
  const Eigen::VectorXd x = enc.encode_dense("Aspirin");
  REQUIRE(x.size() == static_cast<Eigen::Index>(enc.dim()));
  const auto base = static_cast<Eigen::Index>(enc.encoder_dim());
  CHECK(x.head(base).sum() == 7.0);
  for (const auto& tri : extract_trigrams("Aspirin")) CHECK(x(enc.vocabulary().find(tri)) == 1.0);
  CHECK(x(base + 0) == 1.0);  // initial_capital
  CHECK(x.tail(3).sum() == 0.0);

  // Repeated trigrams are clipped to one.
  const Encoder rep = Encoder::tri(build_trigram_vocab(one_sentence("aaaa")));
  CHECK(rep.encode_dense("aaaa").head(static_cast<Eigen::Index>(rep.encoder_dim())).maxCoeff() ==
        1.0);

  // Unseen trigrams are skipped.
  const Eigen::VectorXd y = enc.encode_dense("Aspirxn");
  CHECK(y.head(base).sum() == 4.0);
}

TEST_CASE("DICT encoding of unseen words is the zero vector plus flags") {
  const Encoder enc = Encoder::dict(build_word_vocab(one_sentence("They strengthened the wall")));
  const auto base = static_cast<Eigen::Index>(enc.encoder_dim());
  const Eigen::VectorXd seen = enc.encode_dense("Strengthened");
  CHECK(seen.head(base).sum() == 1.0);
  CHECK(seen(enc.vocabulary().find("strengthened")) == 1.0);

  const Eigen::VectorXd miss = enc.encode_dense("strengthnend");
  CHECK(miss.head(base).isZero());
  CHECK(miss(base + 2) == 1.0);  // all_lowercase
}

TEST_CASE("EMB encoding") {
  const EmbeddingTable table = parse_embeddings("aspirin 0.5 -1 2\nhas 0 0 1\n");
  const Encoder enc = Encoder::emb(table);
  CHECK(enc.dim() == 3 + kNumFlags);
  const Eigen::VectorXd x = enc.encode_dense("Aspirin");
  CHECK(x(0) == 0.5);
  CHECK(x(1) == -1.0);
  CHECK(x(2) == 2.0);
  CHECK(x(3) == 1.0);

  const std::size_t before = enc.table().misses();
  const Eigen::VectorXd miss = enc.encode_dense("ibuprofen");
  CHECK(miss.head(3).isZero());
  CHECK(miss(5) == 1.0);
  CHECK(enc.table().misses() == before + 1);
}

TEST_CASE("load_embeddings") {
  const auto t = parse_embeddings("a 1 2 3\nb 4 5 6\n");
  CHECK(t.size() == 2);
  CHECK(t.dim() == 3);
  try {
    parse_embeddings("a 1 2 3\nb 4 5\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  try {
    parse_embeddings("");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("no vectors") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_embeddings("a 1 x\n"), ParseError);
  CHECK_THROWS_AS(load_embeddings("/nonexistent/vectors.txt"), std::runtime_error);
}

TEST_CASE("encoder output dimension is constant") {
  const Encoder enc = Encoder::tri(build_trigram_vocab(one_sentence("Aspirin has an effect")));
  Rng rng(4);
  for (int round = 0; round < 200; ++round) {
    REQUIRE(enc.encode(random_word(rng)).size() == static_cast<Eigen::Index>(enc.dim()));
  }
  const auto m = enc.encode_sentence(make_sentence("Aspirin has an effect ."));
  CHECK(m.rows() == static_cast<Eigen::Index>(enc.dim()));
  CHECK(m.cols() == 5);
}

TEST_CASE("TRI case robustness and misspelling locality") {
  std::vector<Sentence> train;
  Rng rng(21);
  for (int k = 0; k < 200; ++k) {
    std::string text;
    for (int w = 0; w < 8; ++w) text += random_word(rng) + " ";
    train.push_back(make_sentence(text));
  }
  const Encoder enc = Encoder::tri(build_trigram_vocab(train));
  const auto base = static_cast<Eigen::Index>(enc.encoder_dim());
  for (int round = 0; round < 1000; ++round) {
    const std::string w = random_word(rng);
    const Eigen::VectorXd a = enc.encode_dense(w);
    const Eigen::VectorXd b = enc.encode_dense(ascii_lowercase(w));
    REQUIRE(a.head(base) == b.head(base));

    std::string typo = w;
    typo[rng.index(typo.size())] = static_cast<char>('a' + rng.index(26));
    const Eigen::VectorXd c = enc.encode_dense(typo);
    REQUIRE((a.head(base) - c.head(base)).cwiseAbs().sum() <= 6.0);
  }
}
