#include "ner/synthetic.h"

#include <array>
#include <cstdio>
#include <set>
#include <vector>

#include "ner/random.h"

namespace ner {

namespace {

constexpr std::array<std::string_view, 10> kOpenings = {
    "the", "in", "these", "our", "further", "both", "several", "most", "overall", "recent"};

constexpr std::array<std::string_view, 32> kFiller = {
    "patients", "were",     "treated",    "study",       "showed",   "that",      "effect",
    "was",      "observed", "after",      "dose",        "levels",   "increased", "reduced",
    "response", "cells",    "expression", "significant", "compared", "group",     "results",
    "strong",   "activity", "during",     "therapy",     "markedly", "samples",   "clinical",
    "binding",  "assay",    "the",        "and"};

constexpr std::array<std::string_view, 12> kTriggers = {
    "treated with", "expression of", "inhibited by", "levels of",   "response to", "binding of",
    "dose of",      "activity of",   "induced by",   "exposure to", "mediated by", "combined with"};

constexpr std::array<std::string_view, 6> kCapitalizedFiller = {"Monday", "Table", "Figure",
                                                                "Phase",  "Group", "Week"};

constexpr std::array<std::string_view, 18> kOnsets = {
    "b", "c", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "tr", "br", "cl"};
constexpr std::array<std::string_view, 5> kVowels = {"a", "e", "i", "o", "u"};
constexpr std::array<std::string_view, 10> kSuffixes = {
    "ase", "mycin", "vir", "tinib", "olol", "statin", "kine", "zumab", "amide", "oxin"};

template <std::size_t N>
std::string_view pick(Rng& rng, const std::array<std::string_view, N>& items) {
  return items[rng.index(N)];
}

std::string coin_name(Rng& rng) {
  std::string name;
  const std::size_t syllables = 1 + rng.index(2);
  for (std::size_t k = 0; k < syllables; ++k) {
    name += pick(rng, kOnsets);
    name += pick(rng, kVowels);
  }
  name += pick(rng, kSuffixes);
  name[0] = static_cast<char>(name[0] - 'a' + 'A');
  return name;
}

std::string misspell(Rng& rng, std::string word) {
  if (word.size() < 3) return word;
  const std::size_t pos = 1 + rng.index(word.size() - 1);
  const char replacement = static_cast<char>('a' + rng.index(26));
  switch (rng.index(3)) {
    case 0:  // substitution
      word[pos] = word[pos] == replacement ? static_cast<char>('a' + (replacement - 'a' + 1) % 26)
                                           : replacement;
      break;
    case 1:  // deletion
      word.erase(pos, 1);
      break;
    default:  // insertion
      word.insert(word.begin() + static_cast<long>(pos), replacement);
      break;
  }
  return word;
}

std::string mangle_case(Rng& rng, std::string word) {
  const bool upper = rng.bernoulli(0.5);
  for (auto& c : word) {
    if (upper && c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    if (!upper && c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return word;
}

struct Draft {
  std::vector<std::string> words;
  std::vector<char> labels;

  void add(std::string_view phrase, char first_label, char rest_label) {
    std::size_t pos = 0;
    bool first = true;
    while (pos <= phrase.size()) {
      std::size_t sp = phrase.find(' ', pos);
      if (sp == std::string_view::npos) sp = phrase.size();
      words.emplace_back(phrase.substr(pos, sp - pos));
      labels.push_back(first ? first_label : rest_label);
      first = false;
      pos = sp + 1;
    }
  }
};

}  // namespace

std::string generate_synthetic_columns(const SyntheticConfig& config) {
  Rng rng(config.seed);
  std::string out;
  const std::size_t per_doc = std::max<std::size_t>(1, config.sentences_per_document);
  for (std::size_t s = 0; s < config.sentences; ++s) {
    if (s % per_doc == 0) out += "-DOCSTART-\n\n";

    Draft d;
    std::string opening(pick(rng, kOpenings));
    opening[0] = static_cast<char>(opening[0] - 'a' + 'A');
    d.add(opening, 'O', 'O');
    const std::size_t target = 7 + rng.index(9);
    bool has_mention = false;
    while (d.words.size() < target) {
      if (rng.bernoulli(config.mention_density)) {
        if (rng.bernoulli(0.7)) d.add(pick(rng, kTriggers), 'O', 'O');
        const std::size_t roll = rng.index(10);
        const std::size_t length = roll < 6 ? 1 : (roll < 9 ? 2 : 3);
        for (std::size_t k = 0; k < length; ++k) {
          d.words.push_back(coin_name(rng));
          d.labels.push_back(k == 0 ? 'B' : 'I');
        }
        has_mention = true;
      } else if (rng.bernoulli(0.1)) {
        d.add(pick(rng, kCapitalizedFiller), 'O', 'O');
      } else {
        const std::size_t n = 1 + rng.index(3);
        for (std::size_t k = 0; k < n; ++k) d.add(pick(rng, kFiller), 'O', 'O');
      }
    }
    if (!has_mention && rng.bernoulli(config.mention_density)) {
      d.add(pick(rng, kTriggers), 'O', 'O');
      d.words.push_back(coin_name(rng));
      d.labels.push_back('B');
    }

    for (std::size_t k = 0; k < d.words.size(); ++k) {
      std::string w = d.words[k];
      if (rng.bernoulli(config.misspelling_rate)) w = misspell(rng, std::move(w));
      if (rng.bernoulli(config.case_mangling_rate)) w = mangle_case(rng, std::move(w));
      out += w;
      out += '\t';
      out += d.labels[k];
      out += '\n';
    }
    out += ".\tO\n\n";
  }
  return out;
}

Corpus generate_synthetic_corpus(const SyntheticConfig& config) {
  return parse_bio_columns(generate_synthetic_columns(config), "<synthetic>");
}

std::string synthetic_embeddings_text(std::size_t dim, std::uint64_t seed) {
  std::set<std::string> words;
  for (auto w : kOpenings) words.emplace(w);
  for (auto w : kFiller) words.emplace(w);
  for (auto phrase : kTriggers) {
    std::size_t pos = 0;
    while (pos <= phrase.size()) {
      std::size_t sp = phrase.find(' ', pos);
      if (sp == std::string_view::npos) sp = phrase.size();
      words.emplace(phrase.substr(pos, sp - pos));
      pos = sp + 1;
    }
  }
  for (auto w : kCapitalizedFiller) words.emplace(w);
  words.emplace(".");

  Rng rng(seed);
  std::string out;
  char buf[32];
  for (const auto& w : words) {
    out += w;
    for (std::size_t d = 0; d < dim; ++d) {
      std::snprintf(buf, sizeof(buf), " %.6f", rng.uniform(-1.0, 1.0));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

EmbeddingTable synthetic_embeddings(std::size_t dim, std::uint64_t seed) {
  return parse_embeddings(synthetic_embeddings_text(dim, seed), "<synthetic-embeddings>");
}

}  // namespace ner
