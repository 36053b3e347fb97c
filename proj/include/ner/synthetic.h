#ifndef NER_SYNTHETIC_H_
#define NER_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <string>

#include "ner/corpus.h"
#include "ner/encoder.h"

namespace ner {

// Seeded generator of labeled biomedical-flavoured sentences. Mentions are
// freshly coined drug/protein-like names (so most test mentions are unseen in
// training) with class suffixes, usually introduced by trigger phrases.
struct SyntheticConfig {
  std::size_t sentences = 200;
  std::size_t sentences_per_document = 10;
  // Per-word probability of a single-character typo.
  double misspelling_rate = 0.0;
  // Per-word probability of forcing the word to all-lowercase or all-uppercase.
  double case_mangling_rate = 0.0;
  // Probability that the next chunk of a sentence is a mention.
  double mention_density = 0.3;
  std::uint64_t seed = 1;
};

// BIO column text, parseable by parse_bio_columns.
std::string generate_synthetic_columns(const SyntheticConfig& config);
Corpus generate_synthetic_corpus(const SyntheticConfig& config);

// Random vectors for the generator's (correctly spelled) function and content
// words. Coined mention names are never covered.
EmbeddingTable synthetic_embeddings(std::size_t dim, std::uint64_t seed);
std::string synthetic_embeddings_text(std::size_t dim, std::uint64_t seed);

}  // namespace ner

#endif  // NER_SYNTHETIC_H_
