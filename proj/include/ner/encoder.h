#ifndef NER_ENCODER_H_
#define NER_ENCODER_H_

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <atomic>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ner/corpus.h"

namespace ner {

enum class EncoderMethod { kDict, kEmb, kTri };

std::string to_string(EncoderMethod method);
EncoderMethod parse_encoder_method(std::string_view name);

inline constexpr std::size_t kNumFlags = 4;

// Case classes over ASCII letters. A capitalized word ("Aspirin") sets only
// initial_capital; none of the three case bits apply to it.
struct SurfaceFlags {
  bool initial_capital = false;
  bool all_uppercase = false;
  bool all_lowercase = false;
  bool mixed_case = false;

  friend bool operator==(const SurfaceFlags&, const SurfaceFlags&) = default;
};

SurfaceFlags surface_flags(std::string_view token_text);

std::string ascii_lowercase(std::string_view text);

// Lowercased, '#'-wrapped, all 3-character windows (characters are UTF-8 code
// points). Empty input yields no trigrams.
std::vector<std::string> extract_trigrams(std::string_view token_text);

// Dense index over a sorted key set.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> sorted_unique_keys);

  std::size_t size() const { return keys_.size(); }
  const std::vector<std::string>& keys() const { return keys_; }
  // -1 when absent.
  long find(std::string_view key) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.keys_ == b.keys_; }

 private:
  std::vector<std::string> keys_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Lexicographic index assignment. Throws std::invalid_argument on an empty set.
Vocabulary build_trigram_vocab(const std::vector<Sentence>& train_sentences);
Vocabulary build_word_vocab(const std::vector<Sentence>& train_sentences);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t dim, std::vector<std::string> words, std::vector<double> values);
  EmbeddingTable(const EmbeddingTable& other);
  EmbeddingTable& operator=(const EmbeddingTable& other);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<double>& values() const { return values_; }

  // Exact match first, then the lowercased form. nullptr counts a miss.
  const double* lookup(std::string_view word) const;
  std::size_t misses() const { return misses_.load(std::memory_order_relaxed); }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> words_;
  std::vector<double> values_;  // row-major, size() x dim()
  std::unordered_map<std::string, std::size_t> index_;
  mutable std::atomic<std::size_t> misses_{0};
};

// "word v1 ... vd" per line. Errors name the offending line.
EmbeddingTable load_embeddings(const std::string& path);
EmbeddingTable parse_embeddings(std::string_view content, const std::string& source = "<memory>");

// A configured token encoder. Output layout: [encoder part | 4 flag slots],
// flags ordered (initial_capital, all_uppercase, all_lowercase, mixed_case).
class Encoder {
 public:
  static Encoder dict(Vocabulary words);
  static Encoder tri(Vocabulary trigrams);
  static Encoder emb(EmbeddingTable table);

  EncoderMethod method() const { return method_; }
  std::size_t encoder_dim() const;
  std::size_t dim() const { return encoder_dim() + kNumFlags; }

  const Vocabulary& vocabulary() const { return vocab_; }
  const EmbeddingTable& table() const { return *table_; }

  Eigen::SparseVector<double> encode(std::string_view token_text) const;
  Eigen::VectorXd encode_dense(std::string_view token_text) const;
  // dim() x |tokens|, one column per token.
  Eigen::SparseMatrix<double> encode_sentence(const Sentence& sentence) const;

 private:
  Encoder(EncoderMethod method, Vocabulary vocab, std::shared_ptr<const EmbeddingTable> table);

  EncoderMethod method_;
  Vocabulary vocab_;
  std::shared_ptr<const EmbeddingTable> table_;
};

}  // namespace ner

#endif  // NER_ENCODER_H_
