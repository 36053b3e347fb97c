#include "ner/encoder.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ner {

namespace {

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }

// Splits UTF-8 into code point substrings. Stray continuation bytes become
// their own unit.
std::vector<std::string_view> utf8_chars(std::string_view text) {
  std::vector<std::string_view> chars;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0)
      len = 4;
    else if (lead >= 0xE0)
      len = 3;
    else if (lead >= 0xC0)
      len = 2;
    len = std::min(len, text.size() - i);
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        len = k;
        break;
      }
    }
    chars.push_back(text.substr(i, len));
    i += len;
  }
  return chars;
}

std::vector<std::string> sorted_keys(const std::set<std::string>& keys) {
  return {keys.begin(), keys.end()};
}

}  // namespace

std::string to_string(EncoderMethod method) {
  switch (method) {
    case EncoderMethod::kDict:
      return "DICT";
    case EncoderMethod::kEmb:
      return "EMB";
    case EncoderMethod::kTri:
      return "TRI";
  }
  return "?";
}

EncoderMethod parse_encoder_method(std::string_view name) {
  std::string upper(name);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "DICT") return EncoderMethod::kDict;
  if (upper == "EMB") return EncoderMethod::kEmb;
  if (upper == "TRI") return EncoderMethod::kTri;
  throw std::invalid_argument("unknown encoder '" + std::string(name) + "' (DICT, EMB, TRI)");
}

std::string ascii_lowercase(std::string_view text) {
  std::string out(text);
  for (auto& c : out) {
    if (is_upper(c)) c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

SurfaceFlags surface_flags(std::string_view token_text) {
  SurfaceFlags flags;
  std::size_t upper = 0;
  std::size_t lower = 0;
  bool first_letter_seen = false;
  bool first_upper = false;
  for (char c : token_text) {
    if (!is_upper(c) && !is_lower(c)) continue;
    if (!first_letter_seen) {
      first_letter_seen = true;
      first_upper = is_upper(c);
    }
    (is_upper(c) ? upper : lower) += 1;
  }
  if (upper + lower == 0) return flags;
  flags.initial_capital = first_upper;
  if (lower == 0) {
    flags.all_uppercase = true;
  } else if (upper == 0) {
    flags.all_lowercase = true;
  } else if (!(first_upper && upper == 1)) {
    flags.mixed_case = true;
  }
  return flags;
}

std::vector<std::string> extract_trigrams(std::string_view token_text) {
  std::vector<std::string> out;
  if (token_text.empty()) return out;
  const std::string marked = "#" + ascii_lowercase(token_text) + "#";
  const auto chars = utf8_chars(marked);
  out.reserve(chars.size() - 2);
  for (std::size_t i = 0; i + 3 <= chars.size(); ++i) {
    std::string tri;
    for (std::size_t k = 0; k < 3; ++k) tri.append(chars[i + k]);
    out.push_back(std::move(tri));
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> sorted_unique_keys)
    : keys_(std::move(sorted_unique_keys)) {
  index_.reserve(keys_.size());
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    if (i > 0 && !(keys_[i - 1] < keys_[i])) {
      throw std::invalid_argument("vocabulary keys must be sorted and unique");
    }
    index_.emplace(keys_[i], i);
  }
}

long Vocabulary::find(std::string_view key) const {
  auto it = index_.find(std::string(key));
  return it == index_.end() ? -1 : static_cast<long>(it->second);
}

Vocabulary build_trigram_vocab(const std::vector<Sentence>& train_sentences) {
  std::set<std::string> trigrams;
  for (const auto& s : train_sentences) {
    for (const auto& token : s.tokens) {
      for (auto& tri : extract_trigrams(token.text)) trigrams.insert(std::move(tri));
    }
  }
  if (trigrams.empty())
    throw std::invalid_argument("cannot build a trigram vocabulary from no tokens");
  return Vocabulary(sorted_keys(trigrams));
}

Vocabulary build_word_vocab(const std::vector<Sentence>& train_sentences) {
  std::set<std::string> words;
  for (const auto& s : train_sentences) {
    for (const auto& token : s.tokens) words.insert(ascii_lowercase(token.text));
  }
  if (words.empty()) throw std::invalid_argument("cannot build a word vocabulary from no tokens");
  return Vocabulary(sorted_keys(words));
}

EmbeddingTable::EmbeddingTable(std::size_t dim, std::vector<std::string> words,
                               std::vector<double> values)
    : dim_(dim), words_(std::move(words)), values_(std::move(values)) {
  if (values_.size() != words_.size() * dim_) {
    throw std::invalid_argument("embedding values do not match words x dim");
  }
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], i);
}

EmbeddingTable::EmbeddingTable(const EmbeddingTable& other)
    : dim_(other.dim_), words_(other.words_), values_(other.values_), index_(other.index_) {}

EmbeddingTable& EmbeddingTable::operator=(const EmbeddingTable& other) {
  dim_ = other.dim_;
  words_ = other.words_;
  values_ = other.values_;
  index_ = other.index_;
  misses_.store(0, std::memory_order_relaxed);
  return *this;
}

const double* EmbeddingTable::lookup(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) it = index_.find(ascii_lowercase(word));
  if (it == index_.end()) {
    misses_.fetch_add(1, std::memory_order_relaxed);
    return nullptr;
  }
  return values_.data() + it->second * dim_;
}

EmbeddingTable parse_embeddings(std::string_view content, const std::string& source) {
  std::size_t dim = 0;
  std::vector<std::string> words;
  std::vector<double> values;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    std::vector<std::string_view> fields;
    std::size_t f = 0;
    while (f < line.size()) {
      while (f < line.size() && (line[f] == ' ' || line[f] == '\t')) ++f;
      std::size_t e = f;
      while (e < line.size() && line[e] != ' ' && line[e] != '\t') ++e;
      if (e > f) fields.push_back(line.substr(f, e - f));
      f = e;
    }
    const std::size_t d = fields.size() - 1;
    if (d == 0) throw ParseError(source, line_no, "word without vector components");
    if (dim == 0) {
      dim = d;
    } else if (d != dim) {
      throw ParseError(
          source, line_no,
          "vector has dimension " + std::to_string(d) + ", expected " + std::to_string(dim));
    }
    std::string word(fields[0]);
    if (!seen.insert(word).second) {
      throw ParseError(source, line_no, "duplicate word '" + word + "'");
    }
    for (std::size_t k = 1; k < fields.size(); ++k) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(fields[k].data(), fields[k].data() + fields[k].size(), v);
      if (ec != std::errc() || ptr != fields[k].data() + fields[k].size()) {
        throw ParseError(source, line_no, "bad number '" + std::string(fields[k]) + "'");
      }
      values.push_back(v);
    }
    words.push_back(std::move(word));
  }
  if (words.empty()) throw ParseError(source, line_no, "no vectors");
  return EmbeddingTable(dim, std::move(words), std::move(values));
}

EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_embeddings(buffer.str(), path);
}

Encoder::Encoder(EncoderMethod method, Vocabulary vocab,
                 std::shared_ptr<const EmbeddingTable> table)
    : method_(method), vocab_(std::move(vocab)), table_(std::move(table)) {}

Encoder Encoder::dict(Vocabulary words) {
  return Encoder(EncoderMethod::kDict, std::move(words), nullptr);
}

Encoder Encoder::tri(Vocabulary trigrams) {
  return Encoder(EncoderMethod::kTri, std::move(trigrams), nullptr);
}

Encoder Encoder::emb(EmbeddingTable table) {
  if (table.dim() == 0) throw std::invalid_argument("embedding table is empty");
  return Encoder(EncoderMethod::kEmb, Vocabulary{},
                 std::make_shared<const EmbeddingTable>(std::move(table)));
}

std::size_t Encoder::encoder_dim() const {
  return method_ == EncoderMethod::kEmb ? table_->dim() : vocab_.size();
}

Eigen::SparseVector<double> Encoder::encode(std::string_view token_text) const {
  const auto base = static_cast<Eigen::Index>(encoder_dim());
  Eigen::SparseVector<double> v(static_cast<Eigen::Index>(dim()));

  switch (method_) {
    case EncoderMethod::kDict: {
      const long idx = vocab_.find(ascii_lowercase(token_text));
      if (idx >= 0) v.insert(idx) = 1.0;
      break;
    }
    case EncoderMethod::kTri: {
      std::vector<long> indices;
      for (const auto& tri : extract_trigrams(token_text)) {
        const long idx = vocab_.find(tri);
        if (idx >= 0) indices.push_back(idx);
      }
      std::sort(indices.begin(), indices.end());
      indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
      v.reserve(static_cast<Eigen::Index>(indices.size() + kNumFlags));
      for (long idx : indices) v.insert(idx) = 1.0;
      break;
    }
    case EncoderMethod::kEmb: {
      if (const double* row = table_->lookup(token_text)) {
        for (Eigen::Index k = 0; k < base; ++k) {
          if (row[k] != 0.0) v.insert(k) = row[k];
        }
      }
      break;
    }
  }

  const SurfaceFlags flags = surface_flags(token_text);
  const bool slots[kNumFlags] = {flags.initial_capital, flags.all_uppercase, flags.all_lowercase,
                                 flags.mixed_case};
  for (std::size_t k = 0; k < kNumFlags; ++k) {
    if (slots[k]) v.insert(base + static_cast<Eigen::Index>(k)) = 1.0;
  }
  return v;
}

Eigen::VectorXd Encoder::encode_dense(std::string_view token_text) const {
  return Eigen::VectorXd(encode(token_text));
}

Eigen::SparseMatrix<double> Encoder::encode_sentence(const Sentence& sentence) const {
  Eigen::SparseMatrix<double> x(static_cast<Eigen::Index>(dim()),
                                static_cast<Eigen::Index>(sentence.size()));
  std::vector<Eigen::Triplet<double>> entries;
  for (std::size_t t = 0; t < sentence.size(); ++t) {
    const auto v = encode(sentence.tokens[t].text);
    for (Eigen::SparseVector<double>::InnerIterator it(v); it; ++it) {
      entries.emplace_back(static_cast<int>(it.index()), static_cast<int>(t), it.value());
    }
  }
  x.setFromTriplets(entries.begin(), entries.end());
  return x;
}

}  // namespace ner
