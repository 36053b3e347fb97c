#ifndef NER_CORPUS_H_
#define NER_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ner {

// Offsets are UTF-8 byte offsets into the owning document text, half-open.
using Offset = std::size_t;

// Class order doubles as the argmax tie-break order.
enum class Label : std::uint8_t { B = 0, I = 1, O = 2 };

inline constexpr std::size_t kNumLabels = 3;

char label_char(Label label);
std::optional<Label> parse_label(std::string_view text);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Token {
  std::string text;
  Offset begin = 0;
  Offset end = 0;
};

struct Sentence {
  std::vector<Token> tokens;
  std::optional<std::vector<Label>> labels;

  std::size_t size() const { return tokens.size(); }
  bool labeled() const { return labels.has_value(); }
};

struct MentionSpan {
  std::string doc_id;
  Offset begin = 0;
  Offset end = 0;

  friend bool operator==(const MentionSpan&, const MentionSpan&) = default;
};

struct Document {
  std::string doc_id;
  std::string text;
  std::vector<Sentence> sentences;
  std::vector<MentionSpan> gold_mentions;
};

struct Corpus {
  std::vector<Document> documents;

  std::size_t sentence_count() const;
};

struct SentenceInterval {
  Offset begin = 0;
  Offset end = 0;

  friend bool operator==(const SentenceInterval&, const SentenceInterval&) = default;
};

// Rule-based sentence boundaries: a break follows '.', '!' or '?' (plus any
// closing quotes/brackets) when whitespace and then an uppercase letter or a
// digit come next. Single-letter initials and a short abbreviation list never
// end a sentence. Intervals are trimmed of surrounding whitespace.
std::vector<SentenceInterval> split_sentences(std::string_view text);

// Whitespace tokenization with leading and trailing punctuation split off as
// single-character tokens. Hyphens and slashes inside a word stay attached.
// Offsets are shifted by `sentence_begin`.
std::vector<Token> tokenize(std::string_view sentence_text, Offset sentence_begin);

// Splits and tokenizes a full document text.
std::vector<Sentence> segment(std::string_view text);

bool is_abbreviation(std::string_view word);

// Every token overlapping a mention is labeled; the first such token of each
// mention gets B. Throws ValidationError on overlapping mentions.
std::vector<Label> mentions_to_bio2(const Sentence& sentence,
                                    const std::vector<MentionSpan>& mentions);

// Rejects overlapping or empty spans. `mentions` need not be sorted.
void validate_non_overlapping(const std::vector<MentionSpan>& mentions);

// Fills labels of every sentence from the document's gold mentions.
void label_from_mentions(Document& doc);

// Checks the type invariants of a whole corpus (offsets, label counts,
// mention bounds, unique ids). Throws ValidationError.
void validate_corpus(const Corpus& corpus);

// "token<TAB>label" per line, blank line between sentences, "-DOCSTART-"
// starting a new document. Typed labels such as "B-PER" are accepted and
// their type is dropped.
Corpus read_bio_column_file(const std::string& path);
Corpus parse_bio_columns(std::string_view content, const std::string& source = "<memory>");
void write_bio_columns(const Corpus& corpus, std::ostream& out);

// JSON array (or JSON Lines) of {doc_id, text, mentions: [{begin, end}]}.
Corpus read_standoff(const std::string& path);
Corpus parse_standoff(std::string_view content, const std::string& source = "<memory>");
// Writes one JSON Lines record; each mention also carries its surface string.
void write_standoff_record(const std::string& doc_id, std::string_view text,
                           const std::vector<MentionSpan>& mentions, std::ostream& out);

struct SampleSplit {
  std::vector<Sentence> train;
  std::vector<Sentence> test;
};

// Uniform sampling without replacement over all sentences of the corpus, in
// document order before shuffling. Deterministic for a fixed seed.
SampleSplit sample_split(const Corpus& corpus, std::size_t n_train, std::size_t n_test,
                         std::uint64_t seed);

}  // namespace ner

#endif  // NER_CORPUS_H_
