#include "ner/corpus.h"

#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ner/random.h"

namespace ner {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_ascii_alpha(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }
bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }
bool is_opener(char c) { return c == '"' || c == '\'' || c == '(' || c == '['; }

bool is_split_punct(char c) {
  switch (c) {
    case '.':
    case ',':
    case ';':
    case ':':
    case '!':
    case '?':
    case '(':
    case ')':
    case '[':
    case ']':
    case '"':
    case '\'':
      return true;
    default:
      return false;
  }
}

constexpr std::array<std::string_view, 24> kAbbreviations = {
    "Dr.", "Mr.",   "Mrs.", "Ms.",   "Prof.", "Sr.",     "Jr.",  "St.",
    "Mt.", "vs.",   "Fig.", "Figs.", "al.",   "approx.", "Inc.", "Ltd.",
    "Co.", "Corp.", "No.",  "cf.",   "ca.",   "Eq.",     "Vol.", "resp."};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool blank(std::string_view line) { return std::all_of(line.begin(), line.end(), is_space); }

// Rebuilds sentence labels from mentions so gold data is always legal BIO2.
std::vector<MentionSpan> spans_from_labels(const Sentence& sentence,
                                           const std::vector<Label>& labels,
                                           const std::string& doc_id) {
  std::vector<MentionSpan> spans;
  bool open = false;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const Token& token = sentence.tokens[t];
    if (labels[t] == Label::B || (labels[t] == Label::I && !open)) {
      spans.push_back({doc_id, token.begin, token.end});
      open = true;
    } else if (labels[t] == Label::I) {
      spans.back().end = token.end;
    } else {
      open = false;
    }
  }
  return spans;
}

}  // namespace

char label_char(Label label) {
  switch (label) {
    case Label::B:
      return 'B';
    case Label::I:
      return 'I';
    case Label::O:
      return 'O';
  }
  return '?';
}

std::optional<Label> parse_label(std::string_view text) {
  if (text == "O") return Label::O;
  if (text.size() >= 1 && (text[0] == 'B' || text[0] == 'I') &&
      (text.size() == 1 || (text[1] == '-' && text.size() > 2))) {
    return text[0] == 'B' ? Label::B : Label::I;
  }
  return std::nullopt;
}

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

std::size_t Corpus::sentence_count() const {
  std::size_t n = 0;
  for (const auto& doc : documents) n += doc.sentences.size();
  return n;
}

bool is_abbreviation(std::string_view word) {
  if (word.size() < 2 || word.back() != '.') return false;
  if (std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end()) {
    return true;
  }
  // Initials and dotted acronyms: "J.", "U.S.", "e.g."
  if (word.size() % 2 != 0) return false;
  for (std::size_t i = 0; i < word.size(); i += 2) {
    if (!is_ascii_alpha(word[i]) || word[i + 1] != '.') return false;
  }
  return true;
}

std::vector<SentenceInterval> split_sentences(std::string_view text) {
  std::vector<SentenceInterval> out;
  const std::size_t n = text.size();

  auto emit = [&](std::size_t begin, std::size_t end) {
    while (begin < end && is_space(text[begin])) ++begin;
    while (end > begin && is_space(text[end - 1])) --end;
    if (begin < end) out.push_back({begin, end});
  };

  std::size_t start = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_terminator(text[i])) continue;
    std::size_t j = i + 1;
    while (j < n && (is_terminator(text[j]) || is_closer(text[j]))) ++j;
    if (j >= n || !is_space(text[j])) continue;
    std::size_t k = j;
    while (k < n && is_space(text[k])) ++k;
    if (k >= n) continue;
    std::size_t next = k;
    while (next < n && is_opener(text[next])) ++next;
    if (next >= n || !(is_ascii_upper(text[next]) || is_ascii_digit(text[next]))) continue;

    if (text[i] == '.' && j == i + 1) {
      std::size_t w = i;
      while (w > start && !is_space(text[w - 1])) --w;
      while (w < i && is_opener(text[w])) ++w;
      if (is_abbreviation(text.substr(w, i + 1 - w))) continue;
    }
    emit(start, j);
    start = k;
    i = k - 1;
  }
  emit(start, n);
  return out;
}

std::vector<Token> tokenize(std::string_view sentence_text, Offset sentence_begin) {
  std::vector<Token> tokens;
  const std::size_t n = sentence_text.size();
  auto push = [&](std::size_t b, std::size_t e) {
    tokens.push_back(
        {std::string(sentence_text.substr(b, e - b)), sentence_begin + b, sentence_begin + e});
  };

  std::size_t i = 0;
  while (i < n) {
    while (i < n && is_space(sentence_text[i])) ++i;
    if (i >= n) break;
    std::size_t chunk_end = i;
    while (chunk_end < n && !is_space(sentence_text[chunk_end])) ++chunk_end;

    std::size_t b = i;
    while (b < chunk_end && is_split_punct(sentence_text[b])) {
      push(b, b + 1);
      ++b;
    }
    std::size_t e = chunk_end;
    while (e > b && is_split_punct(sentence_text[e - 1])) {
      if (sentence_text[e - 1] == '.' && is_abbreviation(sentence_text.substr(b, e - b))) break;
      --e;
    }
    if (b < e) push(b, e);
    for (std::size_t p = e; p < chunk_end; ++p) push(p, p + 1);
    i = chunk_end;
  }
  return tokens;
}

std::vector<Sentence> segment(std::string_view text) {
  std::vector<Sentence> sentences;
  for (const auto& interval : split_sentences(text)) {
    Sentence s;
    s.tokens = tokenize(text.substr(interval.begin, interval.end - interval.begin), interval.begin);
    if (!s.tokens.empty()) sentences.push_back(std::move(s));
  }
  return sentences;
}

void validate_non_overlapping(const std::vector<MentionSpan>& mentions) {
  std::vector<const MentionSpan*> sorted;
  sorted.reserve(mentions.size());
  for (const auto& m : mentions) {
    if (m.begin >= m.end) {
      throw ValidationError("empty mention [" + std::to_string(m.begin) + ", " +
                            std::to_string(m.end) + ")");
    }
    sorted.push_back(&m);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const MentionSpan* a, const MentionSpan* b) { return a->begin < b->begin; });
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    if (sorted[k]->begin < sorted[k - 1]->end) {
      throw ValidationError("overlapping mentions [" + std::to_string(sorted[k - 1]->begin) + ", " +
                            std::to_string(sorted[k - 1]->end) + ") and [" +
                            std::to_string(sorted[k]->begin) + ", " +
                            std::to_string(sorted[k]->end) + ")");
    }
  }
}

std::vector<Label> mentions_to_bio2(const Sentence& sentence,
                                    const std::vector<MentionSpan>& mentions) {
  validate_non_overlapping(mentions);
  std::vector<MentionSpan> sorted = mentions;
  std::sort(sorted.begin(), sorted.end(),
            [](const MentionSpan& a, const MentionSpan& b) { return a.begin < b.begin; });

  std::vector<Label> labels(sentence.size(), Label::O);
  std::size_t current = sorted.size();  // mention owning the previous labeled token
  std::size_t first = 0;
  for (std::size_t t = 0; t < sentence.size(); ++t) {
    const Token& token = sentence.tokens[t];
    while (first < sorted.size() && sorted[first].end <= token.begin) ++first;
    if (first < sorted.size() && sorted[first].begin < token.end) {
      labels[t] = (current == first) ? Label::I : Label::B;
      current = first;
    } else {
      current = sorted.size();
    }
  }
  return labels;
}

void label_from_mentions(Document& doc) {
  for (auto& sentence : doc.sentences) {
    sentence.labels = mentions_to_bio2(sentence, doc.gold_mentions);
  }
}

void validate_corpus(const Corpus& corpus) {
  std::set<std::string> ids;
  for (const auto& doc : corpus.documents) {
    if (!ids.insert(doc.doc_id).second) {
      throw ValidationError("duplicate doc_id '" + doc.doc_id + "'");
    }
    Offset last_end = 0;
    for (const auto& sentence : doc.sentences) {
      if (sentence.labels && sentence.labels->size() != sentence.tokens.size()) {
        throw ValidationError(doc.doc_id + ": label count does not match token count");
      }
      for (const auto& token : sentence.tokens) {
        if (token.begin >= token.end || token.end > doc.text.size() ||
            doc.text.compare(token.begin, token.end - token.begin, token.text) != 0) {
          throw ValidationError(doc.doc_id + ": token '" + token.text +
                                "' inconsistent with document text");
        }
        if (token.begin < last_end) {
          throw ValidationError(doc.doc_id + ": tokens overlap or are out of order");
        }
        last_end = token.end;
      }
    }
    for (const auto& m : doc.gold_mentions) {
      if (m.end > doc.text.size()) {
        throw ValidationError(doc.doc_id + ": mention [" + std::to_string(m.begin) + ", " +
                              std::to_string(m.end) + ") outside text of length " +
                              std::to_string(doc.text.size()));
      }
    }
    validate_non_overlapping(doc.gold_mentions);
  }
}

Corpus parse_bio_columns(std::string_view content, const std::string& source) {
  Corpus corpus;
  Document doc;
  Sentence sentence;
  std::vector<Label> labels;

  auto flush_sentence = [&] {
    if (sentence.tokens.empty()) return;
    if (!doc.text.empty()) doc.text += '\n';
    for (std::size_t t = 0; t < sentence.tokens.size(); ++t) {
      if (t > 0) doc.text += ' ';
      Token& token = sentence.tokens[t];
      token.begin = doc.text.size();
      doc.text += token.text;
      token.end = doc.text.size();
    }
    auto spans = spans_from_labels(sentence, labels, doc.doc_id);
    sentence.labels = mentions_to_bio2(sentence, spans);
    doc.gold_mentions.insert(doc.gold_mentions.end(), spans.begin(), spans.end());
    doc.sentences.push_back(std::move(sentence));
    sentence = Sentence{};
    labels.clear();
  };
  auto flush_document = [&] {
    flush_sentence();
    if (!doc.sentences.empty()) corpus.documents.push_back(std::move(doc));
    doc = Document{};
    doc.doc_id = "doc" + std::to_string(corpus.documents.size());
  };
  doc.doc_id = "doc0";

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = trim_cr(content.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;

    if (blank(line)) {
      flush_sentence();
      continue;
    }
    if (line.starts_with("-DOCSTART-")) {
      flush_document();
      continue;
    }
    std::vector<std::string_view> fields;
    const bool tabbed = line.find('\t') != std::string_view::npos;
    std::size_t f = 0;
    while (f <= line.size()) {
      std::size_t sep = tabbed ? line.find('\t', f) : line.find(' ', f);
      if (sep == std::string_view::npos) sep = line.size();
      if (tabbed || sep > f) fields.push_back(line.substr(f, sep - f));
      f = sep + 1;
    }
    if (fields.size() < 2) {
      throw ParseError(
          source, line_no,
          "expected 'token<TAB>label', got " + std::to_string(fields.size()) + " column(s)");
    }
    std::string_view token_text = fields.front();
    if (token_text.empty() || std::any_of(token_text.begin(), token_text.end(), is_space)) {
      throw ParseError(source, line_no, "empty or whitespace-bearing token");
    }
    auto label = parse_label(fields.back());
    if (!label) {
      throw ParseError(source, line_no, "unknown label '" + std::string(fields.back()) + "'");
    }
    sentence.tokens.push_back({std::string(token_text), 0, 0});
    labels.push_back(*label);
  }
  flush_document();
  validate_corpus(corpus);
  return corpus;
}

Corpus read_bio_column_file(const std::string& path) {
  return parse_bio_columns(read_file(path), path);
}

void write_bio_columns(const Corpus& corpus, std::ostream& out) {
  for (const auto& doc : corpus.documents) {
    out << "-DOCSTART-\n\n";
    for (const auto& sentence : doc.sentences) {
      for (std::size_t t = 0; t < sentence.size(); ++t) {
        const Label label = sentence.labels ? (*sentence.labels)[t] : Label::O;
        out << sentence.tokens[t].text << '\t' << label_char(label) << '\n';
      }
      out << '\n';
    }
  }
}

namespace {

Document document_from_json(const nlohmann::json& record, const std::string& source,
                            std::size_t line) {
  auto fail = [&](const std::string& what) -> ValidationError {
    std::ostringstream msg;
    msg << source;
    if (line > 0) msg << ":" << line;
    msg << ": " << what;
    return ValidationError(msg.str());
  };
  if (!record.is_object() || !record.contains("text") || !record["text"].is_string()) {
    throw fail("record needs a string 'text' field");
  }
  Document doc;
  doc.doc_id = record.contains("doc_id") ? record["doc_id"].get<std::string>() : "";
  doc.text = record["text"].get<std::string>();
  if (record.contains("mentions")) {
    for (const auto& m : record["mentions"]) {
      const auto begin = m.at("begin").get<long long>();
      const auto end = m.at("end").get<long long>();
      if (begin < 0 || end > static_cast<long long>(doc.text.size()) || begin >= end) {
        throw fail("mention [" + std::to_string(begin) + ", " + std::to_string(end) +
                   ") outside text bounds [0, " + std::to_string(doc.text.size()) + "]");
      }
      doc.gold_mentions.push_back(
          {doc.doc_id, static_cast<Offset>(begin), static_cast<Offset>(end)});
    }
  }
  try {
    validate_non_overlapping(doc.gold_mentions);
  } catch (const ValidationError& e) {
    throw fail(e.what());
  }
  doc.sentences = segment(doc.text);
  label_from_mentions(doc);
  return doc;
}

}  // namespace

Corpus parse_standoff(std::string_view content, const std::string& source) {
  Corpus corpus;
  std::size_t first = 0;
  while (first < content.size() && is_space(content[first])) ++first;
  if (first == content.size()) return corpus;

  try {
    // A whole-file JSON document: array, {"documents": [...]}, or one record.
    auto parsed = nlohmann::json::parse(content.begin(), content.end(), nullptr, false);
    if (!parsed.is_discarded()) {
      const nlohmann::json* records = &parsed;
      if (parsed.is_object() && parsed.contains("documents")) records = &parsed["documents"];
      if (records->is_array()) {
        for (const auto& r : *records) corpus.documents.push_back(document_from_json(r, source, 0));
      } else {
        corpus.documents.push_back(document_from_json(*records, source, 0));
      }
    } else {
      std::size_t line_no = 0;
      std::size_t pos = 0;
      while (pos < content.size()) {
        std::size_t nl = content.find('\n', pos);
        if (nl == std::string_view::npos) nl = content.size();
        std::string_view line = content.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (blank(line)) continue;
        auto record = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
        if (record.is_discarded()) throw ParseError(source, line_no, "invalid JSON record");
        corpus.documents.push_back(document_from_json(record, source, line_no));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(source + ": " + e.what());
  }
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    auto& doc = corpus.documents[d];
    if (doc.doc_id.empty()) {
      doc.doc_id = "doc" + std::to_string(d);
      for (auto& m : doc.gold_mentions) m.doc_id = doc.doc_id;
    }
  }
  validate_corpus(corpus);
  return corpus;
}

Corpus read_standoff(const std::string& path) { return parse_standoff(read_file(path), path); }

void write_standoff_record(const std::string& doc_id, std::string_view text,
                           const std::vector<MentionSpan>& mentions, std::ostream& out) {
  nlohmann::json record;
  record["doc_id"] = doc_id;
  record["text"] = std::string(text);
  record["mentions"] = nlohmann::json::array();
  for (const auto& m : mentions) {
    record["mentions"].push_back({{"begin", m.begin},
                                  {"end", m.end},
                                  {"surface", std::string(text.substr(m.begin, m.end - m.begin))}});
  }
  out << record.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
}

SampleSplit sample_split(const Corpus& corpus, std::size_t n_train, std::size_t n_test,
                         std::uint64_t seed) {
  const std::size_t available = corpus.sentence_count();
  if (n_train + n_test > available) {
    throw std::invalid_argument("requested " + std::to_string(n_train + n_test) +
                                " sentences but the corpus has only " + std::to_string(available));
  }
  std::vector<const Sentence*> all;
  all.reserve(available);
  for (const auto& doc : corpus.documents) {
    for (const auto& s : doc.sentences) all.push_back(&s);
  }
  Rng rng(seed);
  rng.shuffle(all);

  SampleSplit split;
  split.train.reserve(n_train);
  split.test.reserve(n_test);
  for (std::size_t k = 0; k < n_train; ++k) split.train.push_back(*all[k]);
  for (std::size_t k = 0; k < n_test; ++k) split.test.push_back(*all[n_train + k]);
  return split;
}

}  // namespace ner
