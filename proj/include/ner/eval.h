#ifndef NER_EVAL_H_
#define NER_EVAL_H_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ner/corpus.h"
#include "ner/tagger.h"

namespace ner {

// Per-document span counts. tn is always 0: the complement set over spans is
// not enumerable and no score uses it.
struct SpanCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  friend bool operator==(const SpanCounts&, const SpanCounts&) = default;
};

struct NerReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ClassCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct BioReport {
  std::array<ClassCounts, kNumLabels> per_class{};  // indexed by Label
  std::array<double, kNumLabels> class_precision{};
  std::array<double, kNumLabels> class_recall{};
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

enum class EvalMode { kSpan, kBio, kBoth };

std::string to_string(EvalMode mode);
EvalMode parse_eval_mode(std::string_view name);

struct EvalReport {
  EvalMode mode = EvalMode::kBoth;
  std::string config;
  NerReport ner;
  BioReport bio;
  std::vector<SpanCounts> per_document;
  std::size_t tokens = 0;

  bool has_span() const { return mode != EvalMode::kBio; }
  bool has_bio() const { return mode != EvalMode::kSpan; }
  SpanCounts totals() const;
};

// Weak annotation match: any endpoint of one span lies within the other,
// endpoints compared inclusively.
bool weak_match(const MentionSpan& p, const MentionSpan& g);

SpanCounts count_document(std::span<const MentionSpan> predicted,
                          std::span<const MentionSpan> gold);

// Micro-averaged over documents. Zero denominators give 0.
NerReport micro_scores(std::span<const SpanCounts> counts);

double harmonic_mean(double a, double b);

// One-vs-rest counts per class, unweighted mean over B, I, O. A class absent
// from both gold and prediction scores 1; any other zero denominator scores 0.
BioReport macro_bio(const std::vector<std::vector<Label>>& predicted,
                    const std::vector<std::vector<Label>>& gold);

// Runs the model over labeled sentences; each sentence counts as one document.
EvalReport evaluate(const TaggerModel& model, const std::vector<Sentence>& test, EvalMode mode,
                    const std::string& config = "");

// Predicted labels supplied directly, aligned with `test`.
EvalReport evaluate_labels(const std::vector<Sentence>& test,
                           const std::vector<std::vector<Label>>& predicted, EvalMode mode,
                           const std::string& config = "");

// Precomputed annotations matched to gold documents by doc_id; documents
// without predictions count as empty predictions.
EvalReport evaluate_annotations(const Corpus& gold, const Corpus& predicted, EvalMode mode,
                                const std::string& config = "");

// Fixed-width table, one row per report.
std::string format_table(std::span<const EvalReport> reports);
// One JSON object per line, one line per report.
std::string format_json_lines(std::span<const EvalReport> reports);

}  // namespace ner

#endif  // NER_EVAL_H_
