#include "ner/eval.h"

#include <cctype>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ner {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void require_gold(const std::vector<Sentence>& test) {
  for (std::size_t k = 0; k < test.size(); ++k) {
    if (!test[k].labels || test[k].labels->size() != test[k].size()) {
      throw std::invalid_argument("test sentence " + std::to_string(k) + " has no gold labels");
    }
  }
}

}  // namespace

std::string to_string(EvalMode mode) {
  switch (mode) {
    case EvalMode::kSpan:
      return "span";
    case EvalMode::kBio:
      return "bio";
    case EvalMode::kBoth:
      return "both";
  }
  return "?";
}

EvalMode parse_eval_mode(std::string_view name) {
  if (name == "span") return EvalMode::kSpan;
  if (name == "bio") return EvalMode::kBio;
  if (name == "both") return EvalMode::kBoth;
  throw std::invalid_argument("unknown mode '" + std::string(name) + "' (span, bio, both)");
}

SpanCounts EvalReport::totals() const {
  SpanCounts sum;
  for (const auto& c : per_document) {
    sum.tp += c.tp;
    sum.fp += c.fp;
    sum.fn += c.fn;
  }
  return sum;
}

bool weak_match(const MentionSpan& p, const MentionSpan& g) {
  return (p.begin <= g.begin && g.begin <= p.end) || (p.begin <= g.end && g.end <= p.end) ||
         (g.begin <= p.begin && p.begin <= g.end) || (g.begin <= p.end && p.end <= g.end);
}

SpanCounts count_document(std::span<const MentionSpan> predicted,
                          std::span<const MentionSpan> gold) {
  SpanCounts counts;
  std::vector<bool> gold_hit(gold.size(), false);
  for (const auto& p : predicted) {
    bool hit = false;
    for (std::size_t k = 0; k < gold.size(); ++k) {
      if (weak_match(p, gold[k])) {
        hit = true;
        gold_hit[k] = true;
      }
    }
    (hit ? counts.tp : counts.fp) += 1;
  }
  for (bool h : gold_hit) {
    if (!h) ++counts.fn;
  }
  return counts;
}

double harmonic_mean(double a, double b) { return a + b > 0.0 ? 2.0 * a * b / (a + b) : 0.0; }

NerReport micro_scores(std::span<const SpanCounts> counts) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& c : counts) {
    tp += c.tp;
    fp += c.fp;
    fn += c.fn;
  }
  NerReport r;
  r.precision = ratio(tp, tp + fp);
  r.recall = ratio(tp, tp + fn);
  r.f1 = harmonic_mean(r.precision, r.recall);
  return r;
}

BioReport macro_bio(const std::vector<std::vector<Label>>& predicted,
                    const std::vector<std::vector<Label>>& gold) {
  if (predicted.size() != gold.size()) {
    throw std::invalid_argument("macro_bio: " + std::to_string(predicted.size()) +
                                " predicted sequences vs " + std::to_string(gold.size()) + " gold");
  }
  BioReport r;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (predicted[s].size() != gold[s].size()) {
      throw std::invalid_argument("macro_bio: length mismatch in sequence " + std::to_string(s));
    }
    for (std::size_t t = 0; t < gold[s].size(); ++t) {
      const auto p = static_cast<std::size_t>(predicted[s][t]);
      const auto g = static_cast<std::size_t>(gold[s][t]);
      if (p == g) {
        ++r.per_class[g].tp;
      } else {
        ++r.per_class[p].fp;
        ++r.per_class[g].fn;
      }
    }
  }
  double sum_p = 0.0, sum_r = 0.0;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    const auto& k = r.per_class[c];
    const bool absent = k.tp == 0 && k.fp == 0 && k.fn == 0;
    r.class_precision[c] = absent ? 1.0 : ratio(k.tp, k.tp + k.fp);
    r.class_recall[c] = absent ? 1.0 : ratio(k.tp, k.tp + k.fn);
    sum_p += r.class_precision[c];
    sum_r += r.class_recall[c];
  }
  r.precision = sum_p / static_cast<double>(kNumLabels);
  r.recall = sum_r / static_cast<double>(kNumLabels);
  r.f1 = harmonic_mean(r.precision, r.recall);
  return r;
}

EvalReport evaluate_labels(const std::vector<Sentence>& test,
                           const std::vector<std::vector<Label>>& predicted, EvalMode mode,
                           const std::string& config) {
  require_gold(test);
  if (predicted.size() != test.size()) {
    throw std::invalid_argument("evaluate: prediction count does not match test sentences");
  }
  EvalReport report;
  report.mode = mode;
  report.config = config;
  std::vector<std::vector<Label>> gold;
  gold.reserve(test.size());
  for (std::size_t k = 0; k < test.size(); ++k) {
    gold.push_back(*test[k].labels);
    report.tokens += test[k].size();
    if (report.has_span()) {
      const auto p = decode_spans(test[k], predicted[k]);
      const auto g = decode_spans(test[k], gold.back());
      report.per_document.push_back(count_document(p, g));
    }
  }
  if (report.has_span()) report.ner = micro_scores(report.per_document);
  if (report.has_bio()) report.bio = macro_bio(predicted, gold);
  return report;
}

EvalReport evaluate(const TaggerModel& model, const std::vector<Sentence>& test, EvalMode mode,
                    const std::string& config) {
  require_gold(test);
  std::vector<std::vector<Label>> predicted;
  predicted.reserve(test.size());
  for (const auto& s : test) predicted.push_back(predict(model, s).labels);
  return evaluate_labels(test, predicted, mode, config);
}

EvalReport evaluate_annotations(const Corpus& gold, const Corpus& predicted, EvalMode mode,
                                const std::string& config) {
  std::map<std::string, const Document*> by_id;
  for (const auto& doc : predicted.documents) by_id.emplace(doc.doc_id, &doc);
  for (const auto& doc : predicted.documents) {
    bool known = false;
    for (const auto& g : gold.documents) known = known || g.doc_id == doc.doc_id;
    if (!known) throw std::invalid_argument("predicted document '" + doc.doc_id + "' has no gold");
  }

  EvalReport report;
  report.mode = mode;
  report.config = config;
  std::vector<std::vector<Label>> pred_labels, gold_labels;
  const std::vector<MentionSpan> none;
  for (const auto& doc : gold.documents) {
    auto it = by_id.find(doc.doc_id);
    const Document* pred = it == by_id.end() ? nullptr : it->second;
    if (pred != nullptr && pred->text != doc.text) {
      throw std::invalid_argument("document '" + doc.doc_id + "' text differs from gold");
    }
    const auto& pred_mentions = pred ? pred->gold_mentions : none;
    if (report.has_span())
      report.per_document.push_back(count_document(pred_mentions, doc.gold_mentions));
    for (const auto& s : doc.sentences) {
      if (!s.labels) throw std::invalid_argument("document '" + doc.doc_id + "' lacks gold labels");
      report.tokens += s.size();
      if (report.has_bio()) {
        gold_labels.push_back(*s.labels);
        pred_labels.push_back(mentions_to_bio2(s, pred_mentions));
      }
    }
  }
  if (report.has_span()) report.ner = micro_scores(report.per_document);
  if (report.has_bio()) report.bio = macro_bio(pred_labels, gold_labels);
  return report;
}

std::string format_table(std::span<const EvalReport> reports) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-20s %6s | %8s %8s %8s | %8s %8s %8s\n", "config", "mode",
                "NER-P", "NER-R", "NER-F1", "BIO-P", "BIO-R", "BIO-F1");
  out << line;
  out << std::string(std::string_view(line).size() - 1, '-') << '\n';
  auto cell = [](bool present, double v) {
    char buf[32];
    if (present) {
      std::snprintf(buf, sizeof(buf), "%8.4f", v);
    } else {
      std::snprintf(buf, sizeof(buf), "%8s", "-");
    }
    return std::string(buf);
  };
  for (const auto& r : reports) {
    std::snprintf(line, sizeof(line), "%-20s %6s | %s %s %s | %s %s %s\n",
                  r.config.empty() ? "-" : r.config.c_str(), to_string(r.mode).c_str(),
                  cell(r.has_span(), r.ner.precision).c_str(),
                  cell(r.has_span(), r.ner.recall).c_str(), cell(r.has_span(), r.ner.f1).c_str(),
                  cell(r.has_bio(), r.bio.precision).c_str(),
                  cell(r.has_bio(), r.bio.recall).c_str(), cell(r.has_bio(), r.bio.f1).c_str());
    out << line;
  }
  return out.str();
}

std::string format_json_lines(std::span<const EvalReport> reports) {
  std::string out;
  for (const auto& r : reports) {
    nlohmann::json j;
    j["config"] = r.config;
    j["mode"] = to_string(r.mode);
    j["documents"] = r.per_document.size();
    j["tokens"] = r.tokens;
    if (r.has_span()) {
      const auto t = r.totals();
      j["ner"] = {{"precision", r.ner.precision},
                  {"recall", r.ner.recall},
                  {"f1", r.ner.f1},
                  {"tp", t.tp},
                  {"fp", t.fp},
                  {"fn", t.fn}};
    }
    if (r.has_bio()) {
      nlohmann::json per_class;
      for (std::size_t c = 0; c < kNumLabels; ++c) {
        const auto& k = r.bio.per_class[c];
        per_class[std::string(1, label_char(static_cast<Label>(c)))] = {
            {"tp", k.tp},
            {"fp", k.fp},
            {"fn", k.fn},
            {"precision", r.bio.class_precision[c]},
            {"recall", r.bio.class_recall[c]}};
      }
      j["bio"] = {{"precision", r.bio.precision},
                  {"recall", r.bio.recall},
                  {"f1", r.bio.f1},
                  {"per_class", per_class}};
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace ner
