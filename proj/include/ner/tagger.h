#ifndef NER_TAGGER_H_
#define NER_TAGGER_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ner/corpus.h"
#include "ner/encoder.h"
#include "ner/network.h"

namespace ner {

struct TaggerModel {
  static constexpr std::uint32_t kFormatVersion = 1;

  Encoder encoder;
  NetworkConfig network;
  Parameters params;
  // JSON object describing the run that produced the model; may be empty.
  std::string provenance;
};

struct TrainingConfig {
  std::size_t epochs = 100;
  std::uint64_t seed = 1;
  bool shuffle = true;
  // Epochs between progress callbacks; 0 reports only the final epoch.
  std::size_t log_every = 1;
  std::size_t dense_size = 150;
  std::size_t lstm_cells = 20;
  double learning_rate = 0.005;

  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double seconds = 0.0;  // wall clock since training started
};

using ProgressFn = std::function<void(const EpochStats&)>;

struct TrainResult {
  TaggerModel model;
  std::vector<double> epoch_loss;  // mean sentence loss per epoch
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One SGD update per sentence, full BPTT, optional per-epoch shuffling driven
// by the training seed. DICT/TRI build their vocabulary from
// `train_sentences`; EMB requires `table`.
TrainResult train(const std::vector<Sentence>& train_sentences, EncoderMethod method,
                  Variant variant, const TrainingConfig& config,
                  const EmbeddingTable* table = nullptr, const ProgressFn& progress = {});

struct PredictionResult {
  std::vector<Label> labels;
  std::vector<std::array<double, kNumLabels>> distributions;
};

// Argmax ties resolve in class order B < I < O.
Label argmax_label(const std::array<double, kNumLabels>& distribution);

PredictionResult predict(const TaggerModel& model, const Sentence& sentence);

// B opens a mention, I extends the open one, O closes it. An I with no open
// mention opens a new one.
std::vector<MentionSpan> decode_spans(const Sentence& sentence, std::span<const Label> labels,
                                      const std::string& doc_id = "");

std::vector<MentionSpan> annotate(const TaggerModel& model, std::string_view document_text,
                                  const std::string& doc_id = "");

}  // namespace ner

#endif  // NER_TAGGER_H_
