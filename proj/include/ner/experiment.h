#ifndef NER_EXPERIMENT_H_
#define NER_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ner/corpus.h"
#include "ner/encoder.h"
#include "ner/eval.h"
#include "ner/network.h"
#include "ner/tagger.h"

namespace ner {

std::string config_name(EncoderMethod encoder, Variant network);

struct CompareOptions {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::uint64_t seed = 1;
  // epochs, layer sizes and learning rate; the seed above replaces training.seed.
  TrainingConfig training;
  // Required for the EMB rows; without it those rows report an error.
  const EmbeddingTable* embeddings = nullptr;
  // Concurrent trainings; 0 picks the hardware concurrency.
  std::size_t threads = 0;
};

struct GridCell {
  EncoderMethod encoder = EncoderMethod::kTri;
  Variant network = Variant::kBLSTM;
  bool ok = false;
  std::string error;
  EvalReport report;  // macro BIO2 scores on the held-out sample
  std::vector<double> epoch_loss;
  double train_seconds = 0.0;
};

// Trains all nine encoder x network configurations on one shared sample
// split and scores each on the same held-out sentences. Rows are ordered
// DICT, EMB, TRI, each with FF, LSTM, BLSTM. A failing configuration is
// reported in its row and does not stop the others.
std::vector<GridCell> compare_configs(const Corpus& corpus, const CompareOptions& options);

const GridCell& find_cell(const std::vector<GridCell>& grid, EncoderMethod encoder,
                          Variant network);

std::string format_grid(const std::vector<GridCell>& grid);

}  // namespace ner

#endif  // NER_EXPERIMENT_H_
