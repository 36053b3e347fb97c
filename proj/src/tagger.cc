#include "ner/tagger.h"

#include <chrono>
#include <numeric>

#include "ner/random.h"

namespace ner {

void TrainingConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (dense_size == 0 || lstm_cells == 0)
    throw std::invalid_argument("layer sizes must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
}

TrainResult train(const std::vector<Sentence>& train_sentences, EncoderMethod method,
                  Variant variant, const TrainingConfig& config, const EmbeddingTable* table,
                  const ProgressFn& progress) {
  config.validate();
  if (train_sentences.empty()) throw std::invalid_argument("no training sentences");
  for (std::size_t k = 0; k < train_sentences.size(); ++k) {
    const auto& s = train_sentences[k];
    if (!s.labels || s.labels->size() != s.tokens.size()) {
      throw std::invalid_argument("training sentence " + std::to_string(k) + " is unlabeled");
    }
  }

  Encoder encoder = [&] {
    switch (method) {
      case EncoderMethod::kDict:
        return Encoder::dict(build_word_vocab(train_sentences));
      case EncoderMethod::kTri:
        return Encoder::tri(build_trigram_vocab(train_sentences));
      case EncoderMethod::kEmb:
        if (table == nullptr)
          throw std::invalid_argument("EMB encoder requires an embedding table");
        return Encoder::emb(*table);
    }
    throw std::invalid_argument("unknown encoder");
  }();

  NetworkConfig net;
  net.variant = variant;
  net.input_dim = encoder.dim();
  net.dense_size = config.dense_size;
  net.lstm_cells = config.lstm_cells;
  net.learning_rate = config.learning_rate;

  TrainResult result{TaggerModel{std::move(encoder), net, init_params(net, config.seed), ""}, {}};
  TaggerModel& model = result.model;

  std::vector<Eigen::SparseMatrix<double>> inputs;
  std::vector<std::size_t> order;
  inputs.reserve(train_sentences.size());
  for (std::size_t k = 0; k < train_sentences.size(); ++k) {
    inputs.push_back(model.encoder.encode_sentence(train_sentences[k]));
    if (!train_sentences[k].tokens.empty()) order.push_back(k);
  }
  if (order.empty()) throw std::invalid_argument("all training sentences are empty");

  Rng rng(config.seed ^ 0x5bd1e995ULL);
  GradientSet grads = model.params.zeros_like();
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle) rng.shuffle(order);
    double total = 0.0;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const std::size_t k = order[pos];
      const std::span<const Label> gold(*train_sentences[k].labels);
      const auto act = forward(inputs[k], net, model.params);
      total += loss(act.y, gold);
      backward_bptt(act, gold, net, model.params, grads);
      try {
        sgd_step(model.params, grads, net.learning_rate);
      } catch (const NonFiniteError& e) {
        throw TrainingError("epoch " + std::to_string(epoch) + ", sentence " + std::to_string(k) +
                            ": " + e.what());
      }
    }
    const double mean = total / static_cast<double>(order.size());
    result.epoch_loss.push_back(mean);
    const bool report =
        config.log_every > 0 ? epoch % config.log_every == 0 : epoch == config.epochs;
    if (progress && report) {
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      progress({epoch, mean, elapsed.count()});
    }
  }
  return result;
}

Label argmax_label(const std::array<double, kNumLabels>& distribution) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumLabels; ++c) {
    if (distribution[c] > distribution[best]) best = c;
  }
  return static_cast<Label>(best);
}

PredictionResult predict(const TaggerModel& model, const Sentence& sentence) {
  PredictionResult result;
  if (sentence.tokens.empty()) return result;
  const auto act = forward(model.encoder.encode_sentence(sentence), model.network, model.params);
  result.labels.reserve(sentence.size());
  result.distributions.reserve(sentence.size());
  for (Eigen::Index t = 0; t < act.y.cols(); ++t) {
    std::array<double, kNumLabels> dist{};
    for (std::size_t c = 0; c < kNumLabels; ++c) dist[c] = act.y(static_cast<Eigen::Index>(c), t);
    result.labels.push_back(argmax_label(dist));
    result.distributions.push_back(dist);
  }
  return result;
}

std::vector<MentionSpan> decode_spans(const Sentence& sentence, std::span<const Label> labels,
                                      const std::string& doc_id) {
  if (labels.size() != sentence.size()) {
    throw std::invalid_argument("decode_spans: label count does not match token count");
  }
  std::vector<MentionSpan> spans;
  bool open = false;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const Token& token = sentence.tokens[t];
    switch (labels[t]) {
      case Label::B:
        spans.push_back({doc_id, token.begin, token.end});
        open = true;
        break;
      case Label::I:
        if (open) {
          spans.back().end = token.end;
        } else {
          spans.push_back({doc_id, token.begin, token.end});
          open = true;
        }
        break;
      case Label::O:
        open = false;
        break;
    }
  }
  return spans;
}

std::vector<MentionSpan> annotate(const TaggerModel& model, std::string_view document_text,
                                  const std::string& doc_id) {
  std::vector<MentionSpan> mentions;
  for (const auto& sentence : segment(document_text)) {
    const auto prediction = predict(model, sentence);
    auto spans = decode_spans(sentence, prediction.labels, doc_id);
    mentions.insert(mentions.end(), spans.begin(), spans.end());
  }
  return mentions;
}

}  // namespace ner
