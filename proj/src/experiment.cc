#include "ner/experiment.h"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <sstream>
#include <thread>

namespace ner {

std::string config_name(EncoderMethod encoder, Variant network) {
  return to_string(encoder) + "+" + to_string(network);
}

std::vector<GridCell> compare_configs(const Corpus& corpus, const CompareOptions& options) {
  const SampleSplit split = sample_split(corpus, options.n_train, options.n_test, options.seed);
  TrainingConfig training = options.training;
  training.seed = options.seed;
  training.validate();

  std::vector<GridCell> grid;
  for (auto encoder : {EncoderMethod::kDict, EncoderMethod::kEmb, EncoderMethod::kTri}) {
    for (auto network : {Variant::kFF, Variant::kLSTM, Variant::kBLSTM}) {
      GridCell cell;
      cell.encoder = encoder;
      cell.network = network;
      grid.push_back(std::move(cell));
    }
  }

  auto run = [&](GridCell& cell) {
    const auto start = std::chrono::steady_clock::now();
    try {
      auto result = train(split.train, cell.encoder, cell.network, training, options.embeddings);
      cell.train_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      cell.epoch_loss = std::move(result.epoch_loss);
      cell.report = evaluate(result.model, split.test, EvalMode::kBio,
                             config_name(cell.encoder, cell.network));
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.error = e.what();
      cell.report.config = config_name(cell.encoder, cell.network);
    }
  };

  std::size_t threads = options.threads;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, grid.size());
  if (threads <= 1) {
    for (auto& cell : grid) run(cell);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    for (std::size_t k = 0; k < threads; ++k) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) run(grid[i]);
      });
    }
  }
  return grid;
}

const GridCell& find_cell(const std::vector<GridCell>& grid, EncoderMethod encoder,
                          Variant network) {
  for (const auto& cell : grid) {
    if (cell.encoder == encoder && cell.network == network) return cell;
  }
  throw std::out_of_range("configuration " + config_name(encoder, network) + " not in grid");
}

std::string format_grid(const std::vector<GridCell>& grid) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-12s %8s %8s %8s %10s\n", "config", "BIO-P", "BIO-R",
                "BIO-F1", "train[s]");
  out << line << std::string(50, '-') << '\n';
  for (const auto& cell : grid) {
    const std::string name = config_name(cell.encoder, cell.network);
    if (cell.ok) {
      std::snprintf(line, sizeof(line), "%-12s %8.4f %8.4f %8.4f %10.1f\n", name.c_str(),
                    cell.report.bio.precision, cell.report.bio.recall, cell.report.bio.f1,
                    cell.train_seconds);
    } else {
      std::snprintf(line, sizeof(line), "%-12s failed: %s\n", name.c_str(), cell.error.c_str());
    }
    out << line;
  }
  return out.str();
}

}  // namespace ner
