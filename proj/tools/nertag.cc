// nertag: train, apply, evaluate and verify neural mention taggers.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ner/corpus.h"
#include "ner/encoder.h"
#include "ner/eval.h"
#include "ner/experiment.h"
#include "ner/model_io.h"
#include "ner/network.h"
#include "ner/synthetic.h"
#include "ner/tagger.h"

namespace {

using nlohmann::json;

enum ExitCode {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kIo = 3,
  kParse = 4,
  kValidation = 5,
  kModel = 6,
  kTraining = 7,
  kGradcheck = 8,
};

// Raised for failures that have their own category and exit code.
class CommandError : public std::runtime_error {
 public:
  CommandError(ExitCode code, std::string category, const std::string& what)
      : std::runtime_error(what), code_(code), category_(std::move(category)) {}
  ExitCode code() const { return code_; }
  const std::string& category() const { return category_; }

 private:
  ExitCode code_;
  std::string category_;
};

[[noreturn]] void usage_error(const std::string& what) {
  throw CommandError(kUsage, "usage", what);
}

struct RunConfig {
  std::string command;
  std::string corpus;
  std::string format = "bio";
  std::string encoder = "TRI";
  std::string network = "BLSTM";
  std::size_t epochs = 100;
  std::uint64_t seed = 1;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::string model;
  std::string embeddings;
  std::string report;
  std::string mode = "both";
  std::string annotations;
  std::string input = "-";
  std::string output;
  std::string doc_id = "doc0";
  std::string log;
  std::size_t dense_size = 150;
  std::size_t lstm_cells = 20;
  double learning_rate = 0.005;
  std::size_t threads = 0;
  double tolerance = 1e-4;
  double corrupt = 0.0;
  // synth
  std::size_t sentences = 2000;
  double misspell = 0.2;
  double case_mangle = 0.1;
  double density = 0.3;
  std::string embeddings_out;
  std::size_t embeddings_dim = 16;
  bool quiet = false;

  json to_json() const {
    json j = {{"command", command}, {"seed", seed}};
    auto put = [&](const char* key, const auto& value) { j[key] = value; };
    if (command == "train" || command == "compare") {
      put("corpus", corpus);
      put("format", format);
      put("epochs", epochs);
      put("train_size", train_size);
      put("dense_size", dense_size);
      put("lstm_cells", lstm_cells);
      put("learning_rate", learning_rate);
      put("embeddings", embeddings);
    }
    if (command == "train") {
      put("encoder", encoder);
      put("network", network);
      put("model", model);
    }
    if (command == "compare") {
      put("test_size", test_size);
      put("report", report);
    }
    if (command == "evaluate") {
      put("corpus", corpus);
      put("format", format);
      put("model", model);
      put("annotations", annotations);
      put("train_size", train_size);
      put("test_size", test_size);
      put("mode", mode);
      put("report", report);
    }
    if (command == "annotate") {
      put("model", model);
      put("input", corpus.empty() ? input : corpus);
      put("format", format);
    }
    if (command == "gradcheck") {
      put("network", network);
      put("tolerance", tolerance);
      put("corrupt", corrupt);
    }
    if (command == "synth") {
      put("sentences", sentences);
      put("misspell", misspell);
      put("case_mangle", case_mangle);
      put("density", density);
      put("output", output);
      put("embeddings_out", embeddings_out);
      put("embeddings_dim", embeddings_dim);
    }
    return j;
  }
};

ner::Corpus load_corpus(const RunConfig& rc) {
  if (rc.corpus.empty()) usage_error("--corpus is required");
  if (rc.format == "bio") return ner::read_bio_column_file(rc.corpus);
  return ner::read_standoff(rc.corpus);
}

std::vector<ner::Sentence> all_sentences(const ner::Corpus& corpus) {
  std::vector<ner::Sentence> out;
  for (const auto& doc : corpus.documents) {
    out.insert(out.end(), doc.sentences.begin(), doc.sentences.end());
  }
  return out;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ner::IoError("cannot write " + path);
  return out;
}

std::string read_input(const std::string& path) {
  if (path == "-") {
    return std::string(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ner::IoError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Text report with a provenance header, plus JSON Lines records that each
// carry the run configuration.
void write_reports(const std::string& prefix, const std::string& table,
                   const std::vector<json>& records, const json& run_config) {
  auto txt = open_output(prefix + ".txt");
  txt << "# run_config " << run_config.dump() << '\n' << table;
  auto jsonl = open_output(prefix + ".jsonl");
  for (auto record : records) {
    record["run_config"] = run_config;
    jsonl << record.dump() << '\n';
  }
}

std::vector<json> parse_json_lines(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

int cmd_train(const RunConfig& rc) {
  const auto method = ner::parse_encoder_method(rc.encoder);
  const auto variant = ner::parse_variant(rc.network);
  if (rc.model.empty()) usage_error("--model is required");
  if (method == ner::EncoderMethod::kEmb && rc.embeddings.empty()) {
    usage_error("EMB encoder requires --embeddings");
  }
  ner::TrainingConfig tc;
  tc.epochs = rc.epochs;
  tc.seed = rc.seed;
  tc.dense_size = rc.dense_size;
  tc.lstm_cells = rc.lstm_cells;
  tc.learning_rate = rc.learning_rate;
  tc.validate();

  const ner::Corpus corpus = load_corpus(rc);
  std::optional<ner::EmbeddingTable> table;
  if (method == ner::EncoderMethod::kEmb) table = ner::load_embeddings(rc.embeddings);
  const auto sentences = rc.train_size > 0
                             ? ner::sample_split(corpus, rc.train_size, 0, rc.seed).train
                             : all_sentences(corpus);

  const json run_config = rc.to_json();
  std::ofstream log;
  if (!rc.log.empty()) {
    log = open_output(rc.log);
    log << json{{"run_config", run_config}}.dump() << '\n';
  }
  auto progress = [&](const ner::EpochStats& s) {
    if (log.is_open()) {
      log << json{{"epoch", s.epoch}, {"loss", s.mean_loss}, {"seconds", s.seconds}}.dump() << '\n';
    }
    if (!rc.quiet) {
      std::fprintf(stderr, "epoch %zu loss %.6f time %.1fs\n", s.epoch, s.mean_loss, s.seconds);
    }
  };
  auto result = ner::train(sentences, method, variant, tc, table ? &*table : nullptr, progress);
  result.model.provenance =
      json{{"run_config", run_config}, {"train_sentences", sentences.size()}}.dump();
  ner::save_model(result.model, rc.model);
  std::printf("trained %s on %zu sentences, %zu parameters, final loss %.6f -> %s\n",
              ner::config_name(method, variant).c_str(), sentences.size(),
              result.model.params.parameter_count(), result.epoch_loss.back(), rc.model.c_str());
  return kOk;
}

int cmd_annotate(const RunConfig& rc) {
  if (rc.model.empty()) usage_error("--model is required");
  const ner::TaggerModel model = ner::load_model(rc.model);

  std::vector<std::pair<std::string, std::string>> docs;  // (doc_id, text)
  if (!rc.corpus.empty()) {
    for (const auto& doc : load_corpus(rc).documents) docs.emplace_back(doc.doc_id, doc.text);
  } else {
    std::string text = read_input(rc.input);
    if (!text.empty()) docs.emplace_back(rc.doc_id, std::move(text));
  }

  std::ofstream file;
  if (!rc.output.empty()) file = open_output(rc.output);
  std::ostream& out = file.is_open() ? static_cast<std::ostream&>(file) : std::cout;
  const json run_config = rc.to_json();
  for (const auto& [id, text] : docs) {
    std::ostringstream record;
    ner::write_standoff_record(id, text, ner::annotate(model, text, id), record);
    json j = json::parse(record.str());
    j["run_config"] = run_config;
    out << j.dump() << '\n';
  }
  return kOk;
}

int cmd_evaluate(const RunConfig& rc) {
  const auto mode = ner::parse_eval_mode(rc.mode);
  if (rc.model.empty() == rc.annotations.empty()) {
    usage_error("exactly one of --model and --annotations is required");
  }
  const ner::Corpus gold = load_corpus(rc);
  ner::EvalReport report;
  if (!rc.model.empty()) {
    const ner::TaggerModel model = ner::load_model(rc.model);
    const auto test = rc.test_size > 0
                          ? ner::sample_split(gold, rc.train_size, rc.test_size, rc.seed).test
                          : all_sentences(gold);
    const std::string name = ner::config_name(model.encoder.method(), model.network.variant);
    report = ner::evaluate(model, test, mode, name);
  } else {
    report =
        ner::evaluate_annotations(gold, ner::read_standoff(rc.annotations), mode, "annotations");
  }
  const std::vector<ner::EvalReport> reports = {report};
  const std::string table = ner::format_table(reports);
  std::printf("%s", table.c_str());
  if (!rc.report.empty()) {
    write_reports(rc.report, table, parse_json_lines(ner::format_json_lines(reports)),
                  rc.to_json());
  }
  return kOk;
}

int cmd_compare(const RunConfig& rc) {
  ner::CompareOptions options;
  options.n_train = rc.train_size > 0 ? rc.train_size : 2000;
  options.n_test = rc.test_size > 0 ? rc.test_size : 2000;
  options.seed = rc.seed;
  options.threads = rc.threads;
  options.training.epochs = rc.epochs;
  options.training.dense_size = rc.dense_size;
  options.training.lstm_cells = rc.lstm_cells;
  options.training.learning_rate = rc.learning_rate;
  options.training.validate();

  const ner::Corpus corpus = load_corpus(rc);
  std::optional<ner::EmbeddingTable> table;
  if (!rc.embeddings.empty()) table = ner::load_embeddings(rc.embeddings);
  options.embeddings = table ? &*table : nullptr;

  const auto grid = ner::compare_configs(corpus, options);
  const std::string text = ner::format_grid(grid);
  std::printf("%s", text.c_str());

  std::vector<json> records;
  std::size_t failed = 0;
  for (const auto& cell : grid) {
    json j = {{"config", ner::config_name(cell.encoder, cell.network)}, {"ok", cell.ok}};
    if (cell.ok) {
      const std::vector<ner::EvalReport> one = {cell.report};
      j["bio"] = parse_json_lines(ner::format_json_lines(one)).front()["bio"];
      j["epoch_loss"] = cell.epoch_loss;
    } else {
      j["error"] = cell.error;
      ++failed;
    }
    records.push_back(std::move(j));
  }
  if (!rc.report.empty()) write_reports(rc.report, text, records, rc.to_json());
  if (failed > 0) {
    throw CommandError(
        kTraining, "training",
        std::to_string(failed) + " of " + std::to_string(grid.size()) + " configurations failed");
  }
  return kOk;
}

int cmd_gradcheck(const RunConfig& rc) {
  std::vector<ner::Variant> variants;
  if (rc.network == "all") {
    variants = {ner::Variant::kFF, ner::Variant::kLSTM, ner::Variant::kBLSTM};
  } else {
    variants = {ner::parse_variant(rc.network)};
  }
  ner::GradientCheckOptions options;
  options.corruption = rc.corrupt;

  std::vector<json> records;
  std::ostringstream text;
  bool all_passed = true;
  for (auto variant : variants) {
    const auto r = ner::gradient_check(variant, rc.seed, rc.tolerance, options);
    all_passed = all_passed && r.passed;
    char line[160];
    std::snprintf(line, sizeof(line), "%-6s max_rel_error %.3e tolerance %.1e %s\n",
                  ner::to_string(variant).c_str(), r.max_rel_error, r.tolerance,
                  r.passed ? "PASS" : "FAIL");
    text << line;
    json blocks = json::array();
    for (const auto& b : r.blocks) {
      std::snprintf(line, sizeof(line), "  %-14s %6zu entries  max_rel_error %.3e\n",
                    b.name.c_str(), b.count, b.max_rel_error);
      text << line;
      blocks.push_back({{"name", b.name}, {"count", b.count}, {"max_rel_error", b.max_rel_error}});
    }
    records.push_back({{"network", ner::to_string(variant)},
                       {"max_rel_error", r.max_rel_error},
                       {"tolerance", r.tolerance},
                       {"passed", r.passed},
                       {"blocks", blocks}});
  }
  std::printf("%s", text.str().c_str());
  if (!rc.report.empty()) write_reports(rc.report, text.str(), records, rc.to_json());
  if (!all_passed) {
    throw CommandError(kGradcheck, "gradcheck", "relative error above tolerance");
  }
  return kOk;
}

int cmd_synth(const RunConfig& rc) {
  if (rc.output.empty()) usage_error("--output is required");
  ner::SyntheticConfig sc;
  sc.sentences = rc.sentences;
  sc.seed = rc.seed;
  sc.misspelling_rate = rc.misspell;
  sc.case_mangling_rate = rc.case_mangle;
  sc.mention_density = rc.density;
  open_output(rc.output) << ner::generate_synthetic_columns(sc);
  if (!rc.embeddings_out.empty()) {
    open_output(rc.embeddings_out) << ner::synthetic_embeddings_text(rc.embeddings_dim, rc.seed);
  }
  open_output(rc.output + ".run.json") << rc.to_json().dump(2) << '\n';
  std::printf("wrote %zu sentences to %s\n", rc.sentences, rc.output.c_str());
  return kOk;
}

int fail(ExitCode code, const std::string& category, const std::string& what) {
  std::string message = what;
  for (auto& c : message) {
    if (c == '\n') c = ' ';
  }
  std::fprintf(stderr, "error: %s: %s\n", category.c_str(), message.c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig rc;
  CLI::App app{"Neural mention tagger: train, annotate, evaluate, compare, gradcheck, synth"};
  app.require_subcommand(1);

  const std::vector<std::string> formats = {"bio", "standoff"};
  auto corpus_opts = [&](CLI::App* sub) {
    sub->add_option("--corpus", rc.corpus, "Corpus file");
    sub->add_option("--format", rc.format, "Corpus format")
        ->check(CLI::IsMember(formats))
        ->capture_default_str();
  };
  auto training_opts = [&](CLI::App* sub) {
    sub->add_option("--epochs", rc.epochs, "Training epochs")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--train-size", rc.train_size, "Sentences sampled for training");
    sub->add_option("--embeddings", rc.embeddings, "Word vectors (text format)");
    sub->add_option("--dense-size", rc.dense_size, "Dense layer width")->capture_default_str();
    sub->add_option("--cells", rc.lstm_cells, "LSTM cells per layer")->capture_default_str();
    sub->add_option("--learning-rate", rc.learning_rate, "SGD learning rate")
        ->capture_default_str();
  };
  auto seed_opt = [&](CLI::App* sub) {
    sub->add_option("--seed", rc.seed, "Random seed")->capture_default_str();
  };

  auto* train = app.add_subcommand("train", "Train a model");
  corpus_opts(train);
  training_opts(train);
  seed_opt(train);
  train->add_option("--encoder", rc.encoder, "DICT, EMB or TRI")->capture_default_str();
  train->add_option("--network", rc.network, "FF, LSTM or BLSTM")->capture_default_str();
  train->add_option("--model", rc.model, "Output model file");
  train->add_option("--log", rc.log, "Training log (JSON Lines)");
  train->add_flag("--quiet", rc.quiet, "No per-epoch progress on stderr");

  auto* annotate = app.add_subcommand("annotate", "Emit standoff mentions for text");
  corpus_opts(annotate);
  annotate->add_option("--model", rc.model, "Model file");
  annotate->add_option("--input", rc.input, "Plain text file, '-' for stdin")
      ->capture_default_str();
  annotate->add_option("--doc-id", rc.doc_id, "Document id for --input")->capture_default_str();
  annotate->add_option("--output", rc.output, "Output file (default stdout)");

  auto* evaluate = app.add_subcommand("evaluate", "Score a model or annotations against gold");
  corpus_opts(evaluate);
  seed_opt(evaluate);
  evaluate->add_option("--model", rc.model, "Model file");
  evaluate->add_option("--annotations", rc.annotations, "Predicted standoff annotations");
  evaluate->add_option("--train-size", rc.train_size, "Training sample size to hold out");
  evaluate->add_option("--test-size", rc.test_size, "Sentences sampled for testing");
  evaluate->add_option("--mode", rc.mode, "span, bio or both")->capture_default_str();
  evaluate->add_option("--report", rc.report, "Report prefix (.txt and .jsonl)");

  auto* compare = app.add_subcommand("compare", "Train and score all nine configurations");
  corpus_opts(compare);
  training_opts(compare);
  seed_opt(compare);
  compare->add_option("--test-size", rc.test_size, "Held-out sentences (default 2000)");
  compare->add_option("--threads", rc.threads, "Worker threads, 0 for all cores");
  compare->add_option("--report", rc.report, "Report prefix (.txt and .jsonl)");

  auto* gradcheck = app.add_subcommand("gradcheck", "Check analytic gradients");
  seed_opt(gradcheck);
  gradcheck->add_option("--network", rc.network, "FF, LSTM, BLSTM or all");
  gradcheck->add_option("--tolerance", rc.tolerance, "Maximum relative error")
      ->capture_default_str();
  gradcheck->add_option("--corrupt", rc.corrupt, "Offset added to analytic gradients");
  gradcheck->add_option("--report", rc.report, "Report prefix (.txt and .jsonl)");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled corpus");
  seed_opt(synth);
  synth->add_option("--sentences", rc.sentences, "Sentence count")->capture_default_str();
  synth->add_option("--misspell", rc.misspell, "Per-word typo rate")->capture_default_str();
  synth->add_option("--case-mangle", rc.case_mangle, "Per-word case mangling rate")
      ->capture_default_str();
  synth->add_option("--density", rc.density, "Mention density")->capture_default_str();
  synth->add_option("--output", rc.output, "Output BIO column file");
  synth->add_option("--embeddings-out", rc.embeddings_out, "Also write word vectors here");
  synth->add_option("--embeddings-dim", rc.embeddings_dim, "Word vector dimension")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  try {
    if (train->parsed()) {
      rc.command = "train";
      return cmd_train(rc);
    }
    if (annotate->parsed()) {
      rc.command = "annotate";
      return cmd_annotate(rc);
    }
    if (evaluate->parsed()) {
      rc.command = "evaluate";
      return cmd_evaluate(rc);
    }
    if (compare->parsed()) {
      rc.command = "compare";
      return cmd_compare(rc);
    }
    if (gradcheck->parsed()) {
      rc.command = "gradcheck";
      if (gradcheck->count("--network") == 0) rc.network = "all";
      return cmd_gradcheck(rc);
    }
    rc.command = "synth";
    return cmd_synth(rc);
  } catch (const CommandError& e) {
    return fail(e.code(), e.category(), e.what());
  } catch (const ner::IoError& e) {
    return fail(kIo, "io", e.what());
  } catch (const ner::ParseError& e) {
    return fail(kParse, "parse", e.what());
  } catch (const ner::ValidationError& e) {
    return fail(kValidation, "validation", e.what());
  } catch (const ner::ModelFormatError& e) {
    return fail(kModel, "model", e.what());
  } catch (const ner::TrainingError& e) {
    return fail(kTraining, "training", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kUsage, "usage", e.what());
  } catch (const json::exception& e) {
    return fail(kParse, "parse", e.what());
  } catch (const std::exception& e) {
    return fail(kInternal, "internal", e.what());
  }
}
