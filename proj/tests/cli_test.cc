#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "ner/corpus.h"
#include "ner/model_io.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int status;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Workspace {
 public:
  Workspace() {
    dir_ = fs::temp_directory_path() / ("nertag_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  ~Workspace() { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  Run run(const std::string& args, const std::string& stdin_text = "") const {
    std::ofstream(dir_ / "stdin") << stdin_text;
    const std::string cmd =
        "cd '" + dir_.string() + "' && '" NERTAG_PATH "' " + args + " < stdin > stdout 2> stderr";
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(dir_ / "stdout"), slurp(dir_ / "stderr")};
  }

 private:
  fs::path dir_;
};

// Shared across cases: a small synthetic corpus and word vectors.
const Workspace& workspace() {
  static const Workspace ws;
  static const bool ready = [] {
    const Run r =
        ws.run("synth --sentences 120 --seed 3 --output corpus.bio --embeddings-out vec.txt");
    return r.status == 0;
  }();
  REQUIRE(ready);
  return ws;
}

constexpr const char* kSmall = " --epochs 3 --dense-size 8 --cells 4 --quiet";

}  // namespace

TEST_CASE("synth writes a parseable corpus with provenance") {
  const auto& ws = workspace();
  const auto corpus = ner::read_bio_column_file(ws.path("corpus.bio"));
  CHECK(corpus.sentence_count() == 120);
  const json run = json::parse(slurp(ws.path("corpus.bio.run.json")));
  CHECK(run["command"] == "synth");
  CHECK(run["seed"] == 3);
}

TEST_CASE("train produces a loadable, deterministic model") {
  const auto& ws = workspace();
  const std::string args = std::string("train --corpus corpus.bio --encoder TRI --network BLSTM") +
                           kSmall + " --log train.jsonl --model ";
  REQUIRE(ws.run(args + "a.model").status == 0);
  const std::string a = slurp(ws.path("a.model"));
  REQUIRE(ws.run(args + "a.model").status == 0);
  CHECK(!a.empty());
  CHECK(a == slurp(ws.path("a.model")));

  const auto model = ner::load_model(ws.path("a.model"));
  const json provenance = json::parse(model.provenance);
  CHECK(provenance["run_config"]["encoder"] == "TRI");
  CHECK(provenance["run_config"]["epochs"] == 3);
  CHECK(provenance["run_config"]["seed"] == 1);

  std::istringstream log(slurp(ws.path("train.jsonl")));
  std::string line;
  std::getline(log, line);
  CHECK(json::parse(line).contains("run_config"));
  int epochs = 0;
  while (std::getline(log, line)) {
    const json e = json::parse(line);
    CHECK(e.contains("loss"));
    CHECK(e.contains("seconds"));
    ++epochs;
  }
  CHECK(epochs == 3);
}

TEST_CASE("EMB training needs embeddings") {
  const auto& ws = workspace();
  const Run r =
      ws.run(std::string("train --corpus corpus.bio --encoder EMB") + kSmall + " --model e.model");
  CHECK(r.status == 2);
  CHECK(r.err.rfind("error: usage: ", 0) == 0);
  CHECK(!fs::exists(ws.path("e.model")));

  const Run ok = ws.run(std::string("train --corpus corpus.bio --encoder EMB --network FF") +
                        kSmall + " --embeddings vec.txt --model e.model");
  CHECK(ok.status == 0);
}

TEST_CASE("annotate") {
  const auto& ws = workspace();
  REQUIRE(
      ws.run(std::string("train --corpus corpus.bio --network LSTM") + kSmall + " --model n.model")
          .status == 0);
  CHECK(ws.run("annotate --model n.model", "").out.empty());

  const std::string text = "Patients given Zorvamycin improved. Levels of Kelotase fell.\n";
  const Run r = ws.run("annotate --model n.model --doc-id t1 --output ann.jsonl", text);
  REQUIRE(r.status == 0);
  const auto corpus = ner::read_standoff(ws.path("ann.jsonl"));
  REQUIRE(corpus.documents.size() == 1);
  CHECK(corpus.documents[0].doc_id == "t1");
  CHECK(corpus.documents[0].text == text);
  for (const auto& m : corpus.documents[0].gold_mentions) CHECK(m.end <= text.size());

  const Run missing = ws.run("annotate --model nowhere.model", text);
  CHECK(missing.status == 3);
  CHECK(missing.err.find("nowhere.model") != std::string::npos);
}

TEST_CASE("evaluate a perfect annotator") {
  const auto& ws = workspace();
  const auto gold = ner::read_bio_column_file(ws.path("corpus.bio"));
  {
    std::ofstream out(ws.path("gold.jsonl"));
    for (const auto& doc : gold.documents) {
      ner::write_standoff_record(doc.doc_id, doc.text, doc.gold_mentions, out);
    }
  }
  const Run r = ws.run("evaluate --corpus corpus.bio --annotations gold.jsonl --report perfect");
  REQUIRE(r.status == 0);
  std::istringstream lines(slurp(ws.path("perfect.jsonl")));
  std::vector<json> records;
  for (std::string line; std::getline(lines, line);) records.push_back(json::parse(line));
  REQUIRE(records.size() == 1);
  CHECK(records[0]["ner"]["f1"] == 1.0);
  CHECK(records[0]["bio"]["f1"] == 1.0);
  CHECK(records[0]["run_config"]["command"] == "evaluate");

  const std::string table = slurp(ws.path("perfect.txt"));
  CHECK(table.find("# run_config ") == 0);
  CHECK(table.find("1.0000") != std::string::npos);
  CHECK(r.out.find("1.0000") != std::string::npos);
}

TEST_CASE("compare emits nine rows reproducibly") {
  const auto& ws = workspace();
  const std::string args =
      "compare --corpus corpus.bio --train-size 40 --test-size 40 --epochs 2 --dense-size 8 "
      "--cells 4 --embeddings vec.txt --threads 2 --report ";
  REQUIRE(ws.run(args + "g1").status == 0);
  REQUIRE(ws.run(args + "g2").status == 0);
  auto records = [&](const std::string& name) {
    std::vector<json> out;
    std::istringstream lines(slurp(ws.path(name)));
    for (std::string line; std::getline(lines, line);) {
      json j = json::parse(line);
      j["run_config"].erase("report");
      out.push_back(std::move(j));
    }
    return out;
  };
  const auto first = records("g1.jsonl");
  CHECK(first.size() == 9);
  for (const auto& j : first) CHECK(j["ok"] == true);
  CHECK(first == records("g2.jsonl"));
}

TEST_CASE("compare reports a failing configuration and still runs the rest") {
  const auto& ws = workspace();
  const Run r = ws.run(
      "compare --corpus corpus.bio --train-size 30 --test-size 30 --epochs 1 --dense-size 4 "
      "--cells 2 --threads 1 --report partial");
  CHECK(r.status == 7);
  CHECK(r.err.rfind("error: training: 3 of 9", 0) == 0);
  std::istringstream lines(slurp(ws.path("partial.jsonl")));
  int ok = 0;
  for (std::string line; std::getline(lines, line);) ok += json::parse(line)["ok"] == true;
  CHECK(ok == 6);
}

TEST_CASE("gradcheck") {
  const auto& ws = workspace();
  const Run pass = ws.run("gradcheck --report gc");
  CHECK(pass.status == 0);
  CHECK(pass.out.find("FAIL") == std::string::npos);
  std::istringstream lines(slurp(ws.path("gc.jsonl")));
  int variants = 0;
  for (std::string line; std::getline(lines, line);) {
    const json j = json::parse(line);
    CHECK(j["passed"] == true);
    CHECK(!j["blocks"].empty());
    ++variants;
  }
  CHECK(variants == 3);

  const Run fail = ws.run("gradcheck --network LSTM --corrupt 1e-3");
  CHECK(fail.status == 8);
  CHECK(fail.err.rfind("error: gradcheck: ", 0) == 0);
}

TEST_CASE("errors are single categorized lines") {
  const auto& ws = workspace();
  {
    std::ofstream(ws.path("bad.bio")) << "Aspirin B\nworks Z\n";
  }
  const Run parse = ws.run("train --corpus bad.bio --model x.model");
  CHECK(parse.status == 4);
  CHECK(parse.err.rfind("error: parse: ", 0) == 0);
  CHECK(parse.err.find(":2:") != std::string::npos);
  CHECK(std::count(parse.err.begin(), parse.err.end(), '\n') == 1);

  const Run io = ws.run("train --corpus absent.bio --model x.model");
  CHECK(io.status == 3);
  CHECK(io.err.rfind("error: io: ", 0) == 0);

  const Run usage = ws.run("train --corpus corpus.bio --epochs 0 --model x.model");
  CHECK(usage.status == 2);
  CHECK(usage.err.rfind("error: usage: ", 0) == 0);

  std::ofstream(ws.path("junk.model")) << "NERTAGGR garbage";
  const Run model = ws.run("annotate --model junk.model", "text");
  CHECK(model.status == 6);
  CHECK(model.err.rfind("error: model: ", 0) == 0);
}
