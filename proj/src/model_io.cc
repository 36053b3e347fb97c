#include "ner/model_io.h"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ner {

namespace {

constexpr std::string_view kMagic = "NERTAGGR";
constexpr std::array<std::string_view, kNumFlags> kFlagLayout = {"initial_capital", "all_uppercase",
                                                                 "all_lowercase", "mixed_case"};

class Writer {
 public:
  void bytes(std::string_view data) { out_.append(data); }

  template <typename T>
  void integer(T value) {
    for (std::size_t k = 0; k < sizeof(T); ++k) {
      out_.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * k)) & 0xFF));
    }
  }

  void f64(double value) { integer(std::bit_cast<std::uint64_t>(value)); }

  void string(std::string_view s) {
    integer(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }

  std::string& buffer() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::string_view bytes(std::size_t n) {
    if (n > data_.size() - pos_) throw ModelFormatError("model file ends unexpectedly");
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  template <typename T>
  T integer() {
    auto raw = bytes(sizeof(T));
    std::uint64_t value = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) {
      value |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[k])) << (8 * k);
    }
    return static_cast<T>(value);
  }

  double f64() { return std::bit_cast<double>(integer<std::uint64_t>()); }

  std::string string() { return std::string(bytes(integer<std::uint32_t>())); }

  bool done() const { return pos_ == data_.size(); }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::uint32_t checksum(std::string_view data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t pos = 0;
  while (pos < data.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size() - pos, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data() + pos), chunk);
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

nlohmann::json network_json(const NetworkConfig& c) {
  return {{"variant", to_string(c.variant)}, {"input_dim", c.input_dim},
          {"dense_size", c.dense_size},      {"lstm_cells", c.lstm_cells},
          {"n_classes", c.n_classes},        {"learning_rate", c.learning_rate}};
}

}  // namespace

std::string serialize_model(const TaggerModel& model) {
  nlohmann::json header;
  header["encoder"] = to_string(model.encoder.method());
  header["encoder_dim"] = model.encoder.encoder_dim();
  header["flag_layout"] = kFlagLayout;
  header["network"] = network_json(model.network);
  header["tensors"] = nlohmann::json::array();
  for (const auto& t : model.params.tensors()) {
    header["tensors"].push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
  }
  header["provenance"] =
      model.provenance.empty() ? nlohmann::json::object() : nlohmann::json::parse(model.provenance);

  Writer w;
  w.bytes(kMagic);
  w.integer(TaggerModel::kFormatVersion);
  const std::string header_text = header.dump();
  w.integer(static_cast<std::uint64_t>(header_text.size()));
  w.bytes(header_text);

  if (model.encoder.method() == EncoderMethod::kEmb) {
    const auto& table = model.encoder.table();
    w.integer(static_cast<std::uint64_t>(table.size()));
    w.integer(static_cast<std::uint64_t>(table.dim()));
    for (std::size_t k = 0; k < table.size(); ++k) {
      w.string(table.words()[k]);
      for (std::size_t d = 0; d < table.dim(); ++d) w.f64(table.values()[k * table.dim() + d]);
    }
  } else {
    const auto& keys = model.encoder.vocabulary().keys();
    w.integer(static_cast<std::uint64_t>(keys.size()));
    for (const auto& key : keys) w.string(key);
  }

  for (const auto& t : model.params.tensors()) {
    for (double v : t.values) w.f64(v);
  }
  w.integer(checksum(w.buffer()));
  return std::move(w.buffer());
}

TaggerModel deserialize_model(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 4 || bytes.substr(0, kMagic.size()) != kMagic) {
    if (bytes.size() < kMagic.size() + 4 && kMagic.starts_with(bytes.substr(0, kMagic.size()))) {
      throw ChecksumError("model file is truncated");
    }
    throw ModelFormatError("not a model file (bad magic)");
  }
  Reader head(bytes.substr(kMagic.size(), 4));
  const auto version = head.integer<std::uint32_t>();
  if (version != TaggerModel::kFormatVersion) {
    throw UnsupportedVersionError("unsupported model format version " + std::to_string(version) +
                                  " (this build reads version " +
                                  std::to_string(TaggerModel::kFormatVersion) + ")");
  }
  if (bytes.size() < kMagic.size() + 8) throw ChecksumError("model file is truncated");
  const std::string_view body = bytes.substr(0, bytes.size() - 4);
  Reader tail(bytes.substr(bytes.size() - 4));
  if (tail.integer<std::uint32_t>() != checksum(body)) {
    throw ChecksumError("model checksum mismatch (file is truncated or corrupted)");
  }

  Reader r(body.substr(kMagic.size() + 4));
  nlohmann::json header;
  try {
    const auto n = r.integer<std::uint64_t>();
    header = nlohmann::json::parse(r.bytes(static_cast<std::size_t>(n)));
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("bad model header: ") + e.what());
  }

  try {
    const auto layout = header.at("flag_layout").get<std::vector<std::string>>();
    if (!std::equal(layout.begin(), layout.end(), kFlagLayout.begin(), kFlagLayout.end())) {
      throw ModelFormatError("unsupported surface flag layout");
    }
    const auto method = parse_encoder_method(header.at("encoder").get<std::string>());
    const auto& net = header.at("network");
    NetworkConfig config;
    config.variant = parse_variant(net.at("variant").get<std::string>());
    config.input_dim = net.at("input_dim").get<std::size_t>();
    config.dense_size = net.at("dense_size").get<std::size_t>();
    config.lstm_cells = net.at("lstm_cells").get<std::size_t>();
    config.n_classes = net.at("n_classes").get<std::size_t>();
    config.learning_rate = net.at("learning_rate").get<double>();

    const auto count = static_cast<std::size_t>(r.integer<std::uint64_t>());
    Encoder encoder = [&] {
      if (method == EncoderMethod::kEmb) {
        const auto dim = static_cast<std::size_t>(r.integer<std::uint64_t>());
        std::vector<std::string> words;
        std::vector<double> values;
        for (std::size_t k = 0; k < count; ++k) {
          words.push_back(r.string());
          for (std::size_t d = 0; d < dim; ++d) values.push_back(r.f64());
        }
        return Encoder::emb(EmbeddingTable(dim, std::move(words), std::move(values)));
      }
      std::vector<std::string> keys;
      keys.reserve(count);
      for (std::size_t k = 0; k < count; ++k) keys.push_back(r.string());
      Vocabulary vocab(std::move(keys));
      return method == EncoderMethod::kDict ? Encoder::dict(std::move(vocab))
                                            : Encoder::tri(std::move(vocab));
    }();
    if (encoder.dim() != config.input_dim) {
      throw ModelFormatError("encoder dimension does not match network input_dim");
    }

    Parameters params = allocate_params(config);
    auto tensors = params.tensors();
    const auto& manifest = header.at("tensors");
    if (manifest.size() != tensors.size()) throw ModelFormatError("tensor manifest mismatch");
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      if (manifest[k].at("name").get<std::string>() != tensors[k].name ||
          manifest[k].at("rows").get<std::size_t>() != tensors[k].rows ||
          manifest[k].at("cols").get<std::size_t>() != tensors[k].cols) {
        throw ModelFormatError("tensor " + tensors[k].name + " has unexpected shape");
      }
      for (double& v : tensors[k].values) v = r.f64();
    }
    if (!r.done()) throw ModelFormatError("trailing bytes after tensor data");

    std::string provenance;
    if (header.contains("provenance") && !header["provenance"].empty()) {
      provenance = header["provenance"].dump();
    }
    return TaggerModel{std::move(encoder), config, std::move(params), std::move(provenance)};
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("bad model header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ModelFormatError(std::string("bad model contents: ") + e.what());
  }
}

void save_model(const TaggerModel& model, const std::string& path) {
  const std::string bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path);
}

TaggerModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_model(buffer.str());
}

}  // namespace ner
