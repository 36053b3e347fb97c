#ifndef NER_MODEL_IO_H_
#define NER_MODEL_IO_H_

#include <stdexcept>
#include <string>
#include <string_view>

#include "ner/tagger.h"

namespace ner {

// Binary model container, all integers and floats little-endian:
//
//   "NERTAGGR"                 8-byte magic
//   u32 format_version
//   u64 n, n bytes             JSON header: encoder, flag layout, network
//                              config, tensor manifest, provenance
//   vocabulary section         DICT/TRI: u64 count, then (u32 len, UTF-8 bytes)
//                              EMB: u64 count, u64 dim, then per word
//                              (u32 len, bytes, dim x f64)
//   tensors                    f64 values in manifest order, column-major
//   u32 crc32                  over every preceding byte
//
// See docs/model-format.md.
class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ChecksumError : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};

class UnsupportedVersionError : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};

std::string serialize_model(const TaggerModel& model);
TaggerModel deserialize_model(std::string_view bytes);

void save_model(const TaggerModel& model, const std::string& path);
TaggerModel load_model(const std::string& path);

}  // namespace ner

#endif  // NER_MODEL_IO_H_
