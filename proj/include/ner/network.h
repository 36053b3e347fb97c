#ifndef NER_NETWORK_H_
#define NER_NETWORK_H_

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ner/corpus.h"

namespace ner {

// FF:    dense(relu) x3 -> softmax
// LSTM:  dense(relu) -> LSTM -> LSTM -> softmax
// BLSTM: dense(relu) -> {forward LSTM h, backward LSTM z}
//        -> W_yh h + W_yz z + b_y -> forward decoder LSTM -> softmax
enum class Variant { kFF, kLSTM, kBLSTM };

std::string to_string(Variant variant);
Variant parse_variant(std::string_view name);

enum class Direction { kForward, kBackward };

struct NetworkConfig {
  Variant variant = Variant::kBLSTM;
  std::size_t input_dim = 0;
  std::size_t dense_size = 150;
  std::size_t lstm_cells = 20;
  std::size_t n_classes = kNumLabels;
  double learning_rate = 0.005;

  void validate() const;
};

struct DenseLayer {
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
};

// One direction of the cell:
//   g = tanh(W_gx x + W_gh h' + b_g)     i = sigm(W_ix x + W_ih h' + b_i)
//   f = sigm(W_fx x + W_fh h' + b_f)     o = sigm(W_ox x + W_oh h' + b_o)
//   s = tanh(g * i + s' * f)             h = s * o
struct LstmLayer {
  Eigen::MatrixXd w_gx, w_gh, w_ix, w_ih, w_fx, w_fh, w_ox, w_oh;
  Eigen::VectorXd b_g, b_i, b_f, b_o;

  std::size_t input_dim() const { return static_cast<std::size_t>(w_gx.cols()); }
  std::size_t cells() const { return static_cast<std::size_t>(b_g.size()); }
};

// Combines forward states h and backward states z of the bidirectional layer.
struct MergeLayer {
  Eigen::MatrixXd w_yh, w_yz;
  Eigen::VectorXd b_y;
};

// Named view of one parameter tensor; values are column-major.
template <typename T>
struct BasicTensorRef {
  std::string name;
  std::span<T> values;
  std::size_t rows;
  std::size_t cols;
};

using TensorRef = BasicTensorRef<double>;
using ConstTensorRef = BasicTensorRef<const double>;

struct Parameters {
  std::vector<DenseLayer> dense;
  // LSTM: two stacked layers. BLSTM: forward, backward, decoder.
  std::vector<LstmLayer> lstm;
  std::optional<MergeLayer> merge;
  DenseLayer output;

  // Canonical tensor order, shared by serialization and gradient checks.
  std::vector<TensorRef> tensors();
  std::vector<ConstTensorRef> tensors() const;
  std::size_t parameter_count() const;

  Parameters zeros_like() const;
  bool all_finite() const;
};

using GradientSet = Parameters;

Parameters allocate_params(const NetworkConfig& config);

// Glorot-uniform weights, zero biases except forget-gate biases at 1.0.
Parameters init_params(const NetworkConfig& config, std::uint64_t seed);

struct DenseCache {
  Eigen::MatrixXd pre;
  Eigen::MatrixXd out;
};

struct LstmCache {
  Direction direction = Direction::kForward;
  Eigen::MatrixXd g, i, f, o, s, h;  // cells x T, in sentence order
};

struct SequenceActivations {
  Eigen::SparseMatrix<double> input;
  std::vector<DenseCache> dense;
  std::vector<LstmCache> lstm;
  Eigen::MatrixXd merged;
  Eigen::MatrixXd y;  // n_classes x T, softmax columns

  std::size_t length() const { return static_cast<std::size_t>(input.cols()); }
};

LstmCache lstm_forward(const Eigen::MatrixXd& inputs, const LstmLayer& layer, Direction direction);

// Accumulates parameter gradients into `grad` and returns d(loss)/d(inputs).
Eigen::MatrixXd lstm_backward(const LstmCache& cache, const Eigen::MatrixXd& inputs,
                              const LstmLayer& layer, const Eigen::MatrixXd& d_h, LstmLayer& grad);

// `inputs` is input_dim x T. An empty sentence yields empty outputs.
SequenceActivations forward(const Eigen::SparseMatrix<double>& inputs, const NetworkConfig& config,
                            const Parameters& params);

inline constexpr double kProbabilityFloor = 1e-12;

// Token-mean cross-entropy with probabilities clamped at kProbabilityFloor.
double loss(const Eigen::MatrixXd& y, std::span<const Label> gold);

GradientSet backward_bptt(const SequenceActivations& activations, std::span<const Label> gold,
                          const NetworkConfig& config, const Parameters& params);

// Same, writing into `grads`, which must be shaped like `params`. Reusing one
// buffer across updates avoids reallocating the large input-layer gradient.
void backward_bptt(const SequenceActivations& activations, std::span<const Label> gold,
                   const NetworkConfig& config, const Parameters& params, GradientSet& grads);

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// p <- p - lr * g. Throws NonFiniteError before touching params if any
// gradient entry is NaN or infinite.
void sgd_step(Parameters& params, const GradientSet& grads, double learning_rate);

struct BlockError {
  std::string name;
  std::size_t count = 0;
  double max_rel_error = 0.0;
};

struct GradientCheckReport {
  Variant variant = Variant::kFF;
  double tolerance = 0.0;
  double max_rel_error = 0.0;
  std::vector<BlockError> blocks;
  bool passed = false;
};

struct GradientCheckOptions {
  std::size_t input_dim = 6;
  std::size_t dense_size = 5;
  std::size_t lstm_cells = 4;
  std::size_t length = 5;
  double step = 1e-4;
  // Added to every analytic gradient entry; a nonzero value is a negative control.
  double corruption = 0.0;
};

// Relative error |a - n| / max(|a|, |n|, kRelErrorFloor).
inline constexpr double kRelErrorFloor = 1e-7;
double relative_error(double analytic, double numeric);

// Compares analytic BPTT gradients with central differences over every
// parameter of a small random network and random labeled sequence.
GradientCheckReport gradient_check(Variant variant, std::uint64_t seed, double tolerance,
                                   const GradientCheckOptions& options = {});

}  // namespace ner

#endif  // NER_NETWORK_H_
