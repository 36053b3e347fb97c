#include "ner/network.h"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "ner/random.h"

namespace ner {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd sigmoid(const MatrixXd& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

MatrixXd relu(const MatrixXd& a) { return a.cwiseMax(0.0); }

MatrixXd relu_mask(const MatrixXd& pre) { return (pre.array() > 0.0).cast<double>().matrix(); }

MatrixXd softmax_columns(const MatrixXd& logits) {
  MatrixXd y(logits.rows(), logits.cols());
  for (Index t = 0; t < logits.cols(); ++t) {
    const double peak = logits.col(t).maxCoeff();
    y.col(t) = (logits.col(t).array() - peak).exp().matrix();
    y.col(t) /= y.col(t).sum();
  }
  return y;
}

template <typename Params>
auto collect_tensors(Params& p) {
  constexpr bool kConst = std::is_const_v<Params>;
  using Value = std::conditional_t<kConst, const double, double>;
  std::vector<BasicTensorRef<Value>> out;
  auto add = [&](std::string name, auto& m) {
    out.push_back({std::move(name), std::span<Value>(m.data(), static_cast<std::size_t>(m.size())),
                   static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  };
  for (std::size_t k = 0; k < p.dense.size(); ++k) {
    const std::string prefix = "dense" + std::to_string(k) + ".";
    add(prefix + "w", p.dense[k].w);
    add(prefix + "b", p.dense[k].b);
  }
  for (std::size_t k = 0; k < p.lstm.size(); ++k) {
    const std::string prefix = "lstm" + std::to_string(k) + ".";
    auto& l = p.lstm[k];
    add(prefix + "w_gx", l.w_gx);
    add(prefix + "w_gh", l.w_gh);
    add(prefix + "w_ix", l.w_ix);
    add(prefix + "w_ih", l.w_ih);
    add(prefix + "w_fx", l.w_fx);
    add(prefix + "w_fh", l.w_fh);
    add(prefix + "w_ox", l.w_ox);
    add(prefix + "w_oh", l.w_oh);
    add(prefix + "b_g", l.b_g);
    add(prefix + "b_i", l.b_i);
    add(prefix + "b_f", l.b_f);
    add(prefix + "b_o", l.b_o);
  }
  if (p.merge) {
    add("merge.w_yh", p.merge->w_yh);
    add("merge.w_yz", p.merge->w_yz);
    add("merge.b_y", p.merge->b_y);
  }
  add("output.w", p.output.w);
  add("output.b", p.output.b);
  return out;
}

DenseLayer zero_dense(std::size_t out, std::size_t in) {
  return {MatrixXd::Zero(static_cast<Index>(out), static_cast<Index>(in)),
          VectorXd::Zero(static_cast<Index>(out))};
}

LstmLayer zero_lstm(std::size_t in, std::size_t cells) {
  const auto h = static_cast<Index>(cells);
  const auto x = static_cast<Index>(in);
  LstmLayer l;
  for (MatrixXd* w : {&l.w_gx, &l.w_ix, &l.w_fx, &l.w_ox}) *w = MatrixXd::Zero(h, x);
  for (MatrixXd* w : {&l.w_gh, &l.w_ih, &l.w_fh, &l.w_oh}) *w = MatrixXd::Zero(h, h);
  for (VectorXd* b : {&l.b_g, &l.b_i, &l.b_f, &l.b_o}) *b = VectorXd::Zero(h);
  return l;
}

template <typename Input>
DenseCache dense_forward(const Input& x, const DenseLayer& layer) {
  DenseCache c;
  c.pre = layer.w * x;
  c.pre.colwise() += layer.b;
  c.out = relu(c.pre);
  return c;
}

// Returns d(loss)/d(pre) and accumulates weight/bias gradients.
template <typename Input>
MatrixXd dense_backward(const DenseCache& c, const Input& x, const MatrixXd& d_out,
                        DenseLayer& grad) {
  MatrixXd d_pre = d_out.cwiseProduct(relu_mask(c.pre));
  grad.w.noalias() += d_pre * x.transpose();
  grad.b += d_pre.rowwise().sum();
  return d_pre;
}

}  // namespace

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::kFF:
      return "FF";
    case Variant::kLSTM:
      return "LSTM";
    case Variant::kBLSTM:
      return "BLSTM";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  std::string upper(name);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "FF") return Variant::kFF;
  if (upper == "LSTM") return Variant::kLSTM;
  if (upper == "BLSTM") return Variant::kBLSTM;
  throw std::invalid_argument("unknown network '" + std::string(name) + "' (FF, LSTM, BLSTM)");
}

void NetworkConfig::validate() const {
  if (input_dim == 0 || dense_size == 0 || lstm_cells == 0 || n_classes == 0) {
    throw std::invalid_argument("network sizes must be positive");
  }
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning rate must be finite and non-negative");
  }
}

std::vector<TensorRef> Parameters::tensors() { return collect_tensors(*this); }

std::vector<ConstTensorRef> Parameters::tensors() const { return collect_tensors(*this); }

std::size_t Parameters::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.values.size();
  return n;
}

Parameters Parameters::zeros_like() const {
  Parameters z = *this;
  for (auto& t : z.tensors()) std::fill(t.values.begin(), t.values.end(), 0.0);
  return z;
}

bool Parameters::all_finite() const {
  for (const auto& t : tensors()) {
    for (double v : t.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

Parameters allocate_params(const NetworkConfig& config) {
  config.validate();
  Parameters p;
  const std::size_t cells = config.lstm_cells;
  switch (config.variant) {
    case Variant::kFF:
      p.dense.push_back(zero_dense(config.dense_size, config.input_dim));
      p.dense.push_back(zero_dense(config.dense_size, config.dense_size));
      p.dense.push_back(zero_dense(config.dense_size, config.dense_size));
      p.output = zero_dense(config.n_classes, config.dense_size);
      break;
    case Variant::kLSTM:
      p.dense.push_back(zero_dense(config.dense_size, config.input_dim));
      p.lstm.push_back(zero_lstm(config.dense_size, cells));
      p.lstm.push_back(zero_lstm(cells, cells));
      p.output = zero_dense(config.n_classes, cells);
      break;
    case Variant::kBLSTM: {
      p.dense.push_back(zero_dense(config.dense_size, config.input_dim));
      p.lstm.push_back(zero_lstm(config.dense_size, cells));
      p.lstm.push_back(zero_lstm(config.dense_size, cells));
      p.lstm.push_back(zero_lstm(cells, cells));
      const auto h = static_cast<Index>(cells);
      p.merge = MergeLayer{MatrixXd::Zero(h, h), MatrixXd::Zero(h, h), VectorXd::Zero(h)};
      p.output = zero_dense(config.n_classes, cells);
      break;
    }
  }
  return p;
}

Parameters init_params(const NetworkConfig& config, std::uint64_t seed) {
  Parameters p = allocate_params(config);
  Rng rng(seed);
  for (auto& t : p.tensors()) {
    if (t.cols == 1) continue;  // biases
    const double r = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
    for (double& v : t.values) v = rng.uniform(-r, r);
  }
  for (auto& l : p.lstm) l.b_f.setOnes();
  return p;
}

LstmCache lstm_forward(const MatrixXd& inputs, const LstmLayer& layer, Direction direction) {
  if (static_cast<std::size_t>(inputs.rows()) != layer.input_dim()) {
    throw std::invalid_argument("LSTM input has dimension " + std::to_string(inputs.rows()) +
                                ", layer expects " + std::to_string(layer.input_dim()));
  }
  const Index steps = inputs.cols();
  const auto cells = static_cast<Index>(layer.cells());
  LstmCache c;
  c.direction = direction;

  MatrixXd a_g = layer.w_gx * inputs;
  MatrixXd a_i = layer.w_ix * inputs;
  MatrixXd a_f = layer.w_fx * inputs;
  MatrixXd a_o = layer.w_ox * inputs;
  a_g.colwise() += layer.b_g;
  a_i.colwise() += layer.b_i;
  a_f.colwise() += layer.b_f;
  a_o.colwise() += layer.b_o;

  for (MatrixXd* m : {&c.g, &c.i, &c.f, &c.o, &c.s, &c.h}) m->resize(cells, steps);
  VectorXd h_prev = VectorXd::Zero(cells);
  VectorXd s_prev = VectorXd::Zero(cells);
  for (Index k = 0; k < steps; ++k) {
    const Index t = direction == Direction::kForward ? k : steps - 1 - k;
    c.g.col(t) = (a_g.col(t) + layer.w_gh * h_prev).array().tanh().matrix();
    c.i.col(t) = sigmoid(a_i.col(t) + layer.w_ih * h_prev);
    c.f.col(t) = sigmoid(a_f.col(t) + layer.w_fh * h_prev);
    c.o.col(t) = sigmoid(a_o.col(t) + layer.w_oh * h_prev);
    c.s.col(t) = (c.g.col(t).cwiseProduct(c.i.col(t)) + s_prev.cwiseProduct(c.f.col(t)))
                     .array()
                     .tanh()
                     .matrix();
    c.h.col(t) = c.s.col(t).cwiseProduct(c.o.col(t));
    h_prev = c.h.col(t);
    s_prev = c.s.col(t);
  }
  return c;
}

MatrixXd lstm_backward(const LstmCache& c, const MatrixXd& inputs, const LstmLayer& layer,
                       const MatrixXd& d_h, LstmLayer& grad) {
  const Index steps = inputs.cols();
  const auto cells = static_cast<Index>(layer.cells());
  const bool fwd = c.direction == Direction::kForward;

  MatrixXd da_g(cells, steps), da_i(cells, steps), da_f(cells, steps), da_o(cells, steps);
  MatrixXd h_prev_all = MatrixXd::Zero(cells, steps);
  VectorXd dh_next = VectorXd::Zero(cells);
  VectorXd ds_next = VectorXd::Zero(cells);
  const VectorXd zero = VectorXd::Zero(cells);

  for (Index k = 0; k < steps; ++k) {
    // Visit steps in reverse processing order.
    const Index t = fwd ? steps - 1 - k : k;
    const Index prev = fwd ? t - 1 : t + 1;
    const bool has_prev = prev >= 0 && prev < steps;
    const VectorXd s_prev = has_prev ? VectorXd(c.s.col(prev)) : zero;
    if (has_prev) h_prev_all.col(t) = c.h.col(prev);

    const auto g = c.g.col(t).array();
    const auto i = c.i.col(t).array();
    const auto f = c.f.col(t).array();
    const auto o = c.o.col(t).array();
    const auto s = c.s.col(t).array();

    const Eigen::ArrayXd dh = d_h.col(t).array() + dh_next.array();
    const Eigen::ArrayXd d_o = dh * s;
    const Eigen::ArrayXd ds = dh * o + ds_next.array();
    const Eigen::ArrayXd dc = ds * (1.0 - s * s);

    da_g.col(t) = (dc * i * (1.0 - g * g)).matrix();
    da_i.col(t) = (dc * g * i * (1.0 - i)).matrix();
    da_f.col(t) = (dc * s_prev.array() * f * (1.0 - f)).matrix();
    da_o.col(t) = (d_o * o * (1.0 - o)).matrix();
    ds_next = (dc * f).matrix();
    dh_next = layer.w_gh.transpose() * da_g.col(t) + layer.w_ih.transpose() * da_i.col(t) +
              layer.w_fh.transpose() * da_f.col(t) + layer.w_oh.transpose() * da_o.col(t);
  }

  const MatrixXd x_t = inputs.transpose();
  const MatrixXd h_t = h_prev_all.transpose();
  grad.w_gx += da_g * x_t;
  grad.w_ix += da_i * x_t;
  grad.w_fx += da_f * x_t;
  grad.w_ox += da_o * x_t;
  grad.w_gh += da_g * h_t;
  grad.w_ih += da_i * h_t;
  grad.w_fh += da_f * h_t;
  grad.w_oh += da_o * h_t;
  grad.b_g += da_g.rowwise().sum();
  grad.b_i += da_i.rowwise().sum();
  grad.b_f += da_f.rowwise().sum();
  grad.b_o += da_o.rowwise().sum();

  return layer.w_gx.transpose() * da_g + layer.w_ix.transpose() * da_i +
         layer.w_fx.transpose() * da_f + layer.w_ox.transpose() * da_o;
}

SequenceActivations forward(const Eigen::SparseMatrix<double>& inputs, const NetworkConfig& config,
                            const Parameters& params) {
  if (static_cast<std::size_t>(inputs.rows()) != config.input_dim) {
    throw std::invalid_argument("input dimension " + std::to_string(inputs.rows()) +
                                " does not match network input_dim " +
                                std::to_string(config.input_dim));
  }
  SequenceActivations act;
  act.input = inputs;
  if (inputs.cols() == 0) {
    act.y.resize(static_cast<Index>(config.n_classes), 0);
    return act;
  }

  act.dense.push_back(dense_forward(inputs, params.dense[0]));
  const MatrixXd* top = nullptr;
  switch (config.variant) {
    case Variant::kFF:
      act.dense.push_back(dense_forward(act.dense[0].out, params.dense[1]));
      act.dense.push_back(dense_forward(act.dense[1].out, params.dense[2]));
      top = &act.dense[2].out;
      break;
    case Variant::kLSTM:
      act.lstm.push_back(lstm_forward(act.dense[0].out, params.lstm[0], Direction::kForward));
      act.lstm.push_back(lstm_forward(act.lstm[0].h, params.lstm[1], Direction::kForward));
      top = &act.lstm[1].h;
      break;
    case Variant::kBLSTM: {
      act.lstm.push_back(lstm_forward(act.dense[0].out, params.lstm[0], Direction::kForward));
      act.lstm.push_back(lstm_forward(act.dense[0].out, params.lstm[1], Direction::kBackward));
      const MergeLayer& m = *params.merge;
      act.merged = m.w_yh * act.lstm[0].h + m.w_yz * act.lstm[1].h;
      act.merged.colwise() += m.b_y;
      act.lstm.push_back(lstm_forward(act.merged, params.lstm[2], Direction::kForward));
      top = &act.lstm[2].h;
      break;
    }
  }
  MatrixXd logits = params.output.w * *top;
  logits.colwise() += params.output.b;
  act.y = softmax_columns(logits);
  return act;
}

double loss(const MatrixXd& y, std::span<const Label> gold) {
  if (static_cast<std::size_t>(y.cols()) != gold.size()) {
    throw std::invalid_argument("loss: prediction and gold lengths differ");
  }
  if (gold.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t t = 0; t < gold.size(); ++t) {
    const double p = y(static_cast<Index>(gold[t]), static_cast<Index>(t));
    total -= std::log(std::max(p, kProbabilityFloor));
  }
  return total / static_cast<double>(gold.size());
}

GradientSet backward_bptt(const SequenceActivations& act, std::span<const Label> gold,
                          const NetworkConfig& config, const Parameters& params) {
  GradientSet grads = params.zeros_like();
  backward_bptt(act, gold, config, params, grads);
  return grads;
}

void backward_bptt(const SequenceActivations& act, std::span<const Label> gold,
                   const NetworkConfig& config, const Parameters& params, GradientSet& grads) {
  for (auto& t : grads.tensors()) std::fill(t.values.begin(), t.values.end(), 0.0);
  const Index steps = static_cast<Index>(act.length());
  if (static_cast<std::size_t>(steps) != gold.size()) {
    throw std::invalid_argument("backward: activations and gold lengths differ");
  }
  if (steps == 0) return;

  MatrixXd d_logits = act.y;
  for (Index t = 0; t < steps; ++t) d_logits(static_cast<Index>(gold[t]), t) -= 1.0;
  d_logits /= static_cast<double>(steps);

  const MatrixXd& top = config.variant == Variant::kFF ? act.dense[2].out : act.lstm.back().h;
  grads.output.w += d_logits * top.transpose();
  grads.output.b += d_logits.rowwise().sum();
  MatrixXd d_top = params.output.w.transpose() * d_logits;

  MatrixXd d_dense0;  // gradient w.r.t. the first dense layer's output
  switch (config.variant) {
    case Variant::kFF: {
      MatrixXd d_pre = dense_backward(act.dense[2], act.dense[1].out, d_top, grads.dense[2]);
      d_pre = dense_backward(act.dense[1], act.dense[0].out, params.dense[2].w.transpose() * d_pre,
                             grads.dense[1]);
      d_dense0 = params.dense[1].w.transpose() * d_pre;
      break;
    }
    case Variant::kLSTM: {
      MatrixXd d_h0 =
          lstm_backward(act.lstm[1], act.lstm[0].h, params.lstm[1], d_top, grads.lstm[1]);
      d_dense0 = lstm_backward(act.lstm[0], act.dense[0].out, params.lstm[0], d_h0, grads.lstm[0]);
      break;
    }
    case Variant::kBLSTM: {
      const MergeLayer& m = *params.merge;
      MergeLayer& gm = *grads.merge;
      const MatrixXd d_merged =
          lstm_backward(act.lstm[2], act.merged, params.lstm[2], d_top, grads.lstm[2]);
      gm.w_yh += d_merged * act.lstm[0].h.transpose();
      gm.w_yz += d_merged * act.lstm[1].h.transpose();
      gm.b_y += d_merged.rowwise().sum();
      const MatrixXd d_h = m.w_yh.transpose() * d_merged;
      const MatrixXd d_z = m.w_yz.transpose() * d_merged;
      d_dense0 = lstm_backward(act.lstm[0], act.dense[0].out, params.lstm[0], d_h, grads.lstm[0]) +
                 lstm_backward(act.lstm[1], act.dense[0].out, params.lstm[1], d_z, grads.lstm[1]);
      break;
    }
  }
  dense_backward(act.dense[0], act.input, d_dense0, grads.dense[0]);
}

void sgd_step(Parameters& params, const GradientSet& grads, double learning_rate) {
  auto targets = params.tensors();
  const auto updates = grads.tensors();
  if (targets.size() != updates.size()) {
    throw std::invalid_argument("sgd_step: parameter and gradient layouts differ");
  }
  for (std::size_t k = 0; k < targets.size(); ++k) {
    if (targets[k].values.size() != updates[k].values.size()) {
      throw std::invalid_argument("sgd_step: shape mismatch in " + targets[k].name);
    }
    for (double g : updates[k].values) {
      if (!std::isfinite(g)) throw NonFiniteError("non-finite gradient in " + updates[k].name);
    }
  }
  for (std::size_t k = 0; k < targets.size(); ++k) {
    auto& p = targets[k].values;
    const auto& g = updates[k].values;
    for (std::size_t j = 0; j < p.size(); ++j) p[j] -= learning_rate * g[j];
  }
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kRelErrorFloor});
  return std::abs(analytic - numeric) / scale;
}

GradientCheckReport gradient_check(Variant variant, std::uint64_t seed, double tolerance,
                                   const GradientCheckOptions& options) {
  NetworkConfig config;
  config.variant = variant;
  config.input_dim = options.input_dim;
  config.dense_size = options.dense_size;
  config.lstm_cells = options.lstm_cells;

  Parameters params = init_params(config, seed);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (auto& t : params.tensors()) {
    if (t.cols != 1) continue;
    for (double& v : t.values) v += rng.uniform(-0.5, 0.5);
  }
  const auto steps = static_cast<Index>(options.length);
  MatrixXd x(static_cast<Index>(options.input_dim), steps);
  for (Index t = 0; t < steps; ++t) {
    for (Index r = 0; r < x.rows(); ++r) x(r, t) = rng.uniform(-1.0, 1.0);
  }
  const Eigen::SparseMatrix<double> inputs = x.sparseView();
  std::vector<Label> gold(options.length);
  for (auto& label : gold) label = static_cast<Label>(rng.index(kNumLabels));

  const GradientSet grads = backward_bptt(forward(inputs, config, params), gold, config, params);
  const auto analytic = grads.tensors();
  auto values = params.tensors();

  GradientCheckReport report;
  report.variant = variant;
  report.tolerance = tolerance;
  for (std::size_t k = 0; k < values.size(); ++k) {
    BlockError block{values[k].name, values[k].values.size(), 0.0};
    for (std::size_t j = 0; j < values[k].values.size(); ++j) {
      double& v = values[k].values[j];
      const double original = v;
      v = original + options.step;
      const double plus = loss(forward(inputs, config, params).y, gold);
      v = original - options.step;
      const double minus = loss(forward(inputs, config, params).y, gold);
      v = original;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double err = relative_error(analytic[k].values[j] + options.corruption, numeric);
      block.max_rel_error = std::max(block.max_rel_error, err);
    }
    report.max_rel_error = std::max(report.max_rel_error, block.max_rel_error);
    report.blocks.push_back(std::move(block));
  }
  report.passed = report.max_rel_error < tolerance;
  return report;
}

}  // namespace ner
