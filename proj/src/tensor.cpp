#include "dsrsd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dsrsd/error.hpp"

namespace dsrsd {

namespace detail {
struct TensorAccess {
  static Tensor make(Matrix value) { return Tensor(std::move(value), false); }
  static TensorState& state(const Tensor& t) { return *t.state_; }
};
}  // namespace detail

using detail::TensorAccess;

Tensor::Tensor(Matrix value, bool requires_grad)
    : state_(std::make_shared<detail::TensorState>()) {
  state_->value = std::move(value);
  state_->requires_grad = requires_grad;
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1) {
    throw UsageError("Tensor::item on non-scalar of shape " + shape_string(value()));
  }
  return state_->value[0];
}

void Tensor::set_grad(Matrix g) {
  if (!g.same_shape(state_->value)) {
    throw ShapeError("set_grad: gradient shape " + shape_string(g) + " does not match value " +
                     shape_string(state_->value));
  }
  state_->grad = std::move(g);
}

void Tensor::assign(Matrix value) {
  if (!state_->is_leaf) throw UsageError("assign: only leaf tensors may be mutated");
  if (!value.same_shape(state_->value)) {
    throw ShapeError("assign: shape " + shape_string(value) + " does not match " +
                     shape_string(state_->value));
  }
  state_->value = std::move(value);
}

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kMatmul: return "matmul";
    case OpKind::kMatmulNT: return "matmul_nt";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kAddRowBias: return "add_row_bias";
    case OpKind::kMulColBroadcast: return "mul_col_broadcast";
    case OpKind::kSquare: return "square";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kRowSum: return "row_sum";
    case OpKind::kColMean: return "col_mean";
    case OpKind::kRowSoftmax: return "row_softmax";
    case OpKind::kLogSoftmax: return "log_softmax";
    case OpKind::kGelu: return "gelu";
    case OpKind::kDropout: return "dropout";
    case OpKind::kRowL2Norm: return "row_l2_norm";
    case OpKind::kCosineSimilarity: return "cosine_similarity";
    case OpKind::kLog: return "log";
    case OpKind::kExp: return "exp";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kSliceCols: return "slice_cols";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Graph

void Graph::record(OpKind kind, std::vector<Tensor> inputs, const Tensor& output, BackwardFn fn) {
  if (consumed_) throw UsageError("cannot record into a graph that backward already consumed");
  nodes_.push_back(Node{kind, std::move(inputs), output, std::move(fn)});
}

void Graph::backward(const Tensor& loss) {
  if (consumed_) throw UsageError("backward: graph already consumed by a previous backward call");
  if (!loss.defined() || loss.rows() != 1 || loss.cols() != 1) {
    throw UsageError("backward: loss must be a 1x1 tensor, got " +
                     (loss.defined() ? shape_string(loss.value()) : std::string("undefined")));
  }
  const bool in_graph = std::any_of(nodes_.begin(), nodes_.end(),
                                    [&](const Node& n) { return n.output.id() == loss.id(); });
  if (!in_graph) throw UsageError("backward: loss was not produced by this graph");
  consumed_ = true;

  for (const Node& node : nodes_) {
    for (const Tensor& in : node.inputs) {
      auto& st = TensorAccess::state(in);
      if (st.requires_grad && st.is_leaf) st.grad.reset();
    }
  }

  TensorAccess::state(loss).grad = Matrix(1, 1, 1.0);

  std::vector<Matrix*> grad_in;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    auto& out = TensorAccess::state(it->output);
    if (!out.grad) continue;
    grad_in.assign(it->inputs.size(), nullptr);
    for (std::size_t k = 0; k < it->inputs.size(); ++k) {
      auto& st = TensorAccess::state(it->inputs[k]);
      if (!st.requires_grad) continue;
      if (!st.grad) st.grad = Matrix(st.value.rows(), st.value.cols());
      grad_in[k] = &*st.grad;
    }
    it->backward(*out.grad, out.value, grad_in);
    out.grad.reset();
  }
  nodes_.clear();
  nodes_.shrink_to_fit();
}

namespace {
thread_local Graph* g_active_graph = nullptr;
}

GraphScope::GraphScope(Graph& graph) : previous_(g_active_graph) { g_active_graph = &graph; }
GraphScope::GraphScope(Graph* graph) : previous_(g_active_graph) { g_active_graph = graph; }
GraphScope::~GraphScope() { g_active_graph = previous_; }
Graph* GraphScope::active() { return g_active_graph; }

// ---------------------------------------------------------------------------
// Primitives

namespace ops {
namespace {

Tensor emit(OpKind kind, std::vector<Tensor> inputs, Matrix value, Graph::BackwardFn fn) {
  Tensor out = TensorAccess::make(std::move(value));
  Graph* graph = GraphScope::active();
  const bool track = graph != nullptr && std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) {
                       return t.requires_grad();
                     });
  if (track) {
    auto& st = TensorAccess::state(out);
    st.requires_grad = true;
    st.is_leaf = false;
    graph->record(kind, std::move(inputs), out, std::move(fn));
  }
  return out;
}

[[noreturn]] void shape_mismatch(OpKind kind, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op_name(kind)) + ": shapes " + shape_string(a) + " and " +
                   shape_string(b) + " do not conform");
}

void require_same_shape(OpKind kind, const Tensor& a, const Tensor& b) {
  if (!a.value().same_shape(b.value())) shape_mismatch(kind, a.value(), b.value());
}

void require_nonempty(OpKind kind, const Tensor& a) {
  if (a.value().empty()) {
    throw ShapeError(std::string(op_name(kind)) + ": empty input " + shape_string(a.value()));
  }
}

Matrix elementwise(const Matrix& a, auto&& f) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_mismatch(OpKind::kMatmul, a.value(), b.value());
  Matrix out(a.rows(), b.cols());
  gemm_nn(a.value(), b.value(), out);
  return emit(OpKind::kMatmul, {a, b}, std::move(out),
              [a, b](const Matrix& g, const Matrix&, std::span<Matrix* const> gin) {
                if (gin[0]) gemm_nt(g, b.value(), *gin[0]);
                if (gin[1]) gemm_tn(a.value(), g, *gin[1]);
              });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) shape_mismatch(OpKind::kMatmulNT, a.value(), b.value());
  Matrix out(a.rows(), b.rows());
  gemm_nt(a.value(), b.value(), out);
  return emit(OpKind::kMatmulNT, {a, b}, std::move(out),
              [a, b](const Matrix& g, const Matrix&, std::span<Matrix* const> gin) {
                if (gin[0]) gemm_nn(g, b.value(), *gin[0]);
                if (gin[1]) gemm_tn(g, a.value(), *gin[1]);
              });
}

Tensor transpose(const Tensor& a) {
  return emit(OpKind::kTranspose, {a}, transposed(a.value()),
              [](const Matrix& g, const Matrix&, std::span<Matrix* const> gin) {
                Matrix& ga = *gin[0];
                for (std::size_t i = 0; i < g.rows(); ++i)
                  for (std::size_t j = 0; j < g.cols(); ++j) ga(j, i) += g(i, j);
              });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(OpKind::kAdd, a, b);
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return emit(OpKind::kAdd, {a, b}, std::move(out),
              [](const Matrix& g, const Matrix&, std::span<Matrix* const> gin) {
                for (Matrix* gi : gin) {
                  if (!gi) continue;
                  for (std::size_t i = 0; i < g.size(); ++i) (*gi)[i] += g[i];
                }
              });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(OpKind::kSub, a, b);
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return emit(OpKind::kSub, {a, b}, std::move(out),
              [](const Matrix& g, const Matrix&, std::span<Matrix* const> gin) {
                if (gin[0])
                  for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i];
                if (gin[1])
                  for (std::size_t i = 0; i < g.size(); ++i) (*gin[1])[i] -= g[i];
              });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(OpKind::kMul, a, b);
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return emit(OpKind::kMul, {a, b}, std::move(out),
              [a, b](const Matrix& g, const Matrix&, std::span<Matrix* const> gin) {
                if (gin[0])
                  for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i] * b.value()[i];
                if (gin[1])
                  for (std::size_t i = 0; i < g.size(); ++i) (*gin[1])[i] += g[i] * a.value()[i];
              });
}

Tensor scale(const Tensor& a, double factor) {
  Matrix out = elementwise(a.value(), [factor](double v) { return v * factor; });
  return emit(OpKind::kScale, {a}, std::move(out),
              [factor](const Matrix& g, const Matrix&, std::span<Matrix* const> gin) {
                for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i] * factor;
              });
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    shape_mismatch(OpKind::kAddRowBias, x.value(), bias.value());
  }
  Matrix out = x.value();
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += bias.value()[j];
  return emit(OpKind::kAddRowBias, {x, bias}, std::move(out),
              [](const Matrix& g, const Matrix&, std::span<Matrix* const> gin) {
                if (gin[0])
                  for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i];
                if (gin[1])
                  for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < g.cols(); ++j) (*gin[1])[j] += g(i, j);
              });
}

Tensor mul_col_broadcast(const Tensor& x, const Tensor& column) {
  if (column.cols() != 1 || column.rows() != x.rows()) {
    shape_mismatch(OpKind::kMulColBroadcast, x.value(), column.value());
  }
  Matrix out = x.value();
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= column.value()[i];
  return emit(OpKind::kMulColBroadcast, {x, column}, std::move(out),
              [x, column](const Matrix& g, const Matrix&, std::span<Matrix* const> gin) {
                for (std::size_t i = 0; i < g.rows(); ++i) {
                  const double c = column.value()[i];
                  double acc = 0.0;
                  for (std::size_t j = 0; j < g.cols(); ++j) {
                    if (gin[0]) (*gin[0])(i, j) += g(i, j) * c;
                    acc += g(i, j) * x.value()(i, j);
                  }
                  if (gin[1]) (*gin[1])[i] += acc;
                }
              });
}

Tensor square(const Tensor& a) {
  Matrix out = elementwise(a.value(), [](double v) { return v * v; });
  return emit(OpKind::kSquare, {a}, std::move(out),
              [a](const Matrix& g, const Matrix&, std::span<Matrix* const> gin) {
                for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += 2.0 * a.value()[i] * g[i];
              });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return emit(OpKind::kSum, {a}, Matrix(1, 1, s),
              [](const Matrix& g, const Matrix&, std::span<Matrix* const> gin) {
                for (double& v : gin[0]->values()) v += g[0];
              });
}

Tensor mean(const Tensor& a) {
  require_nonempty(OpKind::kMean, a);
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const double n = static_cast<double>(a.value().size());
  return emit(OpKind::kMean, {a}, Matrix(1, 1, s / n),
              [n](const Matrix& g, const Matrix&, std::span<Matrix* const> gin) {
                for (double& v : gin[0]->values()) v += g[0] / n;
              });
}

Tensor row_sum(const Tensor& a) {
  Matrix out(a.rows(), 1);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (double v : a.value().row(i)) s += v;
    out[i] = s;
  }
  return emit(OpKind::kRowSum, {a}, std::move(out),
              [](const Matrix& g, const Matrix&, std::span<Matrix* const> gin) {
                Matrix& ga = *gin[0];
                for (std::size_t i = 0; i < ga.rows(); ++i)
                  for (double& v : ga.row(i)) v += g[i];
              });
}

Tensor col_mean(const Tensor& a) {
  require_nonempty(OpKind::kColMean, a);
  const double n = static_cast<double>(a.rows());
  Matrix out(1, a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += a.value()(i, j);
  for (double& v : out.values()) v /= n;
  return emit(OpKind::kColMean, {a}, std::move(out),
              [n](const Matrix& g, const Matrix&, std::span<Matrix* const> gin) {
                Matrix& ga = *gin[0];
                for (std::size_t i = 0; i < ga.rows(); ++i)
                  for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += g[j] / n;
              });
}

Tensor row_softmax(const Tensor& a) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto in = a.value().row(i);
    auto o = out.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) z += (o[j] = std::exp(in[j] - mx));
    for (double& v : o) v /= z;
  }
  return emit(OpKind::kRowSoftmax, {a}, std::move(out),
              [](const Matrix& g, const Matrix& y, std::span<Matrix* const> gin) {
                Matrix& ga = *gin[0];
                for (std::size_t i = 0; i < y.rows(); ++i) {
                  double dot = 0.0;
                  for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
                  for (std::size_t j = 0; j < y.cols(); ++j) ga(i, j) += y(i, j) * (g(i, j) - dot);
                }
              });
}

Tensor log_softmax(const Tensor& a) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto in = a.value().row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (double v : in) z += std::exp(v - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < in.size(); ++j) out(i, j) = in[j] - lse;
  }
  return emit(OpKind::kLogSoftmax, {a}, std::move(out),
              [](const Matrix& g, const Matrix& y, std::span<Matrix* const> gin) {
                Matrix& ga = *gin[0];
                for (std::size_t i = 0; i < y.rows(); ++i) {
                  double gs = 0.0;
                  for (std::size_t j = 0; j < y.cols(); ++j) gs += g(i, j);
                  for (std::size_t j = 0; j < y.cols(); ++j)
                    ga(i, j) += g(i, j) - std::exp(y(i, j)) * gs;
                }
              });
}

Tensor gelu(const Tensor& a) {
  return emit(OpKind::kGelu, {a}, elementwise(a.value(), gelu_value),
              [a](const Matrix& g, const Matrix&, std::span<Matrix* const> gin) {
                constexpr double kInvSqrt2Pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
                for (std::size_t i = 0; i < g.size(); ++i) {
                  const double x = a.value()[i];
                  const double cdf = 0.5 * std::erfc(-x / std::numbers::sqrt2);
                  const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
                  (*gin[0])[i] += g[i] * (cdf + x * pdf);
                }
              });
}

Tensor dropout(const Tensor& a, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout: rate " + std::to_string(rate) + " outside [0,1)");
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  Matrix mask(a.rows(), a.cols());
  for (double& m : mask.values()) m = rng.uniform() < rate ? 0.0 : keep_scale;
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return emit(OpKind::kDropout, {a}, std::move(out),
              [mask = std::move(mask)](const Matrix& g, const Matrix&, std::span<Matrix* const> gin) {
                for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i] * mask[i];
              });
}

Tensor row_l2_norm(const Tensor& a) {
  Matrix out(a.rows(), 1);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (double v : a.value().row(i)) s += v * v;
    if (s == 0.0) throw NumericalError("row_l2_norm: zero-norm row " + std::to_string(i));
    out[i] = std::sqrt(s);
  }
  return emit(OpKind::kRowL2Norm, {a}, std::move(out),
              [a](const Matrix& g, const Matrix& n, std::span<Matrix* const> gin) {
                Matrix& ga = *gin[0];
                for (std::size_t i = 0; i < ga.rows(); ++i)
                  for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += g[i] * a.value()(i, j) / n[i];
              });
}

namespace {
std::vector<double> checked_row_norms(const Matrix& m, const char* which) {
  std::vector<double> norms(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (double v : m.row(i)) s += v * v;
    if (s == 0.0) {
      throw NumericalError(std::string("cosine_similarity: zero-norm row ") + std::to_string(i) +
                           " in " + which);
    }
    norms[i] = std::sqrt(s);
  }
  return norms;
}
}  // namespace

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) shape_mismatch(OpKind::kCosineSimilarity, a.value(), b.value());
  auto na = checked_row_norms(a.value(), "first operand");
  auto nb = checked_row_norms(b.value(), "second operand");
  Matrix out(a.rows(), b.rows());
  gemm_nt(a.value(), b.value(), out);
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) /= na[i] * nb[j];
  return emit(
      OpKind::kCosineSimilarity, {a, b}, std::move(out),
      [a, b, na = std::move(na), nb = std::move(nb)](const Matrix& g, const Matrix& s,
                                                     std::span<Matrix* const> gin) {
        const Matrix& av = a.value();
        const Matrix& bv = b.value();
        const std::size_t d = av.cols();
        if (gin[0]) {
          Matrix& ga = *gin[0];
          for (std::size_t i = 0; i < av.rows(); ++i) {
            double gs = 0.0;
            for (std::size_t j = 0; j < bv.rows(); ++j) {
              const double w = g(i, j) / (na[i] * nb[j]);
              gs += g(i, j) * s(i, j);
              for (std::size_t k = 0; k < d; ++k) ga(i, k) += w * bv(j, k);
            }
            const double c = gs / (na[i] * na[i]);
            for (std::size_t k = 0; k < d; ++k) ga(i, k) -= c * av(i, k);
          }
        }
        if (gin[1]) {
          Matrix& gb = *gin[1];
          for (std::size_t j = 0; j < bv.rows(); ++j) {
            double gs = 0.0;
            for (std::size_t i = 0; i < av.rows(); ++i) {
              const double w = g(i, j) / (na[i] * nb[j]);
              gs += g(i, j) * s(i, j);
              for (std::size_t k = 0; k < d; ++k) gb(j, k) += w * av(i, k);
            }
            const double c = gs / (nb[j] * nb[j]);
            for (std::size_t k = 0; k < d; ++k) gb(j, k) -= c * bv(j, k);
          }
        }
      });
}

Tensor log(const Tensor& a) {
  for (std::size_t i = 0; i < a.value().size(); ++i) {
    if (!(a.value()[i] > 0.0)) {
      throw NumericalError("log: non-positive input at flat index " + std::to_string(i));
    }
  }
  return emit(OpKind::kLog, {a}, elementwise(a.value(), [](double v) { return std::log(v); }),
              [a](const Matrix& g, const Matrix&, std::span<Matrix* const> gin) {
                for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i] / a.value()[i];
              });
}

Tensor exp(const Tensor& a) {
  return emit(OpKind::kExp, {a}, elementwise(a.value(), [](double v) { return std::exp(v); }),
              [](const Matrix& g, const Matrix& y, std::span<Matrix* const> gin) {
                for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i] * y[i];
              });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != rows) shape_mismatch(OpKind::kConcatCols, parts.front().value(), p.value());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    offsets.push_back(off);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < p.cols(); ++j) out(i, off + j) = p.value()(i, j);
    off += p.cols();
  }
  return emit(OpKind::kConcatCols, std::vector<Tensor>(parts.begin(), parts.end()), std::move(out),
              [offsets = std::move(offsets)](const Matrix& g, const Matrix&, std::span<Matrix* const> gin) {
                for (std::size_t k = 0; k < gin.size(); ++k) {
                  if (!gin[k]) continue;
                  Matrix& gk = *gin[k];
                  for (std::size_t i = 0; i < gk.rows(); ++i)
                    for (std::size_t j = 0; j < gk.cols(); ++j) gk(i, j) += g(i, offsets[k] + j);
                }
              });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.cols()) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") outside " + shape_string(a.value()));
  }
  Matrix out(a.rows(), end - begin);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = begin; j < end; ++j) out(i, j - begin) = a.value()(i, j);
  return emit(OpKind::kSliceCols, {a}, std::move(out),
              [begin](const Matrix& g, const Matrix&, std::span<Matrix* const> gin) {
                Matrix& ga = *gin[0];
                for (std::size_t i = 0; i < g.rows(); ++i)
                  for (std::size_t j = 0; j < g.cols(); ++j) ga(i, begin + j) += g(i, j);
              });
}

}  // namespace ops

double gelu_value(double x) { return 0.5 * x * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace dsrsd
