#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dsrsd/matrix.hpp"
#include "dsrsd/rng.hpp"

namespace dsrsd {

namespace detail {
struct TensorState {
  Matrix value;
  bool requires_grad = false;
  bool is_leaf = true;
  std::optional<Matrix> grad;
};
struct TensorAccess;
}  // namespace detail

/// Shared handle to a value in the computation. Copies alias the same storage.
///
/// Leaves are created by the user (parameters or constants); every other tensor is
/// produced by a primitive in `ops`. Only leaves may be mutated, and only through
/// `assign`, which the optimizer and checkpoint loader use between steps.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Matrix value, bool requires_grad = false);

  static Tensor parameter(Matrix value) { return Tensor(std::move(value), true); }
  static Tensor constant(Matrix value) { return Tensor(std::move(value), false); }

  bool defined() const noexcept { return static_cast<bool>(state_); }
  const Matrix& value() const { return state_->value; }
  std::size_t rows() const { return state_->value.rows(); }
  std::size_t cols() const { return state_->value.cols(); }
  double item() const;

  bool requires_grad() const { return state_->requires_grad; }
  bool is_leaf() const { return state_->is_leaf; }

  /// Gradient from the last backward pass, or nullptr if none was produced.
  const Matrix* grad() const { return state_->grad ? &*state_->grad : nullptr; }
  Matrix* mutable_grad() { return state_->grad ? &*state_->grad : nullptr; }
  void set_grad(Matrix g);
  void zero_grad() { state_->grad.reset(); }

  void assign(Matrix value);

  const void* id() const noexcept { return state_.get(); }

 private:
  friend class Graph;
  friend struct detail::TensorAccess;
  std::shared_ptr<detail::TensorState> state_;
};

enum class OpKind {
  kMatmul,
  kMatmulNT,
  kTranspose,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddRowBias,
  kMulColBroadcast,
  kSquare,
  kSum,
  kMean,
  kRowSum,
  kColMean,
  kRowSoftmax,
  kLogSoftmax,
  kGelu,
  kDropout,
  kRowL2Norm,
  kCosineSimilarity,
  kLog,
  kExp,
  kConcatCols,
  kSliceCols,
};

std::string_view op_name(OpKind kind);

/// Tape of recorded primitives in construction order.
///
/// `backward` visits the tape in exact reverse order and consumes it: a second
/// call raises UsageError. Leaf gradients are overwritten (not accumulated across
/// passes); within one pass, contributions from multiple consumers add up.
class Graph {
 public:
  /// Adds the input gradients into `grad_in` (nullptr for inputs not requiring grad).
  using BackwardFn = std::function<void(const Matrix& grad_out, const Matrix& out,
                                        std::span<Matrix* const> grad_in)>;

  struct Node {
    OpKind kind;
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  void record(OpKind kind, std::vector<Tensor> inputs, const Tensor& output, BackwardFn fn);
  void backward(const Tensor& loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  bool consumed() const noexcept { return consumed_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }

 private:
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

/// Makes `graph` the active tape for ops on this thread until destruction.
class GraphScope {
 public:
  explicit GraphScope(Graph& graph);
  /// Pass nullptr to suspend recording (evaluation, finite differences).
  explicit GraphScope(Graph* graph);
  ~GraphScope();
  GraphScope(const GraphScope&) = delete;
  GraphScope& operator=(const GraphScope&) = delete;

  static Graph* active();

 private:
  Graph* previous_;
};

namespace ops {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a * b^T
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_row_bias(const Tensor& x, const Tensor& bias);            // bias: 1 x cols
Tensor mul_col_broadcast(const Tensor& x, const Tensor& column);     // column: rows x 1
Tensor square(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor row_sum(const Tensor& a);
Tensor col_mean(const Tensor& a);
Tensor row_softmax(const Tensor& a);
Tensor log_softmax(const Tensor& a);
Tensor gelu(const Tensor& a);
Tensor dropout(const Tensor& a, double rate, Rng& rng);
Tensor row_l2_norm(const Tensor& a);
Tensor cosine_similarity(const Tensor& a, const Tensor& b);  // rows of a vs rows of b
Tensor log(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);

}  // namespace ops

double gelu_value(double x);

}  // namespace dsrsd
