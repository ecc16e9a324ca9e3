#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace tricd {

// Dense row-major 2-D array of doubles. Scalars are 1x1. `grad` is sized
// like `data` once the tensor takes part in a backward pass as a parameter.
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c, double fill = 0.0, bool rg = false)
      : rows(r), cols(c), data(r * c, fill), requires_grad(rg) {
    if (rg) grad.assign(r * c, 0.0);
  }
  static Tensor from(std::size_t r, std::size_t c, std::vector<double> values);

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::size_t size() const { return data.size(); }
  std::vector<std::size_t> shape() const { return {rows, cols}; }
  void zero_grad() { grad.assign(data.size(), 0.0); }
};

// Handle to a node on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

enum class OpKind {
  Leaf,
  Param,
  MatMul,
  Add,
  Mul,
  MeanRows,
  MeanAll,
  SoftmaxRows,
  Sigmoid,
  LogSigmoid,
  Relu,
  Scale,
  RowSelect,
  ConcatRows,
};

// Records a forward computation and replays it backwards. A tape and the
// parameters bound to it belong to one thread at a time.
class Tape {
 public:
  Var constant(const Tensor& value);
  Var constant(std::size_t rows, std::size_t cols, std::vector<double> values);
  // Gradients of this node are added into param.grad by backward().
  Var param(Tensor& param);

  // a (n x k) times b (k x m), or b^T when transpose_b (b is m x k).
  Var matmul(Var a, Var b, bool transpose_b = false);
  // Same shape, or b a single row broadcast over the rows of a.
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var mean_rows(Var a);  // n x m -> 1 x m
  Var mean_all(Var a);   // -> 1 x 1
  Var softmax_rows(Var a);
  Var sigmoid(Var a);
  Var log_sigmoid(Var a);
  Var relu(Var a);
  Var scale(Var a, double alpha);
  Var row_select(Var a, std::size_t row);
  Var concat_rows(const std::vector<Var>& parts);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  double scalar(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Reverse pass from a 1x1 loss. Parameter gradients accumulate across
  // calls; forward values are never modified. Throws NonScalarLoss.
  void backward(Var loss);

 private:
  struct Node {
    OpKind op = OpKind::Leaf;
    Tensor value;
    std::vector<double> grad;
    std::vector<std::size_t> inputs;
    double alpha = 0.0;
    std::size_t index = 0;
    bool transpose_b = false;
    bool requires_grad = false;
    Tensor* param = nullptr;
  };

  Var push(Node node);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
};

// Central finite differences against the tape's analytic gradients. `build`
// must bind every tensor in `params` through Tape::param and return a scalar.
// Returns max |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
double check_gradients(const std::function<Var(Tape&)>& build, const std::vector<Tensor*>& params,
                       double epsilon = 1e-4);

}  // namespace tricd
