#include "tricd/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tricd/error.hpp"

namespace tricd {

Tensor Tensor::from(std::size_t r, std::size_t c, std::vector<double> values) {
  if (values.size() != r * c) {
    throw Error(ErrorCode::ShapeMismatch, "tensor data length does not match shape");
  }
  Tensor t;
  t.rows = r;
  t.cols = c;
  t.data = std::move(values);
  return t;
}

namespace {

std::string dims(const Tensor& t) { return std::to_string(t.rows) + "x" + std::to_string(t.cols); }

void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": " + dims(a) + " vs " + dims(b));
}

}  // namespace

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw Error(ErrorCode::InvalidArgument, "variable not on this tape");
  return nodes_[v.id];
}

Var Tape::constant(const Tensor& value) {
  Node n;
  n.value = Tensor::from(value.rows, value.cols, value.data);
  return push(std::move(n));
}

Var Tape::constant(std::size_t rows, std::size_t cols, std::vector<double> values) {
  Node n;
  n.value = Tensor::from(rows, cols, std::move(values));
  return push(std::move(n));
}

Var Tape::param(Tensor& p) {
  Node n;
  n.op = OpKind::Param;
  n.value = Tensor::from(p.rows, p.cols, p.data);
  n.requires_grad = true;
  n.param = &p;
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b, bool transpose_b) {
  const Tensor& A = node(a).value;
  const Tensor& B = node(b).value;
  const std::size_t k = A.cols;
  const std::size_t m = transpose_b ? B.rows : B.cols;
  if ((transpose_b ? B.cols : B.rows) != k) shape_error("matmul", A, B);
  Tensor C(A.rows, m);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      if (transpose_b) {
        for (std::size_t t = 0; t < k; ++t) acc += A.data[i * k + t] * B.data[j * k + t];
      } else {
        for (std::size_t t = 0; t < k; ++t) acc += A.data[i * k + t] * B.data[t * m + j];
      }
      C.data[i * m + j] = acc;
    }
  Node n;
  n.op = OpKind::MatMul;
  n.value = std::move(C);
  n.inputs = {a.id, b.id};
  n.transpose_b = transpose_b;
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Tensor& A = node(a).value;
  const Tensor& B = node(b).value;
  const bool same = A.rows == B.rows && A.cols == B.cols;
  if (!same && !(B.rows == 1 && B.cols == A.cols)) shape_error("add", A, B);
  Tensor C = Tensor::from(A.rows, A.cols, A.data);
  for (std::size_t i = 0; i < C.size(); ++i) C.data[i] += same ? B.data[i] : B.data[i % A.cols];
  Node n;
  n.op = OpKind::Add;
  n.value = std::move(C);
  n.inputs = {a.id, b.id};
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const Tensor& A = node(a).value;
  const Tensor& B = node(b).value;
  if (A.rows != B.rows || A.cols != B.cols) shape_error("mul", A, B);
  Tensor C = Tensor::from(A.rows, A.cols, A.data);
  for (std::size_t i = 0; i < C.size(); ++i) C.data[i] *= B.data[i];
  Node n;
  n.op = OpKind::Mul;
  n.value = std::move(C);
  n.inputs = {a.id, b.id};
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

Var Tape::mean_rows(Var a) {
  const Tensor& A = node(a).value;
  if (A.rows == 0) throw Error(ErrorCode::ShapeMismatch, "mean_rows of an empty tensor");
  Tensor C(1, A.cols);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < A.cols; ++j) C.data[j] += A.data[i * A.cols + j];
  for (double& v : C.data) v /= static_cast<double>(A.rows);
  Node n;
  n.op = OpKind::MeanRows;
  n.value = std::move(C);
  n.inputs = {a.id};
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Var Tape::mean_all(Var a) {
  const Tensor& A = node(a).value;
  if (A.size() == 0) throw Error(ErrorCode::ShapeMismatch, "mean of an empty tensor");
  double acc = 0.0;
  for (double v : A.data) acc += v;
  Node n;
  n.op = OpKind::MeanAll;
  n.value = Tensor(1, 1, acc / static_cast<double>(A.size()));
  n.inputs = {a.id};
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Var Tape::softmax_rows(Var a) {
  const Tensor& A = node(a).value;
  Tensor C(A.rows, A.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    const double* row = &A.data[i * A.cols];
    const double mx = *std::max_element(row, row + A.cols);
    double z = 0.0;
    for (std::size_t j = 0; j < A.cols; ++j) z += (C.data[i * A.cols + j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < A.cols; ++j) C.data[i * A.cols + j] /= z;
  }
  Node n;
  n.op = OpKind::SoftmaxRows;
  n.value = std::move(C);
  n.inputs = {a.id};
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

namespace {

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

}  // namespace

Var Tape::sigmoid(Var a) {
  const Tensor& A = node(a).value;
  Tensor C(A.rows, A.cols);
  for (std::size_t i = 0; i < A.size(); ++i) C.data[i] = stable_sigmoid(A.data[i]);
  Node n;
  n.op = OpKind::Sigmoid;
  n.value = std::move(C);
  n.inputs = {a.id};
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Var Tape::log_sigmoid(Var a) {
  const Tensor& A = node(a).value;
  Tensor C(A.rows, A.cols);
  for (std::size_t i = 0; i < A.size(); ++i) C.data[i] = stable_log_sigmoid(A.data[i]);
  Node n;
  n.op = OpKind::LogSigmoid;
  n.value = std::move(C);
  n.inputs = {a.id};
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  const Tensor& A = node(a).value;
  Tensor C(A.rows, A.cols);
  for (std::size_t i = 0; i < A.size(); ++i) C.data[i] = A.data[i] > 0.0 ? A.data[i] : 0.0;
  Node n;
  n.op = OpKind::Relu;
  n.value = std::move(C);
  n.inputs = {a.id};
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Var Tape::scale(Var a, double alpha) {
  const Tensor& A = node(a).value;
  Tensor C = Tensor::from(A.rows, A.cols, A.data);
  for (double& v : C.data) v *= alpha;
  Node n;
  n.op = OpKind::Scale;
  n.value = std::move(C);
  n.inputs = {a.id};
  n.alpha = alpha;
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Var Tape::row_select(Var a, std::size_t row) {
  const Tensor& A = node(a).value;
  if (row >= A.rows) {
    throw Error(ErrorCode::ShapeMismatch, "row " + std::to_string(row) + " of " + dims(A));
  }
  Tensor C(1, A.cols);
  std::copy_n(A.data.begin() + static_cast<std::ptrdiff_t>(row * A.cols), A.cols, C.data.begin());
  Node n;
  n.op = OpKind::RowSelect;
  n.value = std::move(C);
  n.inputs = {a.id};
  n.index = row;
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(ErrorCode::ShapeMismatch, "concat_rows of nothing");
  const std::size_t cols = node(parts[0]).value.cols;
  Node n;
  n.op = OpKind::ConcatRows;
  std::size_t rows = 0;
  for (Var p : parts) {
    const Tensor& P = node(p).value;
    if (P.cols != cols) shape_error("concat_rows", node(parts[0]).value, P);
    rows += P.rows;
    n.inputs.push_back(p.id);
    n.requires_grad = n.requires_grad || node(p).requires_grad;
  }
  Tensor C(rows, cols);
  std::size_t off = 0;
  for (Var p : parts) {
    const Tensor& P = node(p).value;
    std::copy(P.data.begin(), P.data.end(), C.data.begin() + static_cast<std::ptrdiff_t>(off));
    off += P.size();
  }
  n.value = std::move(C);
  return push(std::move(n));
}

double Tape::scalar(Var v) const {
  const Tensor& t = node(v).value;
  if (t.size() != 1) throw Error(ErrorCode::NonScalarLoss, "expected a scalar, got " + dims(t));
  return t.data[0];
}

void Tape::backward(Var loss) {
  const Node& root = node(loss);
  if (root.value.size() != 1) {
    throw Error(ErrorCode::NonScalarLoss, "loss has shape " + dims(root.value));
  }
  for (auto& n : nodes_) n.grad.assign(n.value.size(), 0.0);
  nodes_[loss.id].grad[0] = 1.0;

  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad) continue;
    const std::vector<double>& g = n.grad;
    const Tensor& y = n.value;
    auto grad_of = [&](std::size_t k) -> std::vector<double>* {
      Node& in = nodes_[n.inputs[k]];
      return in.requires_grad ? &in.grad : nullptr;
    };

    switch (n.op) {
      case OpKind::Leaf:
        break;
      case OpKind::Param: {
        Tensor& p = *n.param;
        if (p.grad.size() != p.data.size()) p.grad.assign(p.data.size(), 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) p.grad[i] += g[i];
        break;
      }
      case OpKind::MatMul: {
        const Tensor& A = nodes_[n.inputs[0]].value;
        const Tensor& B = nodes_[n.inputs[1]].value;
        const std::size_t k = A.cols, m = y.cols;
        if (auto* ga = grad_of(0)) {
          for (std::size_t i = 0; i < A.rows; ++i)
            for (std::size_t t = 0; t < k; ++t) {
              double acc = 0.0;
              for (std::size_t j = 0; j < m; ++j)
                acc += g[i * m + j] * (n.transpose_b ? B.data[j * k + t] : B.data[t * m + j]);
              (*ga)[i * k + t] += acc;
            }
        }
        if (auto* gb = grad_of(1)) {
          for (std::size_t t = 0; t < k; ++t)
            for (std::size_t j = 0; j < m; ++j) {
              double acc = 0.0;
              for (std::size_t i = 0; i < A.rows; ++i) acc += A.data[i * k + t] * g[i * m + j];
              (*gb)[n.transpose_b ? j * k + t : t * m + j] += acc;
            }
        }
        break;
      }
      case OpKind::Add: {
        if (auto* ga = grad_of(0))
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
        if (auto* gb = grad_of(1)) {
          const bool same = gb->size() == g.size();
          for (std::size_t i = 0; i < g.size(); ++i) (*gb)[same ? i : i % y.cols] += g[i];
        }
        break;
      }
      case OpKind::Mul: {
        const Tensor& A = nodes_[n.inputs[0]].value;
        const Tensor& B = nodes_[n.inputs[1]].value;
        if (auto* ga = grad_of(0))
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * B.data[i];
        if (auto* gb = grad_of(1))
          for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * A.data[i];
        break;
      }
      case OpKind::MeanRows: {
        auto* ga = grad_of(0);
        const Tensor& A = nodes_[n.inputs[0]].value;
        const double inv = 1.0 / static_cast<double>(A.rows);
        for (std::size_t i = 0; i < A.rows; ++i)
          for (std::size_t j = 0; j < A.cols; ++j) (*ga)[i * A.cols + j] += g[j] * inv;
        break;
      }
      case OpKind::MeanAll: {
        auto* ga = grad_of(0);
        const double share = g[0] / static_cast<double>(ga->size());
        for (double& v : *ga) v += share;
        break;
      }
      case OpKind::SoftmaxRows: {
        auto* ga = grad_of(0);
        for (std::size_t i = 0; i < y.rows; ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < y.cols; ++j) dot += g[i * y.cols + j] * y.data[i * y.cols + j];
          for (std::size_t j = 0; j < y.cols; ++j)
            (*ga)[i * y.cols + j] += y.data[i * y.cols + j] * (g[i * y.cols + j] - dot);
        }
        break;
      }
      case OpKind::Sigmoid: {
        auto* ga = grad_of(0);
        for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * y.data[i] * (1.0 - y.data[i]);
        break;
      }
      case OpKind::LogSigmoid: {
        auto* ga = grad_of(0);
        const Tensor& A = nodes_[n.inputs[0]].value;
        for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * stable_sigmoid(-A.data[i]);
        break;
      }
      case OpKind::Relu: {
        auto* ga = grad_of(0);
        const Tensor& A = nodes_[n.inputs[0]].value;
        for (std::size_t i = 0; i < g.size(); ++i)
          if (A.data[i] > 0.0) (*ga)[i] += g[i];
        break;
      }
      case OpKind::Scale: {
        auto* ga = grad_of(0);
        for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * n.alpha;
        break;
      }
      case OpKind::RowSelect: {
        auto* ga = grad_of(0);
        for (std::size_t j = 0; j < y.cols; ++j) (*ga)[n.index * y.cols + j] += g[j];
        break;
      }
      case OpKind::ConcatRows: {
        std::size_t off = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          const std::size_t len = nodes_[n.inputs[k]].value.size();
          if (auto* gk = grad_of(k))
            for (std::size_t i = 0; i < len; ++i) (*gk)[i] += g[off + i];
          off += len;
        }
        break;
      }
    }
  }
}

double check_gradients(const std::function<Var(Tape&)>& build, const std::vector<Tensor*>& params,
                       double epsilon) {
  for (Tensor* p : params) p->zero_grad();
  {
    Tape tape;
    const Var loss = build(tape);
    tape.backward(loss);
  }
  auto eval = [&] {
    Tape tape;
    return tape.scalar(build(tape));
  };
  double worst = 0.0;
  for (Tensor* p : params) {
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double orig = p->data[i];
      p->data[i] = orig + epsilon;
      const double up = eval();
      p->data[i] = orig - epsilon;
      const double down = eval();
      p->data[i] = orig;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double analytic = p->grad[i];
      const double err =
          std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace tricd
