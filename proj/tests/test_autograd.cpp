#include <cmath>
#include <functional>

#include "doctest.h"
#include "tricd/autograd.hpp"
#include "tricd/error.hpp"
#include "tricd/rng.hpp"

using namespace tricd;

namespace {

Tensor random_tensor(Rng& rng, std::size_t r, std::size_t c, bool grad = true) {
  Tensor t(r, c, 0.0, grad);
  for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
  return t;
}

// Collapses any node to a scalar through a fixed random weighting so every
// output coordinate contributes to the gradient.
Var weighted_sum(Tape& tape, Var v, std::uint64_t seed) {
  const Tensor& val = tape.value(v);
  Rng rng(seed);
  Tensor w(val.rows, val.cols);
  for (double& x : w.data) x = rng.uniform(-1.0, 1.0);
  return tape.scale(tape.mean_all(tape.mul(v, tape.constant(w))), static_cast<double>(val.size()));
}

}  // namespace

TEST_CASE("forward values of basic ops") {
  Tape tape;
  CHECK(tape.scalar(tape.sigmoid(tape.constant(1, 1, {0.0}))) == 0.5);
  const auto sm = tape.value(tape.softmax_rows(tape.constant(1, 8, std::vector<double>(8, 3.0))));
  for (double v : sm.data) CHECK(v == doctest::Approx(0.125).epsilon(1e-15));
  const auto r = tape.value(tape.relu(tape.constant(1, 3, {-1.0, 0.0, 2.0})));
  CHECK(r.data == std::vector<double>{0.0, 0.0, 2.0});
  CHECK(tape.scalar(tape.log_sigmoid(tape.constant(1, 1, {0.0}))) == doctest::Approx(std::log(0.5)));
  CHECK(tape.scalar(tape.log_sigmoid(tape.constant(1, 1, {-800.0}))) == doctest::Approx(-800.0));
}

TEST_CASE("matmul against a triple loop") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_tensor(rng, 2, 3, false);
    const auto b = random_tensor(rng, 3, 2, false);
    Tape tape;
    const auto c = tape.value(tape.matmul(tape.constant(a), tape.constant(b)));
    const auto bt = tape.value(tape.matmul(tape.constant(a), tape.constant(Tensor::from(2, 3, {
      b.at(0, 0), b.at(1, 0), b.at(2, 0), b.at(0, 1), b.at(1, 1), b.at(2, 1)})), true));
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < 3; ++k) acc += a.at(i, k) * b.at(k, j);
        CHECK(std::abs(c.at(i, j) - acc) <= 1e-6);
        CHECK(std::abs(bt.at(i, j) - acc) <= 1e-12);
      }
  }
}

TEST_CASE("shape errors") {
  Tape tape;
  const Var a = tape.constant(Tensor(2, 3));
  const Var b = tape.constant(Tensor(2, 2));
  CHECK_THROWS_AS(tape.matmul(a, b), Error);
  CHECK_THROWS_AS(tape.add(a, b), Error);
  CHECK_THROWS_AS(tape.mul(a, b), Error);
  CHECK_THROWS_AS(tape.row_select(a, 2), Error);
  CHECK_THROWS_AS(tape.concat_rows({a, b}), Error);
  try {
    tape.backward(a);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonScalarLoss);
  }
}

TEST_CASE("linear and sigmoid closed forms") {
  Rng rng(2);
  Tensor w = random_tensor(rng, 1, 5);
  const Tensor x = random_tensor(rng, 1, 5, false);
  {
    Tape tape;
    const Var loss = tape.scale(tape.mean_all(tape.mul(tape.param(w), tape.constant(x))), 5.0);
    tape.backward(loss);
    for (std::size_t i = 0; i < 5; ++i) CHECK(w.grad[i] == doctest::Approx(x.data[i]).epsilon(1e-15));
  }
  Tensor s(1, 1, 0.37, true);
  const double c = 2.5;
  Tape tape;
  tape.backward(tape.scale(tape.sigmoid(tape.param(s)), c));
  const double sig = 1.0 / (1.0 + std::exp(-0.37));
  CHECK(std::abs(s.grad[0] - c * sig * (1 - sig)) <= 1e-8);
}

TEST_CASE("gradient accumulation is additive") {
  Rng rng(3);
  Tensor w = random_tensor(rng, 3, 4);
  const Tensor x = random_tensor(rng, 4, 2, false);
  auto run = [&] {
    Tape tape;
    tape.backward(weighted_sum(tape, tape.softmax_rows(tape.matmul(tape.param(w), tape.constant(x))), 9));
  };
  run();
  const auto once = w.grad;
  run();
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(w.grad[i] == 2.0 * once[i]);
}

TEST_CASE("backward leaves forward values alone") {
  Rng rng(4);
  Tensor w = random_tensor(rng, 2, 2);
  Tape tape;
  const Var y = tape.sigmoid(tape.matmul(tape.param(w), tape.param(w)));
  const Tensor before = tape.value(y);
  tape.backward(weighted_sum(tape, y, 1));
  CHECK(tape.value(y).data == before.data);
  Tape again;
  CHECK(again.value(again.sigmoid(again.matmul(again.param(w), again.param(w)))).data == before.data);
}

TEST_CASE("check_gradients on simple losses") {
  Rng rng(5);
  Tensor w = random_tensor(rng, 1, 6);
  const double quad = check_gradients(
      [&](Tape& t) {
        const Var p = t.param(w);
        return t.scale(t.mean_all(t.mul(p, p)), 0.5 * 6.0);
      },
      {&w}, 1e-4);
  CHECK(quad <= 1e-6);

  const double constant = check_gradients([&](Tape& t) {
    t.param(w);
    return t.constant(1, 1, {3.0});
  }, {&w}, 1e-4);
  CHECK(constant == 0.0);
}

TEST_CASE("every op passes finite differences") {
  Rng rng(2025);
  using Builder = std::function<Var(Tape&, Var, Var)>;
  struct Case {
    const char* name;
    std::size_t ar, ac, br, bc;
    Builder f;
  };
  const std::vector<Case> cases = {
      {"matmul", 3, 4, 4, 2, [](Tape& t, Var a, Var b) { return t.matmul(a, b); }},
      {"matmul_t", 3, 4, 5, 4, [](Tape& t, Var a, Var b) { return t.matmul(a, b, true); }},
      {"add", 3, 4, 3, 4, [](Tape& t, Var a, Var b) { return t.add(a, b); }},
      {"add_row", 3, 4, 1, 4, [](Tape& t, Var a, Var b) { return t.add(a, b); }},
      {"mul", 2, 5, 2, 5, [](Tape& t, Var a, Var b) { return t.mul(a, b); }},
      {"mean_rows", 4, 3, 1, 1, [](Tape& t, Var a, Var) { return t.mean_rows(a); }},
      {"mean_all", 4, 3, 1, 1, [](Tape& t, Var a, Var) { return t.mean_all(a); }},
      {"softmax", 3, 6, 1, 1, [](Tape& t, Var a, Var) { return t.softmax_rows(t.scale(a, 3.0)); }},
      {"sigmoid", 3, 3, 1, 1, [](Tape& t, Var a, Var) { return t.sigmoid(t.scale(a, 2.0)); }},
      {"log_sigmoid", 3, 3, 1, 1, [](Tape& t, Var a, Var) { return t.log_sigmoid(t.scale(a, 4.0)); }},
      {"relu", 4, 4, 1, 1, [](Tape& t, Var a, Var) { return t.relu(a); }},
      {"scale", 2, 2, 1, 1, [](Tape& t, Var a, Var) { return t.scale(a, -1.7); }},
      {"row_select", 4, 3, 1, 1, [](Tape& t, Var a, Var) { return t.row_select(a, 2); }},
      {"concat", 2, 3, 4, 3, [](Tape& t, Var a, Var b) { return t.concat_rows({a, b, a}); }},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    Tensor a = random_tensor(rng, c.ar, c.ac);
    Tensor b = random_tensor(rng, c.br, c.bc);
    // Keep relu inputs away from the kink.
    for (double& v : a.data)
      if (std::abs(v) < 0.05) v += 0.1;
    const double err = check_gradients(
        [&](Tape& t) { return weighted_sum(t, c.f(t, t.param(a), t.param(b)), 77); }, {&a, &b}, 1e-4);
    CHECK(err <= 1e-4);
  }
}
