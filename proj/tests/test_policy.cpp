#include <algorithm>
#include <cmath>
#include <ostream>

#include "doctest.h"
#include "tricd/error.hpp"
#include "tricd/policy.hpp"

using namespace tricd;

namespace {

const PolicyDims kSmall{12, 8, 6, 2};

Tensor random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Tensor t(r, c);
  for (double& v : t.data) v = rng.uniform(-scale, scale);
  return t;
}

// Biases are zero at init; give them values so their gradients are exercised.
void jitter_biases(PolicyParams& p, Rng& rng) {
  for (auto& [name, t] : p.named())
    if (name.ends_with(".bias") || name == "sge.gate.b1" || name == "sge.gate.b2")
      for (double& v : t->data) v = rng.uniform(-0.3, 0.3);
}

// Brute-force selection: sort a copy, walk the cumulative sum.
ToolSet oracle_select(const std::array<double, 8>& probs, double gamma) {
  std::vector<std::pair<double, std::size_t>> v;
  for (std::size_t i = 0; i < 8; ++i) v.emplace_back(-probs[i], i);
  std::sort(v.begin(), v.end());
  ToolSet s;
  double cum = 0.0;
  for (auto [neg, i] : v) {
    s.set(i);
    cum += -neg;
    if (cum >= gamma) break;
  }
  return s;
}

}  // namespace

TEST_CASE("init params") {
  const auto a = init_params(7, kSmall), b = init_params(7, kSmall), c = init_params(8, kSmall);
  auto na = a.named(), nb = b.named(), nc = c.named();
  REQUIRE(na.size() == 20);
  bool differs = false;
  for (std::size_t i = 0; i < na.size(); ++i) {
    CHECK(na[i].first == nb[i].first);
    CHECK(na[i].second->data == nb[i].second->data);
    differs |= na[i].second->data != nc[i].second->data;
  }
  CHECK(differs);
  for (const auto& [name, t] : na) {
    const bool bias = name == "apc.proj_vq.bias" || name == "apc.proj_tool.bias" || name == "apc.score.bias" ||
                      name == "sge.gate.b1" || name == "sge.gate.b2";
    if (bias) {
      for (double v : t->data) CHECK(v == 0.0);
    } else {
      const double bound = std::sqrt(6.0 / static_cast<double>(t->rows + t->cols));
      for (double v : t->data) {
        CHECK(v > -bound);
        CHECK(v < bound);
      }
    }
  }
  CHECK(a.a_wq.rows == 8);
  CHECK(a.query_tokens.rows == 2);
  CHECK(a.gate_w1.rows == 12);
  CHECK(a.gate_w1.cols == 6);
  CHECK_THROWS_AS(init_params(1, PolicyDims{0, 8, 8, 1}), Error);
}

TEST_CASE("apc scoring symmetry and determinism") {
  Rng rng(3);
  auto p = init_params(11, kSmall);
  const Tensor hidden = random_matrix(rng, 5, 12);
  Tensor desc = random_matrix(rng, 8, 12);
  for (std::size_t c = 0; c < 12; ++c) desc.at(5, c) = desc.at(2, c);
  for (std::size_t c = 0; c < 8; ++c) p.id_emb.at(5, c) = p.id_emb.at(2, c);
  const auto l = apc_score(hidden, desc, p);
  CHECK(l[5] == l[2]);
  CHECK(l[0] != l[1]);
  CHECK(apc_score(hidden, desc, p) == l);

  Tensor wrong(7, 12);
  CHECK_THROWS_AS(apc_score(hidden, wrong, p), Error);
}

TEST_CASE("apc logits depend on the hidden states") {
  Rng rng(4);
  const auto p = init_params(12, kSmall);
  const Tensor desc = random_matrix(rng, 8, 12);
  const auto a = apc_score(random_matrix(rng, 5, 12), desc, p);
  const auto b = apc_score(random_matrix(rng, 5, 12), desc, p);
  CHECK(a != b);
}

TEST_CASE("zero value matrices give the scoring bias") {
  const PolicyDims dims{4, 4, 3, 1};
  auto p = init_params(5, dims);
  for (Tensor* t : {&p.a_wv, &p.b_wv, &p.query_tokens}) std::fill(t->data.begin(), t->data.end(), 0.0);
  p.score_b.data[0] = 0.625;
  Rng rng(6);
  const auto l = apc_score(random_matrix(rng, 3, 4), random_matrix(rng, 8, 4), p);
  for (double v : l) CHECK(v == 0.625);

  // With nonzero query tokens every tool still receives the same logit.
  auto q = init_params(5, dims);
  std::fill(q.a_wv.data.begin(), q.a_wv.data.end(), 0.0);
  std::fill(q.b_wv.data.begin(), q.b_wv.data.end(), 0.0);
  const auto m = apc_score(random_matrix(rng, 3, 4), random_matrix(rng, 8, 4), q);
  for (double v : m) CHECK(v == m[0]);
}

TEST_CASE("inference selection examples") {
  const std::array<double, 8> probs{0.5, 0.2, 0.1, 0.05, 0.05, 0.04, 0.03, 0.03};
  ToolLogits l{};
  for (std::size_t i = 0; i < 8; ++i) l[i] = std::log(probs[i]);
  const auto d = apc_select_inference(l, 0.4);
  CHECK(d.selected_mask.count() == 1);
  CHECK(d.selected_mask.test(0));
  double sum = 0.0;
  for (double p : d.tool_probs) sum += p;
  CHECK(std::abs(sum - 1.0) <= 1e-12);

  const auto u = apc_select_inference(ToolLogits{}, 0.4);
  for (double p : u.tool_probs) CHECK(p == 0.125);
  CHECK(u.selected_mask == ToolSet(0b00001111));
  CHECK(apc_select_inference(ToolLogits{}, 1.0).selected_mask.all());
  CHECK(apc_select_inference(l, 1.0).selected_mask.all());

  for (double g : {0.0, -0.1, 1.5}) {
    try {
      apc_select_inference(l, g);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadGamma);
    }
  }
}

TEST_CASE("inference selection properties") {
  Rng rng(2025);
  for (int trial = 0; trial < 2000; ++trial) {
    ToolLogits l{};
    for (double& x : l) x = rng.uniform(-4, 4);
    if (trial % 7 == 0) l[3] = l[5];  // exercise ties
    const double gamma = rng.uniform(0.01, 1.0);
    const auto d = apc_select_inference(l, gamma);
    CHECK(d.selected_mask == oracle_select(d.tool_probs, gamma));
    double mass = 0.0, smallest = 1.0;
    for (std::size_t i = 0; i < 8; ++i)
      if (d.selected_mask.test(i)) {
        mass += d.tool_probs[i];
        smallest = std::min(smallest, d.tool_probs[i]);
      }
    CHECK(mass >= gamma - 1e-12);
    CHECK(mass - smallest < gamma);

    ToolLogits shifted = l;
    for (double& x : shifted) x += 37.5;
    CHECK(apc_select_inference(shifted, gamma).selected_mask == d.selected_mask);
  }
}

TEST_CASE("bernoulli log-probabilities") {
  Tape tape;
  const Var zero = tape.constant(Tensor(8, 1));
  CHECK(tape.scalar(bernoulli_log_prob(tape, zero, ToolSet(0b10110001))) ==
        doctest::Approx(8 * std::log(0.5)).epsilon(1e-12));
  CHECK(8 * std::log(0.5) == doctest::Approx(-5.545).epsilon(1e-3));

  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor l(8, 1);
    for (double& v : l.data) v = rng.uniform(-6, 6);
    const Var lv = tape.constant(l);
    double total = 0.0;
    for (unsigned m = 0; m < 256; ++m) total += std::exp(tape.scalar(bernoulli_log_prob(tape, lv, ToolSet(m))));
    CHECK(std::abs(total - 1.0) <= 1e-6);
  }
}

TEST_CASE("training-mode tool sampling") {
  Tape tape;
  Tensor sat(8, 1, -20.0);
  sat.data[3] = 20.0;
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto d = apc_sample_training(tape, tape.constant(sat), rng);
    CHECK(d.selected_mask == ToolSet(1u << 3));
    CHECK(d.log_prob == doctest::Approx(0.0).epsilon(1e-6));
  }
  // All tools near-impossible: the empty draw falls back to the argmax tool.
  Tensor low(8, 1, -30.0);
  low.data[6] = -25.0;
  const auto fb = apc_sample_training(tape, tape.constant(low), rng);
  CHECK(fb.selected_mask == ToolSet(1u << 6));

  Tensor mid(8, 1);
  for (double& v : mid.data) v = rng.uniform(-2, 2);
  for (int i = 0; i < 100; ++i) {
    const auto d = apc_sample_training(tape, tape.constant(mid), rng);
    CHECK(d.selected_mask.any());
    for (double p : d.tool_probs) {
      CHECK(p > 0.0);
      CHECK(p < 1.0);
    }
  }
}

TEST_CASE("saliency gate") {
  auto p = init_params(3, kSmall);
  Rng rng(4);
  const Tensor hidden = random_matrix(rng, 6, 12);
  std::fill(p.gate_w2.data.begin(), p.gate_w2.data.end(), 0.0);
  CHECK(sge_mu(hidden, p) == 0.5);

  const auto q = init_params(3, kSmall);
  Tape t1, t2;
  Rng r1(1), r2(2);
  const auto a = sge_gate(t1, bind_constants(t1, q), t1.constant(hidden), PolicyMode::Inference, r1);
  const auto b = sge_gate(t2, bind_constants(t2, q), t2.constant(hidden), PolicyMode::Inference, r2);
  CHECK(a.mu == b.mu);
  CHECK(a.beta == a.mu);
  CHECK(a.mu > 0.0);
  CHECK(a.mu < 1.0);

  Tape t3;
  const Var mu = t3.constant(1, 1, {0.3});
  CHECK(t3.scalar(normal_log_prob(t3, mu, 0.3, 0.1)) == doctest::Approx(-std::log(0.1 * std::sqrt(2 * M_PI))));
  CHECK(t3.scalar(normal_log_prob(t3, mu, 0.3, 0.1)) == doctest::Approx(1.3836).epsilon(1e-4));

  for (int i = 0; i < 200; ++i) {
    Tape t;
    const auto d = sge_gate(t, bind_constants(t, q), t.constant(hidden), PolicyMode::Training, rng, 0.5);
    CHECK(d.beta >= 0.0);
    CHECK(d.beta <= 1.0);
    CHECK(d.beta == std::clamp(d.beta_raw, 0.0, 1.0));
    const double expect = -0.5 * std::pow((d.beta_raw - d.mu) / 0.5, 2) - std::log(0.5 * std::sqrt(2 * M_PI));
    CHECK(d.log_prob == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("joint log-probability gradients match finite differences") {
  Rng rng(2025);
  auto p = init_params(2025, PolicyDims{16, 16, 8, 4});
  jitter_biases(p, rng);
  const Tensor hidden = random_matrix(rng, 6, 16);
  const Tensor desc = random_matrix(rng, 8, 16);
  const ToolSet mask(0b01001101);
  const double beta_raw = 0.62;
  std::vector<Tensor*> params;
  for (auto& [name, t] : p.named()) params.push_back(t);
  const double err = check_gradients(
      [&](Tape& tape) {
        const PolicyVars v = bind_params(tape, p);
        const Var h = tape.constant(hidden);
        const Var logits = apc_score_graph(tape, v, h, tape.constant(desc), p.dims.d);
        const Var lp_apc = bernoulli_log_prob(tape, logits, mask);
        const Var lp_sge = normal_log_prob(tape, sge_mu_graph(tape, v, h), beta_raw, 0.1);
        return tape.add(lp_apc, lp_sge);
      },
      params, 1e-4);
  CHECK(err <= 1e-4);
}
