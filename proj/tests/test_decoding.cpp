#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "doctest.h"
#include "test_util.hpp"
#include "tricd/answer.hpp"
#include "tricd/error.hpp"
#include "tricd/synthetic.hpp"
#include "tricd/toy_backbone.hpp"
#include "tricd/tricd.hpp"

using namespace tricd;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 5.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

double row_norm(const Tensor& t, std::size_t r) {
  double acc = 0.0;
  for (std::size_t c = 0; c < t.cols; ++c) acc += t.at(r, c) * t.at(r, c);
  return std::sqrt(acc);
}

// Independent oracle: the affine combination in double-double arithmetic, rounded
// once. Exact to well below one ulp for these magnitudes.
struct DD {
  double hi, lo;
};
DD two_sum(double a, double b) {
  const double s = a + b, bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}
DD dd_add(DD a, DD b) {
  const DD s = two_sum(a.hi, b.hi);
  return two_sum(s.hi, s.lo + a.lo + b.lo);
}
DD dd_mul(double a, DD b) {
  const double p = a * b.hi;
  return two_sum(p, std::fma(a, b.hi, -p) + a * b.lo);
}
double oracle_calibrate(double o, double p, double n, double a1, double a2) {
  const DD dp = two_sum(p, -o), dn = two_sum(o, -n);
  const DD r = dd_add(dd_add(DD{o, 0.0}, dd_mul(a1, dp)), dd_mul(a2, dn));
  return r.hi + r.lo;
}

double ulp(double x) { return std::nextafter(std::abs(x), std::numeric_limits<double>::infinity()) - std::abs(x); }

const ToyBackbone& backbone() {
  static const ToyBackbone b(2025);
  return b;
}

FrameSequence scene_video(std::size_t index) { return render_scene(random_scene(2025, index)); }

}  // namespace

TEST_CASE("calibration examples") {
  const LogitTriple t{{0.5, 0.5}, {1.0, 0.0}, {0.0, 1.0}};
  const auto q = calibrate(t, 0.8, 0.4);
  const double e0 = oracle_calibrate(0.5, 1.0, 0.0, 0.8, 0.4), e1 = oracle_calibrate(0.5, 0.0, 1.0, 0.8, 0.4);
  CHECK(std::abs(q[0] - e0) <= ulp(e0));
  CHECK(std::abs(q[1] - e1) <= ulp(e1));
  CHECK(e0 == 1.1);
  CHECK(e1 == -0.10000000000000003);
  // Decimal hand values; 0.8 and 0.4 are inexact in binary so the second
  // component lands a few ulp from the literal -0.1.
  CHECK(q[0] == doctest::Approx(1.1).epsilon(1e-15));
  CHECK(q[1] == doctest::Approx(-0.1).epsilon(1e-15));

  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto v = random_vec(rng, 16);
    CHECK(calibrate({v, v, v}, rng.uniform(-3, 3), rng.uniform(-3, 3)) == v);
    const LogitTriple r{random_vec(rng, 16), random_vec(rng, 16), random_vec(rng, 16)};
    CHECK(calibrate(r, 0.0, 0.0) == r.q_o);
    const double a1 = rng.uniform(0, 2), a2 = rng.uniform(0, 2);
    const auto qr = calibrate(r, a1, a2);
    for (std::size_t k = 0; k < 16; ++k) {
      const double e = oracle_calibrate(r.q_o[k], r.q_p[k], r.q_n[k], a1, a2);
      const double mag = std::abs(r.q_o[k]) + a1 * (std::abs(r.q_p[k]) + std::abs(r.q_o[k])) +
                         a2 * (std::abs(r.q_o[k]) + std::abs(r.q_n[k]));
      CHECK(std::abs(qr[k] - e) <= 4 * std::numeric_limits<double>::epsilon() * mag);
    }
  }
}

TEST_CASE("calibration shift invariance and linearity") {
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const LogitTriple t{random_vec(rng, 64), random_vec(rng, 64), random_vec(rng, 64)};
    const double a1 = rng.uniform(0, 2), a2 = rng.uniform(0, 2), c = rng.uniform(-50, 50);
    LogitTriple s = t;
    for (auto* v : {&s.q_o, &s.q_p, &s.q_n})
      for (double& x : *v) x += c;
    const auto q = calibrate(t, a1, a2), qs = calibrate(s, a1, a2);
    for (std::size_t k = 0; k < 64; ++k) CHECK(std::abs(qs[k] - q[k] - c) <= 1e-9);
    CHECK(greedy_argmax(q) == greedy_argmax(qs));

    // Linear in each stream: f(x + y) = f(x) + f(y) - f(0) for the same alphas.
    const LogitTriple u{random_vec(rng, 64), random_vec(rng, 64), random_vec(rng, 64)};
    LogitTriple sum = t;
    for (std::size_t k = 0; k < 64; ++k) {
      sum.q_o[k] += u.q_o[k];
      sum.q_p[k] += u.q_p[k];
      sum.q_n[k] += u.q_n[k];
    }
    const auto qu = calibrate(u, a1, a2), qsum = calibrate(sum, a1, a2);
    for (std::size_t k = 0; k < 64; ++k) CHECK(std::abs(qsum[k] - q[k] - qu[k]) <= 1e-9);
  }
}

TEST_CASE("greedy argmax ties go to the lowest id") {
  CHECK(greedy_argmax({1.0, 3.0, 3.0, 2.0}) == 1);
  CHECK(greedy_argmax({-1.0}) == 0);
  CHECK(greedy_argmax(std::vector<double>(64, 0.0)) == 0);
}

TEST_CASE("token reweighting") {
  Rng rng(3);
  VisionTokens tok;
  tok.frames = 2;
  tok.grid_h = 2;
  tok.grid_w = 3;
  tok.embeddings = Tensor(12, 5);
  for (double& v : tok.embeddings.data) v = rng.uniform(-1, 1);
  std::vector<Grid2D> ones(2, Grid2D(2, 3, 1.0)), zeros(2, Grid2D(2, 3, 0.0));
  CHECK(reweight_tokens(tok, ones).embeddings.data == tok.embeddings.data);
  for (double v : reweight_tokens(tok, zeros).embeddings.data) CHECK(v == 0.0);

  auto half = ones;
  half[1].at(0, 2) = 0.5;  // frame 1, row 0, col 2 -> token 6 + 2
  const auto r = reweight_tokens(tok, half);
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t c = 0; c < 5; ++c)
      CHECK(r.embeddings.at(i, c) == (i == 8 ? 0.5 : 1.0) * tok.embeddings.at(i, c));

  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Grid2D> w(2, Grid2D(2, 3));
    for (auto& g : w)
      for (double& v : g.values) v = rng.uniform();
    const auto rw = reweight_tokens(tok, w);
    for (std::size_t i = 0; i < 12; ++i) CHECK(row_norm(rw.embeddings, i) <= row_norm(tok.embeddings, i));
  }

  CHECK_THROWS_AS(reweight_tokens(tok, std::vector<Grid2D>(3, Grid2D(2, 3, 1.0))), Error);
  CHECK_THROWS_AS(reweight_tokens(tok, std::vector<Grid2D>(2, Grid2D(3, 2, 1.0))), Error);
}

TEST_CASE("vision embedding") {
  const auto& b = backbone();
  const auto v = b.embed_video(FrameSequence::filled(3, 32, 32, 3, 0.3f));
  CHECK(v.frames == 3);
  CHECK(v.grid_h == 2);
  CHECK(v.grid_w == 2);
  CHECK(v.embeddings.rows == 12);
  CHECK(v.embeddings.cols == 64);

  Rng rng(4);
  const auto seq = testutil::random_sequence(rng, 2, 32, 48, 3);
  CHECK(b.embed_video(seq).embeddings.data == b.embed_video(seq).embeddings.data);
  CHECK(ToyBackbone(2025).embed_video(seq).embeddings.data == b.embed_video(seq).embeddings.data);
  CHECK(ToyBackbone(2026).embed_video(seq).embeddings.data != b.embed_video(seq).embeddings.data);

  // All-zero video: rows differ only by position terms, so equal positions match.
  const auto z = b.embed_video(FrameSequence::filled(2, 32, 32, 1, 0.0f));
  const auto z2 = b.embed_video(FrameSequence::filled(2, 32, 32, 1, 0.0f));
  CHECK(z.embeddings.data == z2.embeddings.data);

  try {
    b.embed_video(FrameSequence::filled(1, 30, 32, 3, 0.f));
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IndivisibleDimensions);
  }
}

TEST_CASE("backbone forward contract") {
  const auto& b = backbone();
  const auto vision = b.embed_video(scene_video(0));
  const TokenSequence text = encode_prompt(b, "Does the square move left?");
  CHECK(text.front() == token::kBos);
  const auto out = b.forward(vision, text, {});
  CHECK(out.logits.size() == 64);
  CHECK(out.hidden.rows == vision.embeddings.rows + text.size());
  CHECK(out.hidden.cols == 64);
  CHECK(b.forward(vision, text, {}).logits == out.logits);

  // Regression hash of the logits at 9 significant digits.
  std::uint64_t h = 0;
  {
    std::string s;
    char buf[32];
    for (double v : out.logits) {
      std::snprintf(buf, sizeof buf, "%.9g,", v);
      s += buf;
    }
    h = fnv1a64(s);
  }
  CHECK(h == 13187309562714774619ULL);

  // Changing prefix position j leaves earlier rows untouched.
  const TokenSequence p1{token::kYes, 20, 30}, p2{token::kYes, 20, 31};
  const auto a = b.forward(vision, text, p1), c = b.forward(vision, text, p2);
  const std::size_t cut = vision.embeddings.rows + text.size() + 2;
  for (std::size_t r = 0; r < cut; ++r)
    for (std::size_t k = 0; k < 64; ++k) CHECK(a.hidden.at(r, k) == c.hidden.at(r, k));
  CHECK(a.logits != c.logits);

  TokenSequence bad = text;
  bad.push_back(64);
  try {
    b.forward(vision, bad, {});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::VocabOverflow);
  }
}

TEST_CASE("causality over random prompts") {
  const auto& b = backbone();
  const auto vision = b.embed_video(scene_video(1));
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    TokenSequence text{token::kBos};
    for (int i = 0; i < 6; ++i) text.push_back(static_cast<TokenId>(3 + rng.below(61)));
    TokenSequence longer = text;
    longer.push_back(static_cast<TokenId>(3 + rng.below(61)));
    const auto a = b.forward(vision, text, {}), c = b.forward(vision, longer, {});
    for (std::size_t r = 0; r < a.hidden.rows; ++r)
      for (std::size_t k = 0; k < 64; ++k) CHECK(a.hidden.at(r, k) == c.hidden.at(r, k));
  }
}

TEST_CASE("tokenizer") {
  const auto& b = backbone();
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  const auto ids = b.tokenize("Yes, NO! a b. E zebra");
  REQUIRE(ids.size() == 6);
  CHECK(ids[0] == token::kYes);
  CHECK(ids[1] == token::kNo);
  CHECK(ids[2] == token::kA);
  CHECK(ids[3] == token::kA + 1);
  CHECK(ids[4] == token::kA + 4);
  CHECK(ids[5] == token::kFirstBucket + fnv1a64("zebra") % token::kNumBuckets);
  CHECK(b.tokenize("Zebra") == b.tokenize("zebra"));
  CHECK(b.tokenize("  ,, ").empty());
  CHECK(b.detokenize({token::kBos, token::kYes, token::kA + 2, token::kEos, token::kNo}) == "yes C");
  CHECK_THROWS_AS(b.detokenize({100}), Error);
}

TEST_CASE("answer extraction") {
  CHECK(extract_answer("Yes, the camera pans left.", AnswerFormat::YesNo) == Label::Yes);
  CHECK(extract_answer("no", AnswerFormat::YesNo) == Label::No);
  CHECK(extract_answer("Nobody knows. No.", AnswerFormat::YesNo) == Label::No);
  CHECK(extract_answer("eyes closed", AnswerFormat::YesNo) == Label::Unparsed);
  CHECK(extract_answer("The answer is B.", AnswerFormat::MultipleChoice) == Label::B);
  CHECK(extract_answer("c) red", AnswerFormat::MultipleChoice) == Label::C);
  CHECK(extract_answer("D: blue", AnswerFormat::MultipleChoice) == Label::D);
  CHECK(extract_answer("Unsure.", AnswerFormat::MultipleChoice) == Label::Unparsed);
  CHECK(extract_answer("Unsure.", AnswerFormat::YesNo) == Label::Unparsed);
  CHECK(extract_answer("", AnswerFormat::YesNo) == Label::Unparsed);
  CHECK(parse_label("yes") == Label::Yes);
  CHECK(parse_label("e") == Label::E);
  CHECK(!parse_label("maybe").has_value());
  CHECK(letter_label(1) == Label::B);
  CHECK(letter_index(Label::C) == 2);
  CHECK(!letter_index(Label::Yes).has_value());
}

TEST_CASE("three-pass generation") {
  const auto& b = backbone();
  const ToySpatialExtractor spatial(7);
  RunConfig cfg;
  const auto video = prepare_video(b, scene_video(2), spatial, cfg);
  const Tensor desc = tool_description_embeddings(b);
  CHECK(desc.rows == 8);
  const auto policy = init_params(2025);
  const std::string q = "Does the square move right?";

  SUBCASE("zero alphas reduce to greedy decoding") {
    RunConfig c0 = cfg;
    c0.alpha1 = c0.alpha2 = 0.0;
    for (std::size_t steps : {1u, 4u}) {
      c0.max_steps = steps;
      Rng rng(1);
      const auto g = tricd_generate(b, video, q, desc, policy, c0, rng);
      const auto base = greedy_generate(b, video.tokens, encode_prompt(b, q), steps);
      CHECK(g.tokens == base.tokens);
      CHECK(g.text == base.text);
    }
  }

  SUBCASE("forced degenerate passes match the original logits") {
    RunConfig c1 = cfg;
    c1.force_identity_negative = true;
    c1.force_unit_saliency = true;
    c1.max_steps = 3;
    Rng rng(2);
    const auto g = tricd_generate(b, video, q, desc, policy, c1, rng);
    REQUIRE(!g.trace.steps.empty());
    for (const auto& s : g.trace.steps) {
      CHECK(s.q_p == s.q_o);
      CHECK(s.q_n == s.q_o);
    }
    CHECK(g.tokens == greedy_generate(b, video.tokens, encode_prompt(b, q), 3).tokens);
  }

  SUBCASE("seeded runs are reproducible") {
    Rng r1(9), r2(9);
    const auto a = tricd_generate(b, video, q, desc, policy, cfg, r1);
    const auto c = tricd_generate(b, video, q, desc, policy, cfg, r2);
    CHECK(a.text == c.text);
    CHECK(a.tokens == c.tokens);
    CHECK(a.trace.tools == c.trace.tools);
    CHECK(a.trace.beta == c.trace.beta);
    REQUIRE(a.trace.steps.size() == c.trace.steps.size());
    for (std::size_t i = 0; i < a.trace.steps.size(); ++i) {
      CHECK(a.trace.steps[i].q_o == c.trace.steps[i].q_o);
      CHECK(a.trace.steps[i].q_p == c.trace.steps[i].q_p);
      CHECK(a.trace.steps[i].q_n == c.trace.steps[i].q_n);
    }
    CHECK(a.trace.tools.any());
    CHECK(a.trace.beta == a.trace.mu);
    const auto q_cal = calibrate(a.trace.steps[0], cfg.alpha1, cfg.alpha2);
    CHECK(a.tokens.front() == greedy_argmax(q_cal));
  }

  SUBCASE("training rollouts record log-probabilities") {
    PolicyParams p = policy;
    Tape tape;
    const PolicyVars vars = bind_params(tape, p);
    Rng rng(3);
    const auto r = tricd_rollout(tape, vars, p.dims, b, video, q, desc, cfg, rng);
    CHECK(tape.scalar(r.log_prob_apc) < 0.0);
    CHECK(std::isfinite(tape.scalar(r.log_prob_sge)));
    tape.backward(tape.add(r.log_prob_apc, r.log_prob_sge));
    double norm = 0.0;
    for (auto& [name, t] : p.named())
      for (double g : t->grad) norm += g * g;
    CHECK(norm > 0.0);
  }
}
