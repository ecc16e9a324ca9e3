#include "tricd/toy_backbone.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "tricd/error.hpp"
#include "tricd/perturbation.hpp"
#include "tricd/rng.hpp"

namespace tricd {

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Tensor tool_description_embeddings(const Backbone& backbone) {
  const std::size_t d = backbone.d_model();
  Tensor out(kNumTools, d);
  VisionTokens none;
  none.embeddings = Tensor(0, d);
  for (std::size_t i = 0; i < kNumTools; ++i) {
    TokenSequence text{backbone.bos_id()};
    const auto words = backbone.tokenize(tool_description(kAllTools[i]));
    text.insert(text.end(), words.begin(), words.end());
    const BackboneOutput o = backbone.forward(none, text, {});
    for (std::size_t r = 0; r < o.hidden.rows; ++r)
      for (std::size_t c = 0; c < d; ++c) out.at(i, c) += o.hidden.at(r, c);
    for (std::size_t c = 0; c < d; ++c) out.at(i, c) /= static_cast<double>(o.hidden.rows);
  }
  return out;
}

namespace {

std::vector<double> normal_vec(Rng& rng, std::size_t n, double stddev) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal() * stddev;
  return v;
}

// y (n x m) = x (n x k) * w (k x m)
std::vector<double> matmul(const std::vector<double>& x, std::size_t n, std::size_t k,
                           const std::vector<double>& w, std::size_t m) {
  std::vector<double> y(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* yi = &y[i * m];
    for (std::size_t t = 0; t < k; ++t) {
      const double a = x[i * k + t];
      if (a == 0.0) continue;
      const double* wt = &w[t * m];
      for (std::size_t j = 0; j < m; ++j) yi[j] += a * wt[j];
    }
  }
  return y;
}

std::vector<double> layer_norm(const std::vector<double>& x, std::size_t n, std::size_t d,
                               const std::vector<double>& g, const std::vector<double>& b) {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = &x[i * d];
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xi[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xi[j] - mean) * (xi[j] - mean);
    const double inv = 1.0 / std::sqrt(var / static_cast<double>(d) + 1e-5);
    for (std::size_t j = 0; j < d; ++j) y[i * d + j] = (xi[j] - mean) * inv * g[j] + b[j];
  }
  return y;
}

double gelu(double x) {
  const double c = std::sqrt(2.0 / std::numbers::pi);
  return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x)));
}

}  // namespace

ToyBackbone::ToyBackbone(std::uint64_t seed, const ToyBackboneConfig& cfg) : cfg_(cfg) {
  if (cfg.d_model == 0 || cfg.heads == 0 || cfg.d_model % cfg.heads != 0 || cfg.patch == 0) {
    throw Error(ErrorCode::InvalidArgument, "invalid toy backbone configuration");
  }
  Rng rng(seed);
  const std::size_t d = cfg.d_model;
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  w_patch_ = normal_vec(rng, 3 * d, 2.0);
  b_patch_ = normal_vec(rng, d, 0.5);
  row_emb_ = normal_vec(rng, cfg.max_grid * d, 0.5);
  col_emb_ = normal_vec(rng, cfg.max_grid * d, 0.5);
  frame_emb_ = normal_vec(rng, cfg.max_frames * d, 0.5);
  tok_emb_ = normal_vec(rng, token::kVocab * d, 1.0);
  text_pos_emb_ = normal_vec(rng, cfg.max_text * d, 0.5);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    Layer layer;
    layer.ln1_g.assign(d, 1.0);
    layer.ln1_b.assign(d, 0.0);
    layer.wq = normal_vec(rng, d * d, sd);
    layer.wk = normal_vec(rng, d * d, sd);
    layer.wv = normal_vec(rng, d * d, sd);
    layer.wo = normal_vec(rng, d * d, sd);
    layer.ln2_g.assign(d, 1.0);
    layer.ln2_b.assign(d, 0.0);
    layer.w1 = normal_vec(rng, d * cfg.d_ff, sd);
    layer.b1.assign(cfg.d_ff, 0.0);
    layer.w2 = normal_vec(rng, cfg.d_ff * d, 1.0 / std::sqrt(static_cast<double>(cfg.d_ff)));
    layer.b2.assign(d, 0.0);
    layers_.push_back(std::move(layer));
  }
  lnf_g_.assign(d, 1.0);
  lnf_b_.assign(d, 0.0);
  w_out_ = normal_vec(rng, d * token::kVocab, sd);
  b_out_.assign(token::kVocab, 0.0);
  for (TokenId t = token::kYes; t < token::kFirstBucket; ++t) b_out_[t] = cfg.answer_bias;
}

VisionTokens ToyBackbone::embed_video(const FrameSequence& seq) const {
  const std::size_t P = cfg_.patch, d = cfg_.d_model;
  if (seq.height() % P != 0 || seq.width() % P != 0) {
    throw Error(ErrorCode::IndivisibleDimensions,
                std::to_string(seq.height()) + "x" + std::to_string(seq.width()) +
                    " is not divisible by patch " + std::to_string(P));
  }
  VisionTokens vt;
  vt.frames = seq.frames();
  vt.grid_h = seq.height() / P;
  vt.grid_w = seq.width() / P;
  vt.embeddings = Tensor(vt.frames * vt.grid_h * vt.grid_w, d);
  const double inv_area = 1.0 / static_cast<double>(P * P);
  std::size_t row = 0;
  for (std::size_t t = 0; t < vt.frames; ++t) {
    const double* femb = &frame_emb_[std::min(t, cfg_.max_frames - 1) * d];
    for (std::size_t py = 0; py < vt.grid_h; ++py) {
      const double* remb = &row_emb_[std::min(py, cfg_.max_grid - 1) * d];
      for (std::size_t px = 0; px < vt.grid_w; ++px, ++row) {
        const double* cemb = &col_emb_[std::min(px, cfg_.max_grid - 1) * d];
        double mean[3] = {0.0, 0.0, 0.0};
        for (std::size_t y = py * P; y < (py + 1) * P; ++y)
          for (std::size_t x = px * P; x < (px + 1) * P; ++x)
            for (std::size_t c = 0; c < 3; ++c) mean[c] += seq.at(t, y, x, seq.channels() == 3 ? c : 0);
        for (double& m : mean) m *= inv_area;
        for (std::size_t j = 0; j < d; ++j) {
          vt.embeddings.at(row, j) = b_patch_[j] + mean[0] * w_patch_[j] + mean[1] * w_patch_[d + j] +
                                     mean[2] * w_patch_[2 * d + j] + remb[j] + cemb[j] + femb[j];
        }
      }
    }
  }
  return vt;
}

BackboneOutput ToyBackbone::forward(const VisionTokens& vision, const TokenSequence& text,
                                    const TokenSequence& prefix) const {
  const std::size_t d = cfg_.d_model, H = cfg_.heads, dh = d / H;
  if (vision.embeddings.cols != d && vision.embeddings.rows > 0) {
    throw Error(ErrorCode::ShapeMismatch, "vision embedding width differs from d_model");
  }
  const std::size_t nv = vision.embeddings.rows;
  TokenSequence ids = text;
  ids.insert(ids.end(), prefix.begin(), prefix.end());
  const std::size_t L = nv + ids.size();
  if (L == 0) throw Error(ErrorCode::InvalidArgument, "empty backbone input");

  std::vector<double> x(L * d);
  std::copy(vision.embeddings.data.begin(), vision.embeddings.data.end(), x.begin());
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (ids[j] >= token::kVocab) {
      throw Error(ErrorCode::VocabOverflow, "token id " + std::to_string(ids[j]));
    }
    const double* te = &tok_emb_[ids[j] * d];
    const double* pe = &text_pos_emb_[std::min(j, cfg_.max_text - 1) * d];
    for (std::size_t c = 0; c < d; ++c) x[(nv + j) * d + c] = te[c] + pe[c];
  }

  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<double> scores(L);
  for (const Layer& layer : layers_) {
    const auto y = layer_norm(x, L, d, layer.ln1_g, layer.ln1_b);
    const auto q = matmul(y, L, d, layer.wq, d);
    const auto k = matmul(y, L, d, layer.wk, d);
    const auto v = matmul(y, L, d, layer.wv, d);
    std::vector<double> attn(L * d, 0.0);
    for (std::size_t i = 0; i < L; ++i) {
      const std::size_t span = i < nv ? nv : i + 1;  // vision: all vision; text: causal
      for (std::size_t h = 0; h < H; ++h) {
        const double* qi = &q[i * d + h * dh];
        double mx = -INFINITY;
        for (std::size_t j = 0; j < span; ++j) {
          const double* kj = &k[j * d + h * dh];
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c) s += qi[c] * kj[c];
          scores[j] = s * inv_sqrt;
          mx = std::max(mx, scores[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < span; ++j) z += (scores[j] = std::exp(scores[j] - mx));
        double* out = &attn[i * d + h * dh];
        for (std::size_t j = 0; j < span; ++j) {
          const double p = scores[j] / z;
          const double* vj = &v[j * d + h * dh];
          for (std::size_t c = 0; c < dh; ++c) out[c] += p * vj[c];
        }
      }
    }
    const auto proj = matmul(attn, L, d, layer.wo, d);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += proj[i];

    const auto y2 = layer_norm(x, L, d, layer.ln2_g, layer.ln2_b);
    auto hdn = matmul(y2, L, d, layer.w1, cfg_.d_ff);
    for (std::size_t i = 0; i < hdn.size(); ++i) hdn[i] = gelu(hdn[i] + layer.b1[i % cfg_.d_ff]);
    const auto ff = matmul(hdn, L, cfg_.d_ff, layer.w2, d);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += ff[i] + layer.b2[i % d];
  }

  BackboneOutput out;
  out.hidden = Tensor::from(L, d, layer_norm(x, L, d, lnf_g_, lnf_b_));
  out.logits.assign(b_out_.begin(), b_out_.end());
  const double* last = &out.hidden.data[(L - 1) * d];
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t t = 0; t < token::kVocab; ++t) out.logits[t] += last[c] * w_out_[c * token::kVocab + t];
  return out;
}

TokenSequence ToyBackbone::tokenize(std::string_view text) const {
  TokenSequence ids;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    if (word == "yes") {
      ids.push_back(token::kYes);
    } else if (word == "no") {
      ids.push_back(token::kNo);
    } else if (word.size() == 1 && word[0] >= 'a' && word[0] <= 'e') {
      ids.push_back(token::kA + static_cast<TokenId>(word[0] - 'a'));
    } else {
      ids.push_back(token::kFirstBucket + static_cast<TokenId>(fnv1a64(word) % token::kNumBuckets));
    }
    word.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return ids;
}

std::string ToyBackbone::detokenize(const TokenSequence& ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id == token::kEos) break;
    if (id == token::kPad || id == token::kBos) continue;
    std::string word;
    if (id == token::kYes) {
      word = "yes";
    } else if (id == token::kNo) {
      word = "no";
    } else if (id >= token::kA && id < token::kFirstBucket) {
      word = std::string(1, static_cast<char>('A' + (id - token::kA)));
    } else if (id < token::kVocab) {
      const std::size_t bucket = id - token::kFirstBucket;
      word = "<w" + std::string(bucket < 10 ? "0" : "") + std::to_string(bucket) + ">";
    } else {
      throw Error(ErrorCode::VocabOverflow, "token id " + std::to_string(id));
    }
    if (!out.empty()) out.push_back(' ');
    out += word;
  }
  return out;
}

std::vector<double> ToyBackbone::flat_weights() const {
  std::vector<double> all;
  auto put = [&](const std::vector<double>& v) { all.insert(all.end(), v.begin(), v.end()); };
  for (const auto* v : {&w_patch_, &b_patch_, &row_emb_, &col_emb_, &frame_emb_, &tok_emb_, &text_pos_emb_})
    put(*v);
  for (const Layer& l : layers_)
    for (const auto* v : {&l.ln1_g, &l.ln1_b, &l.wq, &l.wk, &l.wv, &l.wo, &l.ln2_g, &l.ln2_b, &l.w1,
                          &l.b1, &l.w2, &l.b2})
      put(*v);
  for (const auto* v : {&lnf_g_, &lnf_b_, &w_out_, &b_out_}) put(*v);
  return all;
}

}  // namespace tricd
