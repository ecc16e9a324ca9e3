#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tricd/backbone.hpp"

namespace tricd {

namespace token {
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kYes = 3;
inline constexpr TokenId kNo = 4;
inline constexpr TokenId kA = 5;  // letters A..E are 5..9
inline constexpr TokenId kFirstBucket = 10;
inline constexpr std::size_t kNumBuckets = 54;
inline constexpr std::size_t kVocab = 64;
}  // namespace token

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view text);

struct ToyBackboneConfig {
  std::size_t patch = 16;
  std::size_t d_model = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t d_ff = 256;
  std::size_t max_frames = 64;
  std::size_t max_grid = 64;
  std::size_t max_text = 512;
  // Extra output bias on the answer tokens (yes/no and letters).
  double answer_bias = 4.0;
};

// Small pre-LN transformer with seeded random weights. Vision rows see each
// other; text rows are causal and see every vision row.
class ToyBackbone : public Backbone {
 public:
  explicit ToyBackbone(std::uint64_t seed, const ToyBackboneConfig& cfg = {});

  std::size_t vocab_size() const override { return token::kVocab; }
  std::size_t d_model() const override { return cfg_.d_model; }
  std::size_t patch_size() const override { return cfg_.patch; }
  TokenId bos_id() const override { return token::kBos; }
  TokenId eos_id() const override { return token::kEos; }

  VisionTokens embed_video(const FrameSequence& seq) const override;
  BackboneOutput forward(const VisionTokens& vision, const TokenSequence& text,
                         const TokenSequence& prefix) const override;
  TokenSequence tokenize(std::string_view text) const override;
  std::string detokenize(const TokenSequence& ids) const override;

  // Every weight in a fixed order, for frozen-weight checks.
  std::vector<double> flat_weights() const;

 private:
  struct Layer {
    std::vector<double> ln1_g, ln1_b, wq, wk, wv, wo, ln2_g, ln2_b, w1, b1, w2, b2;
  };

  ToyBackboneConfig cfg_;
  std::vector<double> w_patch_, b_patch_;  // 3 x d, d
  std::vector<double> row_emb_, col_emb_, frame_emb_;
  std::vector<double> tok_emb_, text_pos_emb_;
  std::vector<Layer> layers_;
  std::vector<double> lnf_g_, lnf_b_, w_out_, b_out_;  // w_out: d x vocab
};

}  // namespace tricd
