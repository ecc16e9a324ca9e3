#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tricd/autograd.hpp"
#include "tricd/video.hpp"

namespace tricd {

using TokenId = std::uint32_t;
using TokenSequence = std::vector<TokenId>;

// Vision embeddings, one row per patch, frame-major then row-major.
struct VisionTokens {
  Tensor embeddings;  // (frames * grid_h * grid_w) x d_model
  std::size_t frames = 0;
  std::size_t grid_h = 0;
  std::size_t grid_w = 0;
};

struct BackboneOutput {
  std::vector<double> logits;  // next-token scores at the last position
  Tensor hidden;               // final-layer states, vision rows then text rows
};

// A frozen sequence model. Implementations must be deterministic and safe to
// call concurrently.
class Backbone {
 public:
  virtual ~Backbone() = default;

  virtual std::size_t vocab_size() const = 0;
  virtual std::size_t d_model() const = 0;
  virtual std::size_t patch_size() const = 0;
  virtual TokenId bos_id() const = 0;
  virtual TokenId eos_id() const = 0;

  // Throws IndivisibleDimensions.
  virtual VisionTokens embed_video(const FrameSequence& seq) const = 0;
  // Vision rows, then text, then prefix. Throws VocabOverflow.
  virtual BackboneOutput forward(const VisionTokens& vision, const TokenSequence& text,
                                 const TokenSequence& prefix) const = 0;

  virtual TokenSequence tokenize(std::string_view text) const = 0;
  virtual std::string detokenize(const TokenSequence& ids) const = 0;
};

// Mean-pooled final hidden states of each tool description run as text only:
// an 8 x d_model matrix in tool enumeration order.
Tensor tool_description_embeddings(const Backbone& backbone);

}  // namespace tricd
