#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "tricd/rng.hpp"
#include "tricd/video.hpp"

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("tricd_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline tricd::FrameSequence random_sequence(tricd::Rng& rng, std::size_t t, std::size_t h,
                                            std::size_t w, std::size_t c) {
  std::vector<float> data(t * h * w * c);
  for (float& v : data) v = static_cast<float>(rng.uniform());
  return tricd::FrameSequence(t, h, w, c, std::move(data));
}

}  // namespace testutil
