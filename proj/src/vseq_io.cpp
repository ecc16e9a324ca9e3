#include "tricd/vseq_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "tricd/error.hpp"

namespace fs = std::filesystem;

namespace tricd {

namespace {

constexpr std::array<char, 5> kMagic{'V', 'S', 'E', 'Q', '1'};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<unsigned char> read_all(const fs::path& path) {
  if (!fs::exists(path) || !fs::is_regular_file(path)) {
    throw Error(ErrorCode::MissingFile, path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

FrameSequence load_vseq(const fs::path& path) {
  const auto bytes = read_all(path);
  if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw Error(ErrorCode::BadMagic, path.string());
  }
  if (bytes.size() < kVseqHeaderBytes) {
    throw Error(ErrorCode::DimensionMismatch, "truncated header in " + path.string());
  }
  const unsigned char* h = bytes.data() + kMagic.size();
  const std::uint64_t t = get_u32(h), ht = get_u32(h + 4), w = get_u32(h + 8), c = get_u32(h + 12);
  const std::uint64_t count = t * ht * w * c;
  if (bytes.size() - kVseqHeaderBytes != count * 4) {
    throw Error(ErrorCode::DimensionMismatch,
                "payload of " + std::to_string(bytes.size() - kVseqHeaderBytes) +
                    " bytes, header implies " + std::to_string(count * 4));
  }
  std::vector<float> data(count);
  const unsigned char* p = bytes.data() + kVseqHeaderBytes;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t raw = get_u32(p + 4 * i);
    data[i] = std::bit_cast<float>(raw);
  }
  return FrameSequence(t, ht, w, c, std::move(data));
}

void save_vseq(const FrameSequence& seq, const fs::path& path) {
  std::vector<unsigned char> out;
  out.reserve(kVseqHeaderBytes + seq.data().size() * 4);
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  put_u32(out, static_cast<std::uint32_t>(seq.frames()));
  put_u32(out, static_cast<std::uint32_t>(seq.height()));
  put_u32(out, static_cast<std::uint32_t>(seq.width()));
  put_u32(out, static_cast<std::uint32_t>(seq.channels()));
  for (float v : seq.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

namespace {

struct Ppm {
  std::size_t width = 0, height = 0;
  std::vector<float> rgb;
};

Ppm parse_ppm(const fs::path& path) {
  const auto bytes = read_all(path);
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) -> Ppm {
    throw Error(ErrorCode::MalformedPpm, path.string() + ": " + why);
  };
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> std::size_t {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) fail("expected integer");
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > 1u << 20) fail("header value too large");
    }
    return v;
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') return fail("not a binary P6 file");
  pos = 2;
  Ppm img;
  img.width = read_int();
  img.height = read_int();
  const std::size_t maxval = read_int();
  if (img.width == 0 || img.height == 0) fail("zero dimension");
  if (maxval != 255) fail("only 8-bit (maxval 255) images are supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) fail("missing separator after header");
  ++pos;
  const std::size_t n = img.width * img.height * 3;
  if (bytes.size() - pos < n) fail("truncated pixel data");
  img.rgb.resize(n);
  for (std::size_t i = 0; i < n; ++i) img.rgb[i] = static_cast<float>(bytes[pos + i]) / 255.0f;
  return img;
}

}  // namespace

FrameSequence import_ppm_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::MissingFile, dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".ppm") files.push_back(entry.path());
  }
  if (files.empty()) throw Error(ErrorCode::EmptyDirectory, dir.string());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  std::vector<float> data;
  std::size_t width = 0, height = 0;
  for (const auto& file : files) {
    Ppm img = parse_ppm(file);
    if (data.empty()) {
      width = img.width;
      height = img.height;
    } else if (img.width != width || img.height != height) {
      throw Error(ErrorCode::InconsistentDimensions,
                  file.filename().string() + " is " + std::to_string(img.width) + "x" +
                      std::to_string(img.height) + ", expected " + std::to_string(width) + "x" +
                      std::to_string(height));
    }
    data.insert(data.end(), img.rgb.begin(), img.rgb.end());
  }
  return FrameSequence(files.size(), height, width, 3, std::move(data));
}

void write_ppm(const FrameSequence& seq, std::size_t frame, const fs::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  f << "P6\n" << seq.width() << ' ' << seq.height() << "\n255\n";
  for (std::size_t y = 0; y < seq.height(); ++y) {
    for (std::size_t x = 0; x < seq.width(); ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const float v = seq.at(frame, y, x, seq.channels() == 3 ? c : 0);
        f.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f))));
      }
    }
  }
  if (!f) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace tricd
