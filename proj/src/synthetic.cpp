#include "tricd/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>

#include "tricd/error.hpp"
#include "tricd/rng.hpp"
#include "tricd/vseq_io.hpp"

namespace tricd {

namespace {

constexpr std::array<Direction, 4> kDirections{Direction::Left, Direction::Right, Direction::Up,
                                               Direction::Down};
constexpr std::array<SquareColor, 4> kColors{SquareColor::Red, SquareColor::Green, SquareColor::Blue,
                                             SquareColor::Yellow};
constexpr const char* kAdversarial = "All others are wrong";

std::array<float, 3> rgb(SquareColor c) {
  switch (c) {
    case SquareColor::Red: return {0.9f, 0.1f, 0.1f};
    case SquareColor::Green: return {0.1f, 0.8f, 0.1f};
    case SquareColor::Blue: return {0.1f, 0.2f, 0.9f};
    case SquareColor::Yellow: return {0.9f, 0.9f, 0.1f};
  }
  return {0.0f, 0.0f, 0.0f};
}

std::ptrdiff_t dx_of(Direction d) { return d == Direction::Left ? -1 : d == Direction::Right ? 1 : 0; }
std::ptrdiff_t dy_of(Direction d) { return d == Direction::Up ? -1 : d == Direction::Down ? 1 : 0; }

template <typename T, std::size_t N>
T pick_other(const std::array<T, N>& all, T exclude, Rng& rng) {
  std::vector<T> rest;
  for (T v : all)
    if (v != exclude) rest.push_back(v);
  return rest[rng.below(rest.size())];
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

std::string id_for(const std::string& video_id, int k) { return video_id + "_q" + std::to_string(k); }

// Options are `wrong` plus either the correct text or, for some adversarial
// items, only the "All others are wrong" entry.
void fill_options(QASample& s, const std::string& correct, std::vector<std::string> wrong, Rng& rng) {
  const double u = rng.uniform();
  if (u < 2.0 / 3.0) {
    wrong.push_back(correct);
    shuffle(wrong, rng);
    s.options = wrong;
    s.answer = letter_label(static_cast<std::size_t>(std::find(wrong.begin(), wrong.end(), correct) - wrong.begin()));
    if (u < 1.0 / 3.0) {
      s.options.push_back(kAdversarial);
      s.adversarial = true;
    }
  } else {
    shuffle(wrong, rng);
    s.options = wrong;
    s.options.push_back(kAdversarial);
    s.answer = letter_label(s.options.size() - 1);
    s.adversarial = true;
  }
}

}  // namespace

std::string_view direction_name(Direction d) {
  switch (d) {
    case Direction::Left: return "left";
    case Direction::Right: return "right";
    case Direction::Up: return "up";
    case Direction::Down: return "down";
  }
  return "";
}

std::string_view color_name(SquareColor c) {
  switch (c) {
    case SquareColor::Red: return "red";
    case SquareColor::Green: return "green";
    case SquareColor::Blue: return "blue";
    case SquareColor::Yellow: return "yellow";
  }
  return "";
}

SyntheticScene random_scene(std::uint64_t seed, std::size_t index) {
  Rng rng = Rng::derive(seed, 2 * index);
  SyntheticScene s;
  s.direction = kDirections[rng.below(4)];
  s.color = kColors[rng.below(4)];
  s.brightness = rng.bernoulli(0.5) ? Brightness::Rising : Brightness::Falling;
  s.marker_top = rng.bernoulli(0.5);
  const std::size_t travel = kSquareStep * (kSyntheticFrames - 1);
  const std::size_t lo = 6, hi = kSyntheticSize - 6 - kSquareSize;  // keeps clear of the marker rows
  auto span = [&](std::ptrdiff_t dir, std::size_t a, std::size_t b) -> std::size_t {
    if (dir > 0) return a + rng.below(b - travel - a + 1);
    if (dir < 0) return a + travel + rng.below(b - travel - a + 1);
    return a + rng.below(b - a + 1);
  };
  s.start_x = span(dx_of(s.direction), 0, kSyntheticSize - kSquareSize);
  s.start_y = span(dy_of(s.direction), lo, hi);
  return s;
}

FrameSequence render_scene(const SyntheticScene& scene) {
  const std::size_t N = kSyntheticSize, T = kSyntheticFrames;
  std::vector<float> data(T * N * N * 3);
  const auto col = rgb(scene.color);
  for (std::size_t t = 0; t < T; ++t) {
    const double phase = static_cast<double>(t) / static_cast<double>(T - 1);
    const double level = scene.brightness == Brightness::Rising ? 0.15 + 0.35 * phase : 0.5 - 0.35 * phase;
    const auto sx = static_cast<std::ptrdiff_t>(scene.start_x) +
                    dx_of(scene.direction) * static_cast<std::ptrdiff_t>(kSquareStep * t);
    const auto sy = static_cast<std::ptrdiff_t>(scene.start_y) +
                    dy_of(scene.direction) * static_cast<std::ptrdiff_t>(kSquareStep * t);
    for (std::size_t y = 0; y < N; ++y)
      for (std::size_t x = 0; x < N; ++x) {
        std::array<float, 3> px;
        // Faint static vertical gradient so the background is not flat.
        const float bg = static_cast<float>(level + 0.08 * static_cast<double>(y) / static_cast<double>(N));
        px = {bg, bg, bg};
        const bool marker_row = scene.marker_top ? (y >= 1 && y < 5) : (y >= N - 5 && y < N - 1);
        if (marker_row && x >= 8 && x < N - 8) px = {1.0f, 1.0f, 1.0f};
        const auto xi = static_cast<std::ptrdiff_t>(x), yi = static_cast<std::ptrdiff_t>(y);
        if (xi >= sx && xi < sx + static_cast<std::ptrdiff_t>(kSquareSize) && yi >= sy &&
            yi < sy + static_cast<std::ptrdiff_t>(kSquareSize))
          px = col;
        float* out = &data[((t * N + y) * N + x) * 3];
        for (std::size_t c = 0; c < 3; ++c) out[c] = std::clamp(px[c], 0.0f, 1.0f);
      }
  }
  return FrameSequence(T, N, N, 3, std::move(data));
}

std::vector<QASample> scene_questions(const SyntheticScene& sc, const std::string& video_id,
                                      std::uint64_t seed, std::size_t index) {
  Rng rng = Rng::derive(seed, 2 * index + 1);
  std::vector<QASample> out;
  const std::string dir(direction_name(sc.direction));
  const std::string color(color_name(sc.color));
  const std::string trend = sc.brightness == Brightness::Rising ? "brighter" : "darker";
  const std::string other_trend = sc.brightness == Brightness::Rising ? "darker" : "brighter";

  {
    QASample s;
    s.id = id_for(video_id, 0);
    s.task = Task::S_YNQA;
    s.types = {HallucinationType::Action};
    const bool yes = rng.bernoulli(0.5);
    const auto asked = yes ? sc.direction : pick_other(kDirections, sc.direction, rng);
    s.question = "Does the square move " + std::string(direction_name(asked)) + "?";
    s.answer = yes ? Label::Yes : Label::No;
    out.push_back(std::move(s));
  }
  {
    QASample s;
    s.id = id_for(video_id, 1);
    s.task = Task::S_YNQA;
    const bool yes = rng.bernoulli(0.5);
    switch (index % 3) {
      case 0: {
        s.types = {HallucinationType::Attribute};
        const auto asked = yes ? sc.color : pick_other(kColors, sc.color, rng);
        s.question = "Is the square " + std::string(color_name(asked)) + "?";
        break;
      }
      case 1:
        s.types = {HallucinationType::Temporal};
        s.question = "Does the scene get " + (yes ? trend : other_trend) + " over time?";
        break;
      default: {
        s.types = {HallucinationType::Relation};
        const bool top = yes ? sc.marker_top : !sc.marker_top;
        s.question = std::string("Is the white bar at the ") + (top ? "top" : "bottom") + " of the frame?";
        break;
      }
    }
    s.answer = yes ? Label::Yes : Label::No;
    out.push_back(std::move(s));
  }
  {
    QASample s;
    s.id = id_for(video_id, 2);
    s.task = Task::C_YNQA;
    s.types = {HallucinationType::Action, HallucinationType::Attribute, HallucinationType::Temporal};
    const bool yes = rng.bernoulli(0.5);
    std::string c = color, d = dir, tr = trend;
    if (!yes) {
      switch (rng.below(3)) {
        case 0: c = color_name(pick_other(kColors, sc.color, rng)); break;
        case 1: d = direction_name(pick_other(kDirections, sc.direction, rng)); break;
        default: tr = other_trend; break;
      }
    }
    s.question = "Does the " + c + " square move " + d + " while the scene gets " + tr + "?";
    s.answer = yes ? Label::Yes : Label::No;
    out.push_back(std::move(s));
  }
  {
    QASample s;
    s.id = id_for(video_id, 3);
    s.task = Task::S_MCQA;
    s.types = {HallucinationType::Action};
    s.question = "Which way does the square move?";
    std::vector<std::string> wrong;
    for (auto d : kDirections)
      if (d != sc.direction) wrong.emplace_back(direction_name(d));
    fill_options(s, dir, wrong, rng);
    out.push_back(std::move(s));
  }
  {
    QASample s;
    s.id = id_for(video_id, 4);
    s.task = Task::C_MCQA;
    s.types = {HallucinationType::Action, HallucinationType::Attribute};
    s.question = "Which description matches the clip?";
    const std::string correct = color + " square moving " + dir;
    std::vector<std::string> wrong;
    while (wrong.size() < 3) {
      const auto c = kColors[rng.below(4)];
      const auto d = kDirections[rng.below(4)];
      const std::string text =
          std::string(color_name(c)) + " square moving " + std::string(direction_name(d));
      if (text != correct && std::find(wrong.begin(), wrong.end(), text) == wrong.end()) wrong.push_back(text);
    }
    fill_options(s, correct, wrong, rng);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<QASample> gen_synthetic(const std::filesystem::path& out_dir, std::size_t n_videos,
                                    std::uint64_t seed) {
  if (n_videos < 4) throw Error(ErrorCode::InvalidArgument, "need at least 4 videos");
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "videos", ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + (out_dir / "videos").string());
  std::vector<QASample> all;
  std::ofstream jsonl(out_dir / "dataset.jsonl", std::ios::binary | std::ios::trunc);
  if (!jsonl) throw Error(ErrorCode::IoFailure, "cannot write " + (out_dir / "dataset.jsonl").string());
  for (std::size_t i = 0; i < n_videos; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "v%04zu", i);
    const SyntheticScene scene = random_scene(seed, i);
    const std::string rel = std::string("videos/") + name + ".vseq";
    save_vseq(render_scene(scene), out_dir / rel);
    for (auto& s : scene_questions(scene, name, seed, i)) {
      jsonl << sample_to_json_line(s, rel) << '\n';
      s.video = out_dir / rel;
      all.push_back(std::move(s));
    }
  }
  if (!jsonl) throw Error(ErrorCode::IoFailure, "write failed for dataset.jsonl");
  return all;
}

}  // namespace tricd
