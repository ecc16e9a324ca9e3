#include "tricd/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "tricd/error.hpp"

namespace tricd {

namespace {

constexpr const char* kFormat = "tricd-policy";

std::string fmt_float(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(static_cast<float>(v)));
  return buf;
}

}  // namespace

std::string checkpoint_to_string(const PolicyParams& params, const TrainerState& state,
                                 std::uint64_t seed) {
  std::ostringstream out;
  const auto& d = params.dims;
  out << "{\n";
  out << "  \"format\": \"" << kFormat << "\",\n";
  out << "  \"version\": " << kCheckpointVersion << ",\n";
  out << "  \"seed\": " << seed << ",\n";
  out << "  \"dims\": {\"d_model\": " << d.d_model << ", \"d\": " << d.d << ", \"d_g\": " << d.d_g
      << ", \"n_q\": " << d.n_q << "},\n";
  out << "  \"baseline\": " << fmt_float(state.baseline) << ",\n";
  out << "  \"step\": " << state.step << ",\n";
  out << "  \"samples\": " << state.samples << ",\n";
  out << "  \"params\": [\n";
  const auto named = params.named();
  for (std::size_t i = 0; i < named.size(); ++i) {
    const auto& [name, t] = named[i];
    out << "    {\"name\": \"" << name << "\", \"shape\": [" << t->rows << ", " << t->cols
        << "], \"data\": [";
    for (std::size_t j = 0; j < t->size(); ++j) out << (j ? ", " : "") << fmt_float(t->data[j]);
    out << "]}" << (i + 1 < named.size() ? "," : "") << "\n";
  }
  out << "  ]\n}\n";
  return out.str();
}

Checkpoint checkpoint_from_string(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat) {
      throw Error(ErrorCode::MalformedDocument, "not a policy checkpoint");
    }
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      throw Error(ErrorCode::MalformedDocument, "unsupported checkpoint version");
    }
    PolicyDims dims;
    const auto& jd = doc.at("dims");
    dims.d_model = jd.at("d_model").get<std::size_t>();
    dims.d = jd.at("d").get<std::size_t>();
    dims.d_g = jd.at("d_g").get<std::size_t>();
    dims.n_q = jd.at("n_q").get<std::size_t>();

    Checkpoint ck;
    ck.seed = doc.at("seed").get<std::uint64_t>();
    ck.params = init_params(0, dims);
    ck.state.baseline = doc.at("baseline").get<double>();
    ck.state.step = doc.at("step").get<std::size_t>();
    ck.state.samples = doc.at("samples").get<std::size_t>();

    const auto& jp = doc.at("params");
    auto named = ck.params.named();
    if (!jp.is_array() || jp.size() != named.size()) {
      throw Error(ErrorCode::MalformedDocument, "expected " + std::to_string(named.size()) + " parameters");
    }
    for (std::size_t i = 0; i < named.size(); ++i) {
      auto& [name, t] = named[i];
      const auto& e = jp[i];
      const auto got = e.at("name").get<std::string>();
      if (got != name) {
        throw Error(ErrorCode::MalformedDocument, "parameter " + std::to_string(i) + " is '" + got +
                                                      "', expected '" + name + "'");
      }
      const auto shape = e.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2 || shape[0] != t->rows || shape[1] != t->cols) {
        throw Error(ErrorCode::ShapeMismatch, name + " has the wrong shape");
      }
      const auto data = e.at("data").get<std::vector<double>>();
      if (data.size() != t->size()) throw Error(ErrorCode::ShapeMismatch, name + " has the wrong length");
      for (std::size_t j = 0; j < data.size(); ++j) t->data[j] = static_cast<float>(data[j]);
    }
    ck.state.baseline = static_cast<float>(ck.state.baseline);
    return ck;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params,
                     const TrainerState& state, std::uint64_t seed) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  f << checkpoint_to_string(params, state, seed);
  if (!f) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::MissingFile, path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace tricd
