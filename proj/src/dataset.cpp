#include "tricd/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "tricd/error.hpp"
#include "tricd/rng.hpp"

namespace tricd {

std::string_view task_name(Task task) {
  switch (task) {
    case Task::S_YNQA: return "S_YNQA";
    case Task::C_YNQA: return "C_YNQA";
    case Task::S_MCQA: return "S_MCQA";
    case Task::C_MCQA: return "C_MCQA";
  }
  return "";
}

std::optional<Task> parse_task(std::string_view name) {
  for (Task t : kAllTasks)
    if (task_name(t) == name) return t;
  return std::nullopt;
}

std::string_view type_name(HallucinationType type) {
  switch (type) {
    case HallucinationType::Object: return "object";
    case HallucinationType::Scene: return "scene";
    case HallucinationType::Event: return "event";
    case HallucinationType::Action: return "action";
    case HallucinationType::Relation: return "relation";
    case HallucinationType::Attribute: return "attribute";
    case HallucinationType::Temporal: return "temporal";
    case HallucinationType::Camera: return "camera";
  }
  return "";
}

std::optional<HallucinationType> parse_type(std::string_view name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  for (HallucinationType t : kAllTypes)
    if (type_name(t) == lower) return t;
  return std::nullopt;
}

AnswerFormat format_of(Task task) {
  return task == Task::S_YNQA || task == Task::C_YNQA ? AnswerFormat::YesNo : AnswerFormat::MultipleChoice;
}

bool is_compositional(Task task) { return task == Task::C_YNQA || task == Task::C_MCQA; }

void validate_sample(const QASample& s) {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::ConstraintViolation, why); };
  if (s.id.empty()) fail("empty id");
  if (s.question.empty()) fail("empty question");
  if (s.types.empty()) fail("types must be nonempty");
  std::set<HallucinationType> uniq(s.types.begin(), s.types.end());
  if (uniq.size() != s.types.size()) fail("duplicate hallucination type");
  if (is_compositional(s.task)) {
    if (s.types.size() < 2) fail(std::string(task_name(s.task)) + " needs at least two types");
  } else if (s.types.size() != 1) {
    fail(std::string(task_name(s.task)) + " needs exactly one type");
  }
  if (format_of(s.task) == AnswerFormat::YesNo) {
    if (!s.options.empty()) fail("YNQA samples take no options");
    if (s.answer != Label::Yes && s.answer != Label::No) fail("YNQA answer must be Yes or No");
  } else {
    if (s.options.size() < 2 || s.options.size() > 6) fail("MCQA needs 2 to 6 options");
    const auto idx = letter_index(s.answer);
    if (!idx) fail("MCQA answer must be a letter");
    if (*idx >= s.options.size()) {
      fail("answer " + std::string(label_name(s.answer)) + " has no option (" +
           std::to_string(s.options.size()) + " given)");
    }
  }
  if (s.domain != "real" && s.domain != "generated") fail("domain must be real or generated");
}

std::vector<QASample> load_dataset(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  using nlohmann::json;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  static const std::set<std::string> known{"id",     "video", "task",        "question", "options",
                                           "answer", "types", "adversarial", "domain"};
  const auto base = path.parent_path();
  std::vector<QASample> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(lineno) + ": ";
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedLine, where + e.what());
    }
    if (!obj.is_object()) throw Error(ErrorCode::MalformedLine, where + "expected a JSON object");
    QASample s;
    try {
      s.id = obj.at("id").get<std::string>();
      s.video = base / obj.at("video").get<std::string>();
      const auto task = parse_task(obj.at("task").get<std::string>());
      if (!task) throw Error(ErrorCode::ConstraintViolation, where + "unknown task");
      s.task = *task;
      s.question = obj.at("question").get<std::string>();
      if (obj.contains("options")) s.options = obj.at("options").get<std::vector<std::string>>();
      const auto answer = parse_label(obj.at("answer").get<std::string>());
      if (!answer) throw Error(ErrorCode::ConstraintViolation, where + "unrecognized answer label");
      s.answer = *answer;
      for (const auto& t : obj.at("types").get<std::vector<std::string>>()) {
        const auto ty = parse_type(t);
        if (!ty) throw Error(ErrorCode::ConstraintViolation, where + "unknown type '" + t + "'");
        s.types.push_back(*ty);
      }
      if (obj.contains("adversarial")) s.adversarial = obj.at("adversarial").get<bool>();
      if (obj.contains("domain")) s.domain = obj.at("domain").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedLine, where + e.what());
    }
    try {
      validate_sample(s);
    } catch (const Error& e) {
      const std::string msg = e.what();
      throw Error(ErrorCode::ConstraintViolation, msg.starts_with(where) ? msg : where + msg);
    }
    if (!ids.insert(s.id).second) throw Error(ErrorCode::DuplicateId, where + "duplicate id '" + s.id + "'");
    if (warnings) {
      for (const auto& item : obj.items())
        if (!known.contains(item.key())) warnings->push_back(where + "ignoring unknown field '" + item.key() + "'");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string sample_to_json_line(const QASample& s, const std::string& video_ref) {
  nlohmann::ordered_json j;
  j["id"] = s.id;
  j["video"] = video_ref;
  j["task"] = std::string(task_name(s.task));
  j["question"] = s.question;
  if (format_of(s.task) == AnswerFormat::MultipleChoice) j["options"] = s.options;
  j["answer"] = std::string(label_name(s.answer));
  std::vector<std::string> types;
  for (auto t : s.types) types.emplace_back(type_name(t));
  j["types"] = types;
  j["adversarial"] = s.adversarial;
  j["domain"] = s.domain;
  return j.dump();
}

std::string format_prompt(const QASample& s) {
  std::string p = s.question;
  for (std::size_t i = 0; i < s.options.size(); ++i) {
    p += ' ';
    p += static_cast<char>('A' + i);
    p += ". ";
    p += s.options[i];
  }
  return p;
}

DatasetSplit split_dataset(const std::vector<QASample>& samples, std::uint64_t seed) {
  std::vector<std::string> videos;
  for (const auto& s : samples) videos.push_back(s.video.lexically_normal().string());
  std::sort(videos.begin(), videos.end());
  videos.erase(std::unique(videos.begin(), videos.end()), videos.end());
  if (videos.empty()) throw Error(ErrorCode::EmptyDataset, "no videos to split");

  Rng rng(seed);
  for (std::size_t i = videos.size(); i > 1; --i) std::swap(videos[i - 1], videos[rng.below(i)]);
  const std::size_t n = videos.size();
  const std::size_t n_train = n * 7 / 10, n_val = n * 2 / 10;
  std::map<std::string, int> part;
  for (std::size_t i = 0; i < n; ++i) part[videos[i]] = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);

  DatasetSplit split;
  for (const auto& s : samples) {
    switch (part.at(s.video.lexically_normal().string())) {
      case 0: split.train.push_back(s); break;
      case 1: split.val.push_back(s); break;
      default: split.test.push_back(s); break;
    }
  }
  return split;
}

}  // namespace tricd
