#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tricd/answer.hpp"

namespace tricd {

enum class Task { S_YNQA, C_YNQA, S_MCQA, C_MCQA };
inline constexpr Task kAllTasks[] = {Task::S_YNQA, Task::C_YNQA, Task::S_MCQA, Task::C_MCQA};

enum class HallucinationType { Object, Scene, Event, Action, Relation, Attribute, Temporal, Camera };
inline constexpr HallucinationType kAllTypes[] = {
    HallucinationType::Object,   HallucinationType::Scene,    HallucinationType::Event,
    HallucinationType::Action,   HallucinationType::Relation, HallucinationType::Attribute,
    HallucinationType::Temporal, HallucinationType::Camera};

std::string_view task_name(Task task);
std::optional<Task> parse_task(std::string_view name);
std::string_view type_name(HallucinationType type);
std::optional<HallucinationType> parse_type(std::string_view name);
AnswerFormat format_of(Task task);
bool is_compositional(Task task);

struct QASample {
  std::string id;
  std::filesystem::path video;  // resolved against the dataset file's directory
  Task task = Task::S_YNQA;
  std::string question;
  std::vector<std::string> options;
  Label answer = Label::Unparsed;
  std::vector<HallucinationType> types;
  bool adversarial = false;
  std::string domain = "generated";
};

// Throws ConstraintViolation describing the first broken rule.
void validate_sample(const QASample& sample);

// One JSON object per line; blank lines are skipped. Unknown fields are
// reported through `warnings` when given. Throws MalformedLine, DuplicateId,
// ConstraintViolation (all with 1-based line numbers), MissingFile.
std::vector<QASample> load_dataset(const std::filesystem::path& path,
                                   std::vector<std::string>* warnings = nullptr);

// Canonical JSONL record; `video_ref` is written verbatim.
std::string sample_to_json_line(const QASample& sample, const std::string& video_ref);

// Question plus lettered options, as shown to the backbone.
std::string format_prompt(const QASample& sample);

struct DatasetSplit {
  std::vector<QASample> train, val, test;
};

// Shuffles distinct videos with the seed and assigns floor(0.7 n) / floor(0.2 n)
// / rest of them to train / val / test; samples follow their video.
DatasetSplit split_dataset(const std::vector<QASample>& samples, std::uint64_t seed);

}  // namespace tricd
