#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tricd/answer.hpp"
#include "tricd/dataset.hpp"

namespace tricd {

struct Prediction {
  Label pred = Label::Unparsed;
  Label gt = Label::Unparsed;
  Task task = Task::S_YNQA;
  std::vector<HallucinationType> types;
  std::size_t option_count = 0;
};

struct Tally {
  std::size_t correct = 0;
  std::size_t total = 0;
  // nullopt when total == 0
  std::optional<double> rate() const;
};

struct MacroScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t classes = 0;
};

struct EvalReport {
  std::string mode;
  Tally overall;
  std::size_t unparsed = 0;
  std::map<Task, Tally> per_task;
  Tally yes;  // YNQA samples whose label is Yes
  Tally no;
  std::map<Task, Tally> yes_per_task;
  std::map<Task, Tally> no_per_task;
  std::map<Task, MacroScores> macro;  // MCQA tasks present in the input
  std::map<HallucinationType, Tally> per_type;
};

// Accuracy, Yes/No accuracy and per-task macro precision / recall / F1.
// Macro classes are the letters seen as a label or a prediction in that task;
// a zero denominator scores 0. Unparsed is wrong and never a class.
EvalReport compute_metrics(const std::vector<Prediction>& preds);

}  // namespace tricd
