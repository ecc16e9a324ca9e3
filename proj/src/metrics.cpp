#include "tricd/metrics.hpp"

#include <set>

#include "tricd/error.hpp"

namespace tricd {

std::optional<double> Tally::rate() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(total);
}

namespace {

MacroScores macro_scores(const std::vector<const Prediction*>& items) {
  std::set<Label> classes;
  for (const auto* p : items) {
    if (p->gt != Label::Unparsed) classes.insert(p->gt);
    if (p->pred != Label::Unparsed) classes.insert(p->pred);
  }
  MacroScores m;
  m.classes = classes.size();
  if (classes.empty()) return m;
  for (Label c : classes) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto* p : items) {
      if (p->pred == c && p->gt == c) ++tp;
      else if (p->pred == c) ++fp;
      else if (p->gt == c) ++fn;
    }
    const double prec = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double rec = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.precision += prec;
    m.recall += rec;
    m.f1 += prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
  }
  const auto k = static_cast<double>(classes.size());
  m.precision /= k;
  m.recall /= k;
  m.f1 /= k;
  return m;
}

}  // namespace

EvalReport compute_metrics(const std::vector<Prediction>& preds) {
  if (preds.empty()) throw Error(ErrorCode::EmptyDataset, "no predictions to score");
  EvalReport r;
  std::map<Task, std::vector<const Prediction*>> mc;
  for (const auto& p : preds) {
    const bool ok = p.pred != Label::Unparsed && p.pred == p.gt;
    if (p.pred == Label::Unparsed) ++r.unparsed;
    auto bump = [ok](Tally& t) {
      ++t.total;
      if (ok) ++t.correct;
    };
    bump(r.overall);
    bump(r.per_task[p.task]);
    for (auto ty : p.types) bump(r.per_type[ty]);
    if (format_of(p.task) == AnswerFormat::YesNo) {
      if (p.gt == Label::Yes) {
        bump(r.yes);
        bump(r.yes_per_task[p.task]);
      } else if (p.gt == Label::No) {
        bump(r.no);
        bump(r.no_per_task[p.task]);
      }
    } else {
      mc[p.task].push_back(&p);
    }
  }
  for (const auto& [task, items] : mc) r.macro[task] = macro_scores(items);
  return r;
}

}  // namespace tricd
