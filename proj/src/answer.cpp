#include "tricd/answer.hpp"

#include <cctype>
#include <string>

namespace tricd {

std::string_view label_name(Label label) {
  switch (label) {
    case Label::Yes: return "Yes";
    case Label::No: return "No";
    case Label::A: return "A";
    case Label::B: return "B";
    case Label::C: return "C";
    case Label::D: return "D";
    case Label::E: return "E";
    case Label::F: return "F";
    case Label::Unparsed: return "Unparsed";
  }
  return "Unparsed";
}

std::optional<Label> parse_label(std::string_view text) {
  std::string s;
  for (char c : text) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "yes") return Label::Yes;
  if (s == "no") return Label::No;
  if (s.size() == 1 && s[0] >= 'a' && s[0] <= 'f') return letter_label(static_cast<std::size_t>(s[0] - 'a'));
  return std::nullopt;
}

Label letter_label(std::size_t option_index) {
  return option_index < 6 ? static_cast<Label>(static_cast<int>(Label::A) + static_cast<int>(option_index))
                          : Label::Unparsed;
}

std::optional<std::size_t> letter_index(Label label) {
  const int v = static_cast<int>(label);
  if (v >= static_cast<int>(Label::A) && v <= static_cast<int>(Label::F))
    return static_cast<std::size_t>(v - static_cast<int>(Label::A));
  return std::nullopt;
}

Label extract_answer(std::string_view text, AnswerFormat format) {
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isalnum(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && std::isalnum(static_cast<unsigned char>(text[j]))) ++j;
    std::string word;
    for (std::size_t k = i; k < j; ++k)
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[k]))));
    if (format == AnswerFormat::YesNo) {
      if (word == "yes") return Label::Yes;
      if (word == "no") return Label::No;
    } else if (word.size() == 1 && word[0] >= 'a' && word[0] <= 'f') {
      const bool end_ok = j == text.size() || text[j] == '.' || text[j] == ')' || text[j] == ':' ||
                          std::isspace(static_cast<unsigned char>(text[j])) || text[j] == ',';
      if (end_ok) return letter_label(static_cast<std::size_t>(word[0] - 'a'));
    }
    i = j;
  }
  return Label::Unparsed;
}

}  // namespace tricd
