#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace tricd {

enum class Label { Yes, No, A, B, C, D, E, F, Unparsed };

enum class AnswerFormat { YesNo, MultipleChoice };

std::string_view label_name(Label label);
// "Yes"/"No"/"A".."F", case-insensitive. Returns nullopt otherwise.
std::optional<Label> parse_label(std::string_view text);
Label letter_label(std::size_t option_index);
// Option index of a letter label, or nullopt for Yes/No/Unparsed.
std::optional<std::size_t> letter_index(Label label);

// YesNo: first standalone case-insensitive "yes" or "no".
// MultipleChoice: first standalone letter A-F, optionally followed by '.',
// ')' or ':'. Unparsed when nothing matches.
Label extract_answer(std::string_view text, AnswerFormat format);

}  // namespace tricd
