#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace chartforge {

using TokenSeq = std::vector<std::string>;

// Shared normalizer for every text metric: ASCII-lowercase, then split on
// whitespace and punctuation. Punctuation is dropped; bytes >= 0x80 are kept
// as word characters so UTF-8 words survive intact.
TokenSeq normalize_tokens(std::string_view text);

// Tokenizer for source code: identifiers, numbers, string literals and
// operator/punctuation runs each become a token. Case is preserved.
TokenSeq code_tokens(std::string_view code);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);

}  // namespace chartforge
