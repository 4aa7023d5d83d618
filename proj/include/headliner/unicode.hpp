#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace headliner::uni {

// Decodes UTF-8 into codepoints. Invalid byte sequences become U+FFFD.
std::u32string decode_utf8(std::string_view s);

std::string encode_utf8(const std::u32string& cps);

// Canonical composition for Latin/Greek/Cyrillic base+mark pairs
// (e.g. U+0438 U+0306 -> U+0439). Not a full NFC implementation: marks
// are composed left to right against the generated pair table, which
// covers the precomposed characters of those blocks.
std::u32string compose_canonical(const std::u32string& cps);

char32_t to_lower(char32_t c);

bool is_space(char32_t c);
bool is_letter(char32_t c);
bool is_digit(char32_t c);
bool is_combining_mark(char32_t c);

}  // namespace headliner::uni
