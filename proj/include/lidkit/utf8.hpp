#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lidkit::utf8 {

inline constexpr char32_t kReplacement = U'�';

/// Decodes UTF-8 into Unicode scalar values. Ill-formed sequences (overlong forms,
/// surrogates, truncated or stray bytes) become U+FFFD, one per maximal invalid
/// subpart, so decoding never fails.
std::u32string decode(std::string_view bytes);

void append(std::string& out, char32_t cp);
std::string encode(std::u32string_view text);

/// Equivalent to encode(decode(bytes)).
std::string sanitize(std::string_view bytes);

/// Number of scalar values decode() would produce.
std::size_t length(std::string_view bytes);

}  // namespace lidkit::utf8
