#pragma once

#include <string>
#include <string_view>

namespace folk {

// Porter (1980) suffix stripping for a single lowercase ASCII word.
std::string porter_stem(std::string_view word);

// Full term normalizer: lowercase, punctuation to spaces, stem every token,
// rejoin with single spaces. Empty input gives an empty string.
std::string stem(std::string_view term);

}  // namespace folk
