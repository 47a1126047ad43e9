#pragma once

#include <cstddef>
#include <string_view>

namespace detmask {

// Levenshtein distance (unit insert/delete/substitute) restricted to the
// diagonal band |i - j| <= limit. Returns the exact distance when it is
// <= limit and limit + 1 otherwise.
std::size_t bounded_levenshtein(std::string_view a, std::string_view b,
                                std::size_t limit);

}  // namespace detmask
