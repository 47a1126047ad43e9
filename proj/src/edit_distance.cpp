#include "detmask/edit_distance.hpp"

#include <algorithm>
#include <vector>

namespace detmask {

std::size_t bounded_levenshtein(std::string_view a, std::string_view b,
                                std::size_t limit) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t over = limit + 1;
  if ((n > m ? n - m : m - n) > limit) return over;
  if (n == 0 || m == 0) return std::max(n, m);

  if (limit == 1) {
    if (n == m) {
      std::size_t mismatches = 0;
      for (std::size_t i = 0; i < n && mismatches < 2; ++i)
        mismatches += a[i] != b[i];
      return mismatches;
    }
    const auto longer = n > m ? a : b;
    const auto shorter = n > m ? b : a;
    std::size_t i = 0;
    while (i < shorter.size() && longer[i] == shorter[i]) ++i;
    return longer.substr(i + 1) == shorter.substr(i) ? 1 : 2;
  }

  // Rows are indexed by j in [0, m]; cells outside the band hold `over`.
  std::vector<std::size_t> prev(m + 1, over), cur(m + 1, over);
  for (std::size_t j = 0; j <= std::min(m, limit); ++j) prev[j] = j;

  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t lo = i > limit ? i - limit : 0;
    const std::size_t hi = std::min(m, i + limit);
    std::fill(cur.begin(), cur.end(), over);
    if (lo == 0) cur[0] = i;
    std::size_t row_min = lo == 0 ? cur[0] : over;
    for (std::size_t j = std::max<std::size_t>(lo, 1); j <= hi; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      const std::size_t del = prev[j] + 1;
      const std::size_t ins = cur[j - 1] + 1;
      cur[j] = std::min({sub, del, ins, over});
      row_min = std::min(row_min, cur[j]);
    }
    if (row_min >= over) return over;
    std::swap(prev, cur);
  }
  return std::min(prev[m], over);
}

}  // namespace detmask
