#include "coref/assignment.hpp"

#include <algorithm>
#include <limits>

namespace coref {

Assignment max_weight_assignment(
    const std::vector<std::vector<double>>& similarity) {
  const int rows = static_cast<int>(similarity.size());
  const int cols = rows == 0 ? 0 : static_cast<int>(similarity[0].size());
  Assignment out;
  out.row_to_col.assign(rows, -1);
  if (rows == 0 || cols == 0) return out;

  // Square cost matrix padded with zeros; minimizing the negated similarity.
  const int n = std::max(rows, cols);
  auto cost = [&](int r, int c) {
    if (r < rows && c < cols) return -similarity[r][c];
    return 0.0;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> min_slack(n + 1, inf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double slack = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (slack < min_slack[j]) {
          min_slack[j] = slack;
          way[j] = j0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (int j = 1; j <= n; ++j) {
    const int r = match[j] - 1;
    const int c = j - 1;
    if (r >= 0 && r < rows && c < cols) out.row_to_col[r] = c;
  }
  for (int r = 0; r < rows; ++r) {
    if (out.row_to_col[r] >= 0) out.total += similarity[r][out.row_to_col[r]];
  }
  return out;
}

}  // namespace coref
