#pragma once

#include <vector>

namespace coref {

struct Assignment {
  // row_to_col[r] is the column matched to row r, or -1 when unmatched.
  std::vector<int> row_to_col;
  double total = 0.0;
};

// Maximum-weight one-to-one matching of a (possibly rectangular) similarity
// matrix via the O(n^3) Hungarian method with row/column potentials. The
// total is summed over matched rows in row order.
Assignment max_weight_assignment(const std::vector<std::vector<double>>& similarity);

}  // namespace coref
