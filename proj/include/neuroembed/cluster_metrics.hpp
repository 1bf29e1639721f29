#pragma once

#include <vector>

#include "neuroembed/common.hpp"

namespace neuroembed {

// Adjusted Rand index under the permutation model. Two labelings that both put
// every sample in a single cluster (zero denominator) score 1.
double ari(const std::vector<int>& a, const std::vector<int>& b);

struct ConfusionMatrix {
    std::vector<int> row_labels;  // sorted distinct labels of a
    std::vector<int> col_labels;  // sorted distinct labels of b
    MatD percent;                 // row-normalized, each non-empty row sums to 100
};

ConfusionMatrix confusion(const std::vector<int>& a, const std::vector<int>& b);

} // namespace neuroembed
