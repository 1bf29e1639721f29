#pragma once

#include <cstddef>
#include <vector>

#include "neuroembed/common.hpp"
#include "neuroembed/skeleton.hpp"

namespace neuroembed {

// Dense symmetric 0/1 adjacency over nodes in sorted-id order.
struct AdjacencyMatrix {
    std::size_t n = 0;
    MatD data;
};

AdjacencyMatrix adjacency(const NeuronGraph& g);

// L = I - D^{-1/2} A D^{-1/2}; isolated nodes get a zero row and column.
MatD normalized_laplacian(const AdjacencyMatrix& a);

struct SymmetricEigen {
    VecD values;   // ascending
    MatD vectors;  // column i pairs with values[i]
};

// Householder tridiagonalization followed by implicit QL with Wilkinson-style
// shifts. Throws ArgumentError on asymmetric input and NumericError if an
// eigenvalue fails to converge within the iteration cap.
SymmetricEigen eig_sym(const MatD& m);

enum class PeOrder { largest, smallest_nontrivial };
enum class SignMode { fixed, random };

struct PeOptions {
    PeOrder order = PeOrder::largest;
    SignMode sign = SignMode::fixed;
};

struct PositionalEncoding {
    std::size_t n = 0;
    std::size_t k = 0;
    MatD data;  // n x k, zero-padded when fewer than k eigenvectors exist
};

// Deterministic sign for an eigenvector: the entry of largest magnitude is made
// positive. When that maximum is shared by entries of opposite sign, the first
// tie breaker w with a non-negligible v . w decides the sign of v . w; failing
// that, the first non-negligible entry.
void canonicalize_sign(Eigen::Ref<VecD> v, const std::vector<VecD>& tie_breakers = {});

// Laplacian eigenvector encoding. Fixed signs follow canonicalize_sign, breaking
// ties by the soma entry, then by a fixed linear function of node positions. In random sign mode every column is flipped
// with probability 1/2 after canonicalization; `rng` is required then.
PositionalEncoding positional_encoding(const NeuronGraph& g, std::size_t k, const PeOptions& opts,
                                       Rng* rng = nullptr);

std::string to_string(PeOrder order);
PeOrder pe_order_from_string(const std::string& s);

} // namespace neuroembed
