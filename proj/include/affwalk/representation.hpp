// Finite-dimensional representations with a supplied flag: block-triangular
// verification, per-block scaling homomorphisms, orbit-span ranks and the
// scaling recursions for harmonic functions along powers of one element.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "affwalk/cayley.hpp"

namespace affwalk {

/// Letters are 1-based generator indices; -k stands for the inverse of generator k.
using Word = std::vector<int>;

template <typename Scalar>
struct FlagRepresentation {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    std::vector<int> block_sizes;
    std::vector<Matrix> generators;
    std::string basis_label = "standard";

    int dim() const {
        int n = 0;
        for (int s : block_sizes) n += s;
        return n;
    }
    int block_offset(std::size_t i) const {
        int off = 0;
        for (std::size_t j = 0; j < i; ++j) off += block_sizes[j];
        return off;
    }

    /// Throws unless the blocks are positive, sum to the matrix size and every
    /// generator is invertible.
    void validate() const;

    Matrix word_matrix(const Word& word) const;
};

using FlagRepresentationd = FlagRepresentation<double>;

/// diag(2, 1/2) with blocks {1, 1}: the integers acting by n -> diag(2^n, 2^-n).
FlagRepresentationd diagonal_integer_rep();
/// Rotations in 2 x 2 blocks with random upper coupling; every scaling is 1.
FlagRepresentationd rotation_block_rep(const std::vector<int>& block_sizes, int generators, std::uint64_t seed);
/// Diagonal blocks a k with a > 0 and k orthogonal, random entries above the
/// blocks and zeros below.
FlagRepresentationd random_type_s_rep(const std::vector<int>& block_sizes, int generators, std::uint64_t seed);

/// `count` words of length 1..max_length over `generators` letters and their inverses.
std::vector<Word> random_words(int generators, std::size_t count, int max_length, std::uint64_t seed);

struct BlockFormReport {
    bool pass = false;
    double max_violation = 0.0;  // largest |entry| below the block diagonal
    std::size_t words = 0;
    double tolerance = 1e-9;
};

BlockFormReport verify_block_form(const FlagRepresentationd& rep, const std::vector<Word>& words,
                                  double tolerance = 1e-9);

class SingularBlock : public std::runtime_error {
public:
    SingularBlock() : std::runtime_error("diagonal block is singular") {}
};

struct ScalingReport {
    /// scalings[w][i] = |det block_i(w)|^(1 / size_i).
    std::vector<std::vector<double>> scalings;
    /// max |a_i(v w) - a_i(v) a_i(w)| / (a_i(v) a_i(w)) over consecutive word pairs.
    double homomorphism_residual = 0.0;
    /// max over words and blocks of max |k^T k - I| with k = block / a.
    double orthogonality_residual = 0.0;
};

ScalingReport extract_scalings(const FlagRepresentationd& rep, const std::vector<Word>& words);

/// Number of singular values >= eps times the largest.
int eps_rank(const Eigen::MatrixXd& m, double eps);

/// eps_rank of [(g.f)(x)] = [f(g^-1 x)] over translators g and evaluation points x:
/// a lower bound on dim span(G.f).
int orbit_span_dim(const GroupPresentation& group, const std::function<double(const GroupElement&)>& f,
                   const std::vector<GroupElement>& translators, const std::vector<GroupElement>& points,
                   double eps = 1e-9);

struct RecursionRow {
    int n = 0;
    double scaling = 0.0;  // h(x^-n) = a^n h(1)
    double affine = 0.0;   // h(x^-n) = h(1) + (a^n - 1) / (a - 1) (h(x^-1) - h(1))
};

struct RecursionTable {
    double a = 1.0;
    std::vector<RecursionRow> rows;
    /// Least-squares slope of log |a^n h(1)| against n; log a for a != 1.
    double log_slope = 0.0;
    bool sub_exponential = false;  // a == 1
};

RecursionTable step_recursion_check(double a, double h1, double hx, const std::vector<int>& n_grid);

}  // namespace affwalk
