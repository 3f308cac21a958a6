#include "affwalk/representation.hpp"

#include <cmath>
#include <stdexcept>

#include "affwalk/random.hpp"
#include "affwalk/stats.hpp"

namespace affwalk {

template <typename Scalar>
void FlagRepresentation<Scalar>::validate() const {
    const int n = dim();
    for (int s : block_sizes)
        if (s < 1) throw std::invalid_argument("FlagRepresentation: block sizes must be positive");
    if (generators.empty()) throw std::invalid_argument("FlagRepresentation: no generators");
    for (const auto& g : generators) {
        if (g.rows() != n || g.cols() != n) throw std::invalid_argument("FlagRepresentation: generator size mismatch");
        if (!Eigen::FullPivLU<Matrix>(g).isInvertible())
            throw std::invalid_argument("FlagRepresentation: generator is not invertible");
    }
}

template <typename Scalar>
typename FlagRepresentation<Scalar>::Matrix FlagRepresentation<Scalar>::word_matrix(const Word& word) const {
    Matrix m = Matrix::Identity(dim(), dim());
    for (int letter : word) {
        const auto k = static_cast<std::size_t>(std::abs(letter)) - 1;
        if (letter == 0 || k >= generators.size()) throw std::out_of_range("word letter out of range");
        if (letter > 0)
            m = m * generators[k];
        else
            m = m * generators[k].inverse();
    }
    return m;
}

template struct FlagRepresentation<double>;

namespace {

Eigen::MatrixXd random_orthogonal(int n, Rng& rng) {
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = standard_normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ();
    // fix column signs so the law is Haar
    const Eigen::VectorXd d = qr.matrixQR().diagonal();
    for (int j = 0; j < n; ++j)
        if (d(j) < 0) q.col(j) = -q.col(j);
    return q;
}

FlagRepresentationd block_rep(const std::vector<int>& block_sizes, int generators, std::uint64_t seed,
                              bool scaled) {
    FlagRepresentationd rep;
    rep.block_sizes = block_sizes;
    rep.basis_label = scaled ? "type-s" : "rotation-blocks";
    const int n = rep.dim();
    Rng rng = make_stream(seed, 0);
    for (int g = 0; g < generators; ++g) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        for (std::size_t b = 0; b < block_sizes.size(); ++b) {
            const int off = rep.block_offset(b), size = block_sizes[b];
            const double a = scaled ? std::exp(0.5 * standard_normal(rng)) : 1.0;
            m.block(off, off, size, size) = a * random_orthogonal(size, rng);
            for (int i = 0; i < off; ++i)
                for (int j = off; j < off + size; ++j) m(i, j) = 0.5 * standard_normal(rng);
        }
        rep.generators.push_back(std::move(m));
    }
    rep.validate();
    return rep;
}

}  // namespace

FlagRepresentationd diagonal_integer_rep() {
    FlagRepresentationd rep;
    rep.block_sizes = {1, 1};
    rep.basis_label = "diagonal";
    Eigen::MatrixXd g(2, 2);
    g << 2.0, 0.0, 0.0, 0.5;
    rep.generators.push_back(g);
    return rep;
}

FlagRepresentationd rotation_block_rep(const std::vector<int>& block_sizes, int generators, std::uint64_t seed) {
    return block_rep(block_sizes, generators, seed, false);
}

FlagRepresentationd random_type_s_rep(const std::vector<int>& block_sizes, int generators, std::uint64_t seed) {
    return block_rep(block_sizes, generators, seed, true);
}

std::vector<Word> random_words(int generators, std::size_t count, int max_length, std::uint64_t seed) {
    if (generators < 1 || max_length < 1) throw std::invalid_argument("random_words: bad arguments");
    Rng rng = make_stream(seed, 0);
    std::uniform_int_distribution<int> length(1, max_length), letter(1, generators);
    std::vector<Word> words(count);
    for (auto& w : words) {
        const int len = length(rng);
        for (int i = 0; i < len; ++i) w.push_back(uniform01(rng) < 0.5 ? letter(rng) : -letter(rng));
    }
    return words;
}

BlockFormReport verify_block_form(const FlagRepresentationd& rep, const std::vector<Word>& words, double tolerance) {
    rep.validate();
    BlockFormReport report;
    report.tolerance = tolerance;
    report.words = words.size();
    for (const auto& w : words) {
        const Eigen::MatrixXd m = rep.word_matrix(w);
        for (std::size_t b = 0; b + 1 < rep.block_sizes.size(); ++b) {
            const int end = rep.block_offset(b) + rep.block_sizes[b];
            // rows below block b, columns of block b
            const auto below = m.block(end, rep.block_offset(b), m.rows() - end, rep.block_sizes[b]);
            if (below.size() > 0) report.max_violation = std::max(report.max_violation, below.cwiseAbs().maxCoeff());
        }
    }
    report.pass = report.max_violation <= tolerance;
    return report;
}

ScalingReport extract_scalings(const FlagRepresentationd& rep, const std::vector<Word>& words) {
    rep.validate();
    ScalingReport report;
    const std::size_t nb = rep.block_sizes.size();
    std::vector<Eigen::MatrixXd> mats;
    for (const auto& w : words) {
        mats.push_back(rep.word_matrix(w));
        const Eigen::MatrixXd& m = mats.back();
        std::vector<double> a(nb);
        for (std::size_t b = 0; b < nb; ++b) {
            const int off = rep.block_offset(b), size = rep.block_sizes[b];
            const Eigen::MatrixXd block = m.block(off, off, size, size);
            const double det = std::abs(block.determinant());
            if (!(det > 0.0) || !std::isfinite(det)) throw SingularBlock();
            a[b] = std::pow(det, 1.0 / size);
            const Eigen::MatrixXd k = block / a[b];
            const double ortho =
                (k.transpose() * k - Eigen::MatrixXd::Identity(size, size)).cwiseAbs().maxCoeff();
            report.orthogonality_residual = std::max(report.orthogonality_residual, ortho);
        }
        report.scalings.push_back(std::move(a));
    }
    for (std::size_t j = 0; j + 1 < words.size(); ++j) {
        const Eigen::MatrixXd vw = mats[j] * mats[j + 1];
        for (std::size_t b = 0; b < nb; ++b) {
            const int off = rep.block_offset(b), size = rep.block_sizes[b];
            const double a_vw = std::pow(std::abs(vw.block(off, off, size, size).determinant()), 1.0 / size);
            const double prod = report.scalings[j][b] * report.scalings[j + 1][b];
            report.homomorphism_residual = std::max(report.homomorphism_residual, std::abs(a_vw - prod) / prod);
        }
    }
    return report;
}

int eps_rank(const Eigen::MatrixXd& m, double eps) {
    if (m.size() == 0) return 0;
    const Eigen::VectorXd s = Eigen::BDCSVD<Eigen::MatrixXd>(m).singularValues();
    if (!(s(0) > 0.0)) return 0;
    return static_cast<int>((s.array() >= eps * s(0)).count());
}

int orbit_span_dim(const GroupPresentation& group, const std::function<double(const GroupElement&)>& f,
                   const std::vector<GroupElement>& translators, const std::vector<GroupElement>& points, double eps) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(translators.size()), static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < translators.size(); ++i) {
        const GroupElement inv = group.inverse(translators[i]);
        for (std::size_t j = 0; j < points.size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f(group.multiply(inv, points[j]));
    }
    return eps_rank(m, eps);
}

RecursionTable step_recursion_check(double a, double h1, double hx, const std::vector<int>& n_grid) {
    if (!(a > 0.0)) throw std::invalid_argument("step_recursion_check: a must be positive");
    RecursionTable table;
    table.a = a;
    table.sub_exponential = a == 1.0;
    std::vector<double> ns, logs;
    for (int n : n_grid) {
        RecursionRow row;
        row.n = n;
        const double an = std::pow(a, n);
        row.scaling = an * h1;
        // (a^n - 1) / (a - 1) tends to n as a -> 1
        const double geometric = a == 1.0 ? n : (an - 1.0) / (a - 1.0);
        row.affine = h1 + geometric * (hx - h1);
        table.rows.push_back(row);
        if (h1 != 0.0) {
            ns.push_back(n);
            logs.push_back(std::log(std::abs(row.scaling)));
        }
    }
    if (ns.size() >= 2) table.log_slope = fit_line(ns, logs).slope;
    return table;
}

}  // namespace affwalk
