// Affine similarity group S_d: elements x -> a k x + b with a > 0, k in O(d).
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace affwalk {

class DimensionMismatch : public std::invalid_argument {
public:
    DimensionMismatch(int lhs, int rhs)
        : std::invalid_argument("dimension mismatch: " + std::to_string(lhs) + " vs " + std::to_string(rhs)) {}
};

inline void require_same_dim(int lhs, int rhs) {
    if (lhs != rhs) throw DimensionMismatch(lhs, rhs);
}

/// Max-entry deviation of k^T k from the identity.
template <typename Derived>
typename Derived::Scalar orthogonality_defect(const Eigen::MatrixBase<Derived>& k) {
    using Scalar = typename Derived::Scalar;
    const auto n = k.cols();
    return (k.transpose() * k - Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Identity(n, n))
        .cwiseAbs()
        .maxCoeff();
}

/// Nearest orthogonal matrix (orthogonal polar factor U V^T).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> nearest_orthogonal(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& k) {
    Eigen::JacobiSVD<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> svd(k, Eigen::ComputeFullU |
                                                                                       Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

/// An element (a, k, b) of S_d. The scale is held as log a so that long products
/// neither overflow nor underflow; a is exponentiated only when acting on points.
template <typename Scalar_>
class AffineElement {
public:
    using Scalar = Scalar_;
    /// Largest supported d. Storage is inline, so walks do not touch the heap.
    static constexpr int kMaxDim = 4;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

    /// Rotation drift is projected away once this many compositions have accumulated.
    static constexpr int kReorthonormalizePeriod = 64;

    AffineElement() : AffineElement(1) {}

    explicit AffineElement(int dim) : log_scale_(0) {
        check_dim(dim);
        rotation_ = Matrix::Identity(dim, dim);
        translation_ = Vector::Zero(dim);
    }

    template <typename RotationDerived, typename TranslationDerived>
    AffineElement(Scalar log_scale, const Eigen::MatrixBase<RotationDerived>& rotation,
                  const Eigen::MatrixBase<TranslationDerived>& translation, int depth = 0)
        : log_scale_(log_scale), depth_(depth) {
        if (rotation.rows() != rotation.cols()) throw std::invalid_argument("AffineElement: rotation not square");
        require_same_dim(static_cast<int>(rotation.rows()), static_cast<int>(translation.size()));
        check_dim(static_cast<int>(translation.size()));
        rotation_ = rotation;
        translation_ = translation;
    }

    static AffineElement identity(int dim) { return AffineElement(dim); }

    /// Convenience for k = I.
    template <typename Derived>
    static AffineElement scaling_translation(Scalar log_scale, const Eigen::MatrixBase<Derived>& translation) {
        const auto d = translation.size();
        return AffineElement(log_scale, Matrix::Identity(d, d), translation);
    }

    int dim() const { return static_cast<int>(translation_.size()); }
    Scalar log_scale() const { return log_scale_; }
    Scalar scale() const { return std::exp(log_scale_); }
    const Matrix& rotation() const { return rotation_; }
    const Vector& translation() const { return translation_; }
    /// Compositions since the rotation was last re-orthonormalized.
    int depth() const { return depth_; }

private:
    static void check_dim(int dim) {
        if (dim < 1 || dim > kMaxDim)
            throw std::invalid_argument("AffineElement: dimension must be in 1.." + std::to_string(kMaxDim));
    }

    Scalar log_scale_;
    Matrix rotation_;
    Vector translation_;
    int depth_ = 0;
};

using AffineElementd = AffineElement<double>;

/// (a1, k1, b1)(a2, k2, b2) = (a1 a2, k1 k2, a1 k1 b2 + b1).
template <typename Scalar>
AffineElement<Scalar> compose(const AffineElement<Scalar>& g1, const AffineElement<Scalar>& g2) {
    require_same_dim(g1.dim(), g2.dim());
    using Matrix = typename AffineElement<Scalar>::Matrix;
    using Vector = typename AffineElement<Scalar>::Vector;
    Matrix k = g1.rotation() * g2.rotation();
    Vector b = g1.scale() * (g1.rotation() * g2.translation()) + g1.translation();
    int depth = std::max(g1.depth(), g2.depth()) + 1;
    if (depth >= AffineElement<Scalar>::kReorthonormalizePeriod) {
        if (orthogonality_defect(k) > Scalar(1e-14)) k = nearest_orthogonal<Scalar>(k);
        depth = 0;
    }
    return AffineElement<Scalar>(g1.log_scale() + g2.log_scale(), k, b, depth);
}

template <typename Scalar>
AffineElement<Scalar> operator*(const AffineElement<Scalar>& g1, const AffineElement<Scalar>& g2) {
    return compose(g1, g2);
}

/// (a, k, b)^-1 = (1/a, k^T, -(1/a) k^T b).
template <typename Scalar>
AffineElement<Scalar> invert(const AffineElement<Scalar>& g) {
    typename AffineElement<Scalar>::Matrix kt = g.rotation().transpose();
    typename AffineElement<Scalar>::Vector b = -std::exp(-g.log_scale()) * (kt * g.translation());
    return AffineElement<Scalar>(-g.log_scale(), kt, b, g.depth());
}

/// g.x = a k x + b.
template <typename Scalar, typename Derived>
typename AffineElement<Scalar>::Vector act(const AffineElement<Scalar>& g, const Eigen::MatrixBase<Derived>& x) {
    require_same_dim(g.dim(), static_cast<int>(x.size()));
    return g.scale() * (g.rotation() * x) + g.translation();
}

template <typename Derived>
typename Derived::Scalar linf_norm(const Eigen::MatrixBase<Derived>& x) {
    return x.size() == 0 ? typename Derived::Scalar(0) : x.cwiseAbs().maxCoeff();
}

/// |log a| + log(1 + ||b||_inf); comparable to word length up to affine constants.
template <typename Scalar>
Scalar length_proxy(const AffineElement<Scalar>& g) {
    return std::abs(g.log_scale()) + std::log1p(linf_norm(g.translation()));
}

/// Max-entry distance between two elements, comparing log a, k and b.
template <typename Scalar>
Scalar element_distance(const AffineElement<Scalar>& g1, const AffineElement<Scalar>& g2) {
    require_same_dim(g1.dim(), g2.dim());
    Scalar d = std::abs(g1.log_scale() - g2.log_scale());
    d = std::max(d, (g1.rotation() - g2.rotation()).cwiseAbs().maxCoeff());
    d = std::max(d, linf_norm(g1.translation() - g2.translation()));
    return d;
}

/// Element (a, b) of S_1 acting on [0, inf) by s -> a s + b.
template <typename Scalar_>
struct S1Element {
    using Scalar = Scalar_;
    Scalar log_scale = 0;
    Scalar shift = 0;

    Scalar scale() const { return std::exp(log_scale); }
    Scalar act(Scalar s) const { return scale() * s + shift; }
};

using S1Elementd = S1Element<double>;

template <typename Scalar>
S1Element<Scalar> compose(const S1Element<Scalar>& g1, const S1Element<Scalar>& g2) {
    return {g1.log_scale + g2.log_scale, g1.scale() * g2.shift + g1.shift};
}

/// g_psi = (a, max{||b||_inf, 1}).
template <typename Scalar>
S1Element<Scalar> project_s1(const AffineElement<Scalar>& psi) {
    return {psi.log_scale(), std::max(linf_norm(psi.translation()), Scalar(1))};
}

}  // namespace affwalk
