#ifndef TISSUESCALE_TENSOR_HPP
#define TISSUESCALE_TENSOR_HPP

#include <Eigen/Dense>
#include <array>
#include <cmath>

namespace ts {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Fourth-order tensor in 2D with full index storage E[i][j][k][l].
/// Voigt layout used throughout: component order (11, 22, 12), engineering
/// shear on the strain side (gamma = 2 e12), so sigma_v = voigt() * eps_v.
class Tensor4 {
public:
    Tensor4() { c_.fill(0.0); }

    double& operator()(int i, int j, int k, int l) { return c_[idx(i, j, k, l)]; }
    double operator()(int i, int j, int k, int l) const { return c_[idx(i, j, k, l)]; }

    Tensor4& operator+=(const Tensor4& o) {
        for (int m = 0; m < 16; ++m) c_[m] += o.c_[m];
        return *this;
    }
    Tensor4 operator*(double s) const {
        Tensor4 r;
        for (int m = 0; m < 16; ++m) r.c_[m] = c_[m] * s;
        return r;
    }
    Tensor4& operator*=(double s) {
        for (int m = 0; m < 16; ++m) c_[m] *= s;
        return *this;
    }

    /// Contraction (E A)_ij = E_ijkl A_kl.
    Mat2 apply(const Mat2& a) const {
        Mat2 r = Mat2::Zero();
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k)
                    for (int l = 0; l < 2; ++l) r(i, j) += (*this)(i, j, k, l) * a(k, l);
        return r;
    }

    /// Quadratic form E A : A.
    double form(const Mat2& a) const {
        Mat2 ea = apply(a);
        return (ea.array() * a.array()).sum();
    }

    /// Voigt matrix D with sigma_v = D * (e11, e22, 2 e12).
    Mat3 voigt() const {
        static const int vi[3] = {0, 1, 0}, vj[3] = {0, 1, 1};
        Mat3 d;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) d(a, b) = (*this)(vi[a], vj[a], vi[b], vj[b]);
        return d;
    }

    /// Representation of the quadratic form in an orthonormal basis of
    /// symmetric matrices; eigenvalues of this matrix bound E A:A / |A|^2.
    Mat3 sym_form_matrix() const {
        const double s = std::sqrt(2.0);
        Mat3 m;
        m(0, 0) = (*this)(0, 0, 0, 0);
        m(1, 1) = (*this)(1, 1, 1, 1);
        m(2, 2) = 2.0 * (*this)(0, 1, 0, 1);
        m(0, 1) = m(1, 0) = (*this)(0, 0, 1, 1);
        m(0, 2) = m(2, 0) = s * (*this)(0, 0, 0, 1);
        m(1, 2) = m(2, 1) = s * (*this)(1, 1, 0, 1);
        return m;
    }

    double min_eigenvalue_sym() const {
        Eigen::SelfAdjointEigenSolver<Mat3> es(sym_form_matrix());
        return es.eigenvalues().minCoeff();
    }

    /// Max relative defect over the minor and major index symmetries.
    double symmetry_defect() const {
        double scale = 0.0, defect = 0.0;
        for (int m = 0; m < 16; ++m) scale = std::max(scale, std::abs(c_[m]));
        if (scale == 0.0) return 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k)
                    for (int l = 0; l < 2; ++l) {
                        double v = (*this)(i, j, k, l);
                        defect = std::max(defect, std::abs(v - (*this)(j, i, k, l)));
                        defect = std::max(defect, std::abs(v - (*this)(i, j, l, k)));
                        defect = std::max(defect, std::abs(v - (*this)(k, l, i, j)));
                    }
        return defect / scale;
    }

    static Tensor4 isotropic(double lambda, double mu) {
        Tensor4 e;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k)
                    for (int l = 0; l < 2; ++l)
                        e(i, j, k, l) = lambda * (i == j) * (k == l) +
                                        mu * ((i == k) * (j == l) + (i == l) * (j == k));
        return e;
    }

private:
    static int idx(int i, int j, int k, int l) { return ((i * 2 + j) * 2 + k) * 2 + l; }
    std::array<double, 16> c_;
};

inline Mat2 sym(const Mat2& g) { return 0.5 * (g + g.transpose()); }

/// Canonical basis tensor b_kl = e_k (x) e_l.
inline Mat2 basis_dyad(int k, int l) {
    Mat2 b = Mat2::Zero();
    b(k, l) = 1.0;
    return b;
}

} // namespace ts

#endif
