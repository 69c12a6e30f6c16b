#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace rnb {

// Contravariant components (r^0 = ct first).
template <typename Scalar>
using FourVectorT = Eigen::Matrix<Scalar, 4, 1>;

// Both indices covariant.
template <typename Scalar>
using Matrix4T = Eigen::Matrix<Scalar, 4, 4>;

template <typename Scalar>
using Vector3T = Eigen::Matrix<Scalar, 3, 1>;

typedef FourVectorT<double> FourVector;
typedef Matrix4T<double> Matrix4;
typedef Vector3T<double> Vector3;

template <typename Scalar>
inline Matrix4T<Scalar> metric()
{
    return Eigen::Matrix<Scalar, 4, 1>(1, -1, -1, -1).asDiagonal();
}

template <typename Scalar>
inline Scalar dot(const FourVectorT<Scalar>& a, const FourVectorT<Scalar>& b)
{
    return a(0) * b(0) - a(1) * b(1) - a(2) * b(2) - a(3) * b(3);
}

// Raising and lowering are the same sign flip of the spatial part.
template <typename Scalar>
inline FourVectorT<Scalar> lower(const FourVectorT<Scalar>& v)
{
    return FourVectorT<Scalar>(v(0), -v(1), -v(2), -v(3));
}

template <typename Scalar>
inline FourVectorT<Scalar> raise(const FourVectorT<Scalar>& v)
{
    return lower(v);
}

template <typename Scalar>
inline FourVectorT<Scalar> make_four(Scalar x0, const Vector3T<Scalar>& x)
{
    return FourVectorT<Scalar>(x0, x(0), x(1), x(2));
}

template <typename Scalar>
inline bool all_finite(const FourVectorT<Scalar>& v)
{
    return v.allFinite();
}

// 4-velocity of a particle moving with coordinate velocity v.
template <typename Scalar>
inline FourVectorT<Scalar> four_velocity(const Vector3T<Scalar>& v, Scalar c)
{
    const Vector3T<Scalar> beta = v / c;
    const Scalar gamma = Scalar(1) / std::sqrt(Scalar(1) - beta.squaredNorm());
    return make_four(gamma, Vector3T<Scalar>(gamma * beta));
}

template <typename Scalar>
class BoostT {
public:
    explicit BoostT(const Vector3T<Scalar>& beta) : beta_(beta)
    {
        const Scalar b2 = beta.squaredNorm();
        if (!beta.allFinite() || !(b2 < Scalar(1)))
            throw std::invalid_argument("boost: |beta| must be < 1");
        gamma_ = Scalar(1) / std::sqrt(Scalar(1) - b2);
    }

    const Vector3T<Scalar>& beta() const { return beta_; }
    Scalar gamma() const { return gamma_; }
    BoostT inverse() const { return BoostT(Vector3T<Scalar>(-beta_)); }

    // Lambda^mu_nu acting on contravariant components.
    Matrix4T<Scalar> matrix() const
    {
        Matrix4T<Scalar> L = Matrix4T<Scalar>::Identity();
        const Scalar b2 = beta_.squaredNorm();
        L(0, 0) = gamma_;
        for (int i = 0; i < 3; ++i) {
            L(0, i + 1) = gamma_ * beta_(i);
            L(i + 1, 0) = gamma_ * beta_(i);
            for (int j = 0; j < 3; ++j) {
                if (b2 > Scalar(0))
                    L(i + 1, j + 1) += (gamma_ - Scalar(1)) * beta_(i) * beta_(j) / b2;
            }
        }
        return L;
    }

private:
    Vector3T<Scalar> beta_;
    Scalar gamma_;
};

typedef BoostT<double> Boost;

// Active boost: the rest 4-velocity maps to a particle moving with +beta.
template <typename Scalar>
inline FourVectorT<Scalar> boost(const FourVectorT<Scalar>& v, const BoostT<Scalar>& b)
{
    return b.matrix() * v;
}

template <typename Scalar>
class FaradayTensorT {
public:
    FaradayTensorT() : m_(Matrix4T<Scalar>::Zero()) {}

    // Antisymmetrizes the input; the stored matrix satisfies F + F^T = 0 exactly.
    static FaradayTensorT from_matrix(const Matrix4T<Scalar>& m)
    {
        FaradayTensorT f;
        for (int mu = 0; mu < 4; ++mu)
            for (int nu = mu + 1; nu < 4; ++nu) {
                const Scalar x = (m(mu, nu) - m(nu, mu)) / Scalar(2);
                f.m_(mu, nu) = x;
                f.m_(nu, mu) = -x;
            }
        return f;
    }

    // F_{0k} = E_k, F_{ij} = -eps_{ijk} B_k.
    static FaradayTensorT from_fields(const Vector3T<Scalar>& E, const Vector3T<Scalar>& B)
    {
        FaradayTensorT f;
        for (int k = 0; k < 3; ++k)
            f.set(0, k + 1, E(k));
        f.set(1, 2, -B(2));
        f.set(1, 3, B(1));
        f.set(2, 3, -B(0));
        return f;
    }

    // u_mu W_nu - u_nu W_mu for covariant u, W.
    static FaradayTensorT wedge(const FourVectorT<Scalar>& a, const FourVectorT<Scalar>& b)
    {
        FaradayTensorT f;
        for (int mu = 0; mu < 4; ++mu)
            for (int nu = mu + 1; nu < 4; ++nu)
                f.set(mu, nu, a(mu) * b(nu) - a(nu) * b(mu));
        return f;
    }

    void set(int mu, int nu, Scalar x)
    {
        m_(mu, nu) = x;
        m_(nu, mu) = -x;
    }

    Scalar operator()(int mu, int nu) const { return m_(mu, nu); }
    const Matrix4T<Scalar>& matrix() const { return m_; }

    Vector3T<Scalar> electric() const { return Vector3T<Scalar>(m_(0, 1), m_(0, 2), m_(0, 3)); }
    Vector3T<Scalar> magnetic() const { return Vector3T<Scalar>(-m_(2, 3), m_(1, 3), -m_(1, 2)); }

    FaradayTensorT& operator+=(const FaradayTensorT& o)
    {
        m_ += o.m_;
        return *this;
    }
    friend FaradayTensorT operator+(FaradayTensorT a, const FaradayTensorT& b) { return a += b; }
    friend FaradayTensorT operator-(const FaradayTensorT& a, const FaradayTensorT& b)
    {
        FaradayTensorT f;
        f.m_ = a.m_ - b.m_;
        return f;
    }
    friend FaradayTensorT operator*(Scalar s, const FaradayTensorT& a)
    {
        FaradayTensorT f;
        f.m_ = s * a.m_;
        return f;
    }

    Scalar max_abs() const { return m_.cwiseAbs().maxCoeff(); }

    // Components in the frame boosted by b (covariant transformation).
    FaradayTensorT boosted(const BoostT<Scalar>& b) const
    {
        const Matrix4T<Scalar> eta = metric<Scalar>();
        const Matrix4T<Scalar> Linv_cov = eta * b.matrix() * eta;
        FaradayTensorT f;
        f.m_ = Linv_cov * m_ * Linv_cov.transpose();
        return from_matrix(f.m_);
    }

private:
    Matrix4T<Scalar> m_;
};

typedef FaradayTensorT<double> FaradayTensor;

// w_mu = F_{mu nu} u^nu, covariant. For u = (1,0,0,0), raise(w) has spatial part E.
template <typename Scalar>
inline FourVectorT<Scalar> contract_force(const FaradayTensorT<Scalar>& F, const FourVectorT<Scalar>& u)
{
    return F.matrix() * u;
}

} // namespace rnb
