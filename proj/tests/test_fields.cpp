#include "oracles.hpp"
#include "rnb/fields.hpp"

#include <doctest.h>

#include <limits>

using namespace rnb;

namespace {

const double NaN = std::numeric_limits<double>::quiet_NaN();

// Hyperbolic motion along x with proper acceleration alpha, c = 1, sampled on [t_begin, 0].
struct Hyperbolic {
    double alpha;
    FourVector r(double s) const
    {
        return FourVector(std::sinh(alpha * s) / alpha, (std::cosh(alpha * s) - 1) / alpha, 0, 0);
    }
    FourVector u(double s) const { return FourVector(std::cosh(alpha * s), std::sinh(alpha * s), 0, 0); }
    FourVector a(double s) const { return alpha * FourVector(std::sinh(alpha * s), std::cosh(alpha * s), 0, 0); }
    double s_of_t(double t) const { return std::asinh(alpha * t) / alpha; }

    WorldlineHistory history(const ParticleSpec& spec, double t_begin, double dt) const
    {
        std::vector<WorldlineSample> v;
        const int n = static_cast<int>(std::round(-t_begin / dt));
        for (int k = -n; k <= 0; ++k) {
            const double s = s_of_t(k * dt);
            v.push_back({k * dt, s, r(s), u(s), a(s)});
        }
        return WorldlineHistory::from_samples(spec, 1.0, v);
    }
};

// x = A sin(w t) along x, c = 1.
WorldlineHistory oscillating(const ParticleSpec& spec, double A, double w, double t_begin, double dt)
{
    std::vector<WorldlineSample> v;
    const int n = static_cast<int>(std::round(-t_begin / dt));
    for (int k = -n; k <= 0; ++k) {
        const double t = k * dt;
        const double x = A * std::sin(w * t), vx = A * w * std::cos(w * t), ax = -A * w * w * std::sin(w * t);
        const double g = 1 / std::sqrt(1 - vx * vx);
        const double gdot = g * g * g * vx * ax;
        const FourVector dudt(gdot, gdot * vx + g * ax, 0, 0);
        v.push_back({t, NaN, FourVector(t, x, 0, 0), FourVector(g, g * vx, 0, 0), g * dudt});
    }
    v.front().s = 0.0;
    WorldlineHistory h = WorldlineHistory::from_samples(spec, 1.0, {v.front()});
    for (std::size_t k = 1; k < v.size(); ++k)
        h.append(v[k]);
    return h;
}

WorldlineHistory at_rest(const Vector3& x, double q, double sigma)
{
    return WorldlineHistory::inertial({1, q, sigma, "p"}, 1.0, 0.0, x, Vector3::Zero());
}

// F_{mu nu} = d_mu A_nu - d_nu A_mu by central differences.
FaradayTensor curl(const std::function<FourVector(const FourVector&)>& A, const FourVector& x, double h)
{
    Matrix4 dA; // dA(mu, nu) = d_mu A_nu
    for (int mu = 0; mu < 4; ++mu) {
        FourVector e = FourVector::Zero();
        e(mu) = h;
        dA.row(mu) = ((A(x + e) - A(x - e)) / (2 * h)).transpose();
    }
    return FaradayTensor::from_matrix(dA - dA.transpose());
}

} // namespace

TEST_CASE("self tensor vanishes in uniform motion")
{
    const ParticleSpec spec{1, 1.3, 1.0, "p"};
    const Vector3 v(0.3, -0.2, 0.1);
    WorldlineHistory h = WorldlineHistory::inertial(spec, 1.0, 0.0, Vector3(1, 2, 3), v);
    for (int k = 1; k <= 200; ++k) {
        const double t = 0.01 * k;
        h.append(make_sample(t, NaN, Vector3(1, 2, 3) + v * t, v, FourVector::Zero(), 1.0));
    }
    for (double t : {0.0, 0.3, 1.2, 2.0})
        CHECK(self_faraday(HistoryView(h), t).max_abs() <= 1e-13);

    const WorldlineHistory neutral = WorldlineHistory::inertial({1, 0, 1, "n"}, 1.0, 0.0, Vector3::Zero(), v);
    CHECK(self_faraday(HistoryView(neutral), 0.0).max_abs() == 0.0);
}

TEST_CASE("self tensor matches a finite-difference derivative of the bracket")
{
    const Hyperbolic hyp{0.3};
    const double q = 0.8, sigma = 0.5;
    const WorldlineHistory h = hyp.history({1, q, sigma, "p"}, -5.0, 1e-3);
    const FaradayTensor F = self_faraday(HistoryView(h), 0.0);

    const FourVector X = hyp.r(0.0);
    const double sr = oracle::bisect(
        [&](double s) {
            const FourVector R = X - hyp.r(s);
            return dot(R, R) - sigma * sigma;
        },
        -3.0, -1e-9);
    auto bracket = [&](double s) {
        const FourVector R = X - hyp.r(s), u = hyp.u(s);
        const FourVector Rl = lower(R), ul = lower(u);
        Matrix4 W = ul * Rl.transpose() - Rl * ul.transpose();
        return Matrix4(W / dot(R, u));
    };
    const double ds = 1e-4;
    const Matrix4 dB = (bracket(sr + ds) - bracket(sr - ds)) / (2 * ds);
    const FourVector R = X - hyp.r(sr);
    const Matrix4 expected = -(2 * q / std::abs(dot(R, hyp.u(sr)))) * dB;
    CHECK(oracle::max_abs(F.matrix() - expected) / oracle::max_abs(expected) < 1e-6);
    CHECK(F.max_abs() > 1e-3);
}

TEST_CASE("binary term of a static source")
{
    const double q = 0.6, d = 3.0;
    for (double s : {0.5, 2.0}) {
        const WorldlineHistory src = at_rest(Vector3(d, 0, 0), q, s);
        const FaradayTensor H = binary_term(HistoryView(src), FourVector::Zero(), s);
        const Vector3 E = H.electric();
        CHECK(E.x() == doctest::Approx(-oracle::static_root_field(q, d, s)).epsilon(1e-12));
        CHECK(E.tail<2>().norm() < 1e-15);
        CHECK(H.magnetic().norm() < 1e-15);

        const FaradayTensor pair = binary_faraday(HistoryView(src), FourVector::Zero(), s, s);
        CHECK((pair.matrix() - 2.0 * H.matrix()).cwiseAbs().maxCoeff() == 0.0);
    }
    const WorldlineHistory src = at_rest(Vector3(d, 0, 0), q, 0.5);
    const FaradayTensor mixed = binary_faraday(HistoryView(src), FourVector::Zero(), 0.5, 2.0);
    CHECK(mixed.electric().x() ==
          doctest::Approx(-oracle::static_root_field(q, d, 0.5) - oracle::static_root_field(q, d, 2.0)).epsilon(1e-12));

    const WorldlineHistory neutral = at_rest(Vector3(d, 0, 0), 0.0, 0.5);
    CHECK(binary_faraday(HistoryView(neutral), FourVector::Zero(), 0.5, 0.7).max_abs() == 0.0);
}

TEST_CASE("point limit")
{
    const double q = 0.6, d = 3.0;
    const WorldlineHistory src = at_rest(Vector3(d, 0, 0), q, 1.0);
    const FaradayTensor P = binary_faraday_pointlimit(HistoryView(src), FourVector::Zero());
    CHECK(P.electric().x() == doctest::Approx(-2 * q / (d * d)).epsilon(1e-12));
    const double tiny = 1e-6 * d;
    const FaradayTensor near = binary_faraday(HistoryView(src), FourVector::Zero(), tiny, tiny);
    CHECK(oracle::max_abs(near.matrix() - P.matrix()) / P.max_abs() < 1e-4);
}

TEST_CASE("total tensor is the sum of its parts")
{
    const double q1 = 0.5, q2 = -0.7, d = 2.0, s = 0.8;
    const WorldlineHistory a = at_rest(Vector3::Zero(), q1, s);
    const WorldlineHistory b = at_rest(Vector3(d, 0, 0), q2, s);
    const std::vector<HistoryView> views{HistoryView(a), HistoryView(b)};
    const FieldEvaluation ev = total_faraday(views, 0, 0.0, SelfForceMode::Exact, ExternalField::none());
    CHECK(ev.F.electric().x() == doctest::Approx(-2 * oracle::static_root_field(q2, d, s)).epsilon(1e-12));
    CHECK(ev.max_delay == doctest::Approx(std::sqrt(d * d + s * s)).epsilon(1e-12));

    const Vector3 E(0.1, -0.2, 0.3), B(0.05, 0.0, -0.4);
    const std::vector<HistoryView> alone{HistoryView(a)};
    const FieldEvaluation ext = total_faraday(alone, 0, 0.0, SelfForceMode::Exact, ExternalField::uniform(E, B));
    CHECK(oracle::max_abs(ext.F.matrix() - FaradayTensor::from_fields(E, B).matrix()) < 1e-15);
}

TEST_CASE("effective potential generates the total tensor")
{
    const Hyperbolic hyp{0.3};
    const WorldlineHistory a = hyp.history({1, 0.8, 0.5, "a"}, -8.0, 1e-3);
    const WorldlineHistory b =
        WorldlineHistory::inertial({1, -0.6, 0.9, "b"}, 1.0, 0.0, Vector3(0.5, 2.0, 0), Vector3(0, -0.2, 0.1));
    const std::vector<HistoryView> views{HistoryView(a), HistoryView(b)};
    const ExternalField ext = ExternalField::uniform(Vector3(0.1, 0, 0.2), Vector3(0, 0.3, 0));
    const FourVector X = hyp.r(hyp.s_of_t(-1.0));
    const FaradayTensor F = curl([&](const FourVector& x) { return effective_potential(views, 0, x, ext); }, X, 1e-5);

    FaradayTensor expected = ext.faraday(X) + self_faraday_at(views[0], X);
    expected += binary_faraday(views[1], X, 0.5, 0.9);
    CHECK(oracle::max_abs(F.matrix() - expected.matrix()) / expected.max_abs() < 1e-6);
}

TEST_CASE("asymptotic self force")
{
    CHECK(ParticleSpec{1, 1, 2, "p"}.em_mass(1.0) == doctest::Approx(0.5));

    const WorldlineHistory rest = at_rest(Vector3::Zero(), 1.0, 0.5);
    CHECK(asymptotic_self_force(HistoryView(rest), 0.0, 0.5).norm() == 0.0);

    const Hyperbolic hyp{0.3};
    const double q = 0.8, sigma = 0.5;
    const WorldlineHistory h = hyp.history({1, q, sigma, "p"}, -5.0, 1e-3);
    const FourVector g = raise(asymptotic_self_force(HistoryView(h), 0.0, sigma));
    const DelayRoot root = self_delay(HistoryView(h), 0.0, sigma);
    const double sr = hyp.s_of_t(-root.t_ret);
    // hyperbolic motion: the derivative term vanishes, leaving -m_em c a
    CHECK((g + (q * q / sigma) * hyp.a(sr)).norm() < 1e-8);

    const WorldlineHistory osc = oscillating({1, q, sigma, "p"}, 0.3, 1.0, -6.0, 1e-3);
    for (double t : {-2.0, -1.0, 0.0}) {
        const DelayRoot rt = self_delay(HistoryView(osc), t, sigma);
        const KinematicDerivatives k = HistoryView(osc).derivatives_at_time(t - rt.t_ret);
        const FourVector gf = raise(asymptotic_self_force(HistoryView(osc), t, sigma));
        CHECK(std::abs(dot(gf, k.sample.u)) < 1e-10);
        const FourVector gprime = gf + (q * q / sigma) * k.sample.a;
        CHECK(std::abs(dot(gprime, k.sample.u)) < 1e-10);
    }
}
