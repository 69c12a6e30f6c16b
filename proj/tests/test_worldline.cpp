#include "oracles.hpp"
#include "rnb/worldline.hpp"

#include <doctest.h>

#include <sstream>

using namespace rnb;

namespace {

WorldlineSample sine_sample(double t, double A = 0.3, double w = 2.0)
{
    const Vector3 x(A * std::sin(w * t), 0, 0), v(A * w * std::cos(w * t), 0, 0);
    const double acc = -A * w * w * std::sin(w * t);
    const double g = 1.0 / std::sqrt(1.0 - v.squaredNorm());
    const double gdot = g * g * g * v(0) * acc;
    const FourVector a = g * FourVector(gdot, gdot * v(0) + g * acc, 0, 0);
    WorldlineSample s = make_sample(t, 0.0, x, v, a, 1.0);
    s.s = std::nan("");
    return s;
}

WorldlineHistory sine_history(double h)
{
    std::vector<WorldlineSample> ss;
    const int n = static_cast<int>(std::llround(4.0 / h));
    for (int k = 0; k <= n; ++k)
        ss.push_back(sine_sample(-2.0 + k * h));
    return WorldlineHistory::from_samples({1, 0, 1, "s"}, 1.0, ss);
}

double sine_interp_error(double h)
{
    const WorldlineHistory H = sine_history(h);
    const HistoryView v(H);
    double err = 0.0;
    for (double t = -1.0; t < 1.0; t += 0.0137)
        err = std::max(err, std::abs(v.state_at_time(t).r(1) - sine_sample(t).r(1)));
    return err;
}

} // namespace

TEST_CASE("particle spec validation")
{
    CHECK_NOTHROW(ParticleSpec({1, 0, 1, "a"}).validate());
    CHECK_THROWS_AS(ParticleSpec({0, 1, 1, "a"}).validate(), Error);
    CHECK_THROWS_AS(ParticleSpec({1, 1, -1, "a"}).validate(), Error);
    CHECK(ParticleSpec({1, 1, 2, "a"}).em_mass(1.0) == 0.5);
}

TEST_CASE("inertial history is exact everywhere")
{
    const Vector3 x0(1, 2, 3), v0(0.3, -0.2, 0.1);
    const WorldlineHistory h = WorldlineHistory::inertial({1, 0, 1, "a"}, 2.0, 0.5, x0, v0);
    const HistoryView view(h);
    for (double t : {-10.0, -1.0, 0.0, 0.49}) {
        const WorldlineSample s = view.state_at_time(t);
        CHECK((s.r.tail<3>() - (x0 + v0 * (t - 0.5))).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(s.r(0) == 2.0 * t);
        CHECK((s.u - four_velocity(v0, 2.0)).cwiseAbs().maxCoeff() == 0.0);
        CHECK(s.a.isZero());
        CHECK(view.derivatives_at_time(t).adot.isZero());
    }
    CHECK_THROWS_AS(view.state_at_time(0.6), Error);
}

TEST_CASE("stored nodes are returned bit for bit")
{
    const WorldlineHistory H = sine_history(0.05);
    const HistoryView v(H);
    for (std::size_t k = 3; k < H.size(); k += 17) {
        const WorldlineSample& node = H.samples()[k];
        const WorldlineSample s = v.state_at_time(node.t);
        CHECK(s.t == node.t);
        CHECK(s.s == node.s);
        CHECK(s.r == node.r);
        CHECK(s.u == node.u);
        CHECK(s.a == node.a);
    }
}

TEST_CASE("interpolation converges at fourth order")
{
    const double e1 = sine_interp_error(0.04), e2 = sine_interp_error(0.02);
    const double ratio = e1 / e2;
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
}

TEST_CASE("interpolated velocity stays on the mass shell")
{
    const WorldlineHistory H = sine_history(0.01);
    const HistoryView v(H);
    for (double t = -1.0; t < 1.0; t += 0.0137) {
        const KinematicDerivatives k = v.derivatives_at_time(t);
        CHECK(std::abs(dot(k.sample.u, k.sample.u) - 1.0) < 1e-8);
        CHECK(std::abs(dot(k.sample.u, k.sample.a)) < 1e-6);
        CHECK(std::abs(k.sample.a(1) - sine_sample(t).a(1)) < 1e-5);
    }
}

TEST_CASE("proper time of uniform motion")
{
    const WorldlineHistory h6 = WorldlineHistory::inertial({1, 0, 1, "a"}, 1.0, 0.0, Vector3::Zero(), Vector3(0.6, 0, 0));
    CHECK(h6.proper_time_of(-2.0) == doctest::Approx(-1.6).epsilon(1e-14));
    const WorldlineHistory h0 = WorldlineHistory::inertial({1, 0, 1, "a"}, 3.0, 0.0, Vector3::Zero(), Vector3::Zero());
    CHECK(h0.proper_time_of(-2.0) == doctest::Approx(-6.0).epsilon(1e-14));

    // Sampled segment appended after the inertial prehistory.
    WorldlineHistory h = h6;
    for (double t : {0.5, 1.0, 2.0})
        h.append(make_sample(t, std::nan(""), Vector3(0.6 * t, 0, 0), Vector3(0.6, 0, 0), FourVector::Zero(), 1.0));
    CHECK(h.back().s == doctest::Approx(1.6).epsilon(1e-14));
    const HistoryView v(h);
    CHECK(v.proper_time_of(1.7) - v.proper_time_of(-1.5) == doctest::Approx(0.8 * 3.2).epsilon(1e-12));
    CHECK(v.time_at_proper_time(1.2) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("piecewise inertial history")
{
    // Two straight segments joined by a short smooth turn; the proper time matches the
    // segment formulas outside the turn.
    const double b1 = 0.3, b2 = 0.6, c = 1.0;
    std::vector<WorldlineSample> ss;
    for (int k = 0; k <= 10; ++k) {
        const double t = 0.1 * k;
        ss.push_back(make_sample(t, std::nan(""), Vector3(b1 * t, 0, 0), Vector3(b1, 0, 0), FourVector::Zero(), c));
    }
    ss.front().s = 0.0;
    const WorldlineHistory h1 = WorldlineHistory::from_samples({1, 0, 1, "a"}, c, ss);
    const double g1 = 1.0 / std::sqrt(1 - b1 * b1), g2 = 1.0 / std::sqrt(1 - b2 * b2);
    CHECK(h1.back().s == doctest::Approx(1.0 / g1).epsilon(1e-13));
    const WorldlineHistory h2 = WorldlineHistory::inertial({1, 0, 1, "a"}, c, 1.0, Vector3(b1, 0, 0), Vector3(b2, 0, 0), h1.back().s);
    CHECK(h2.proper_time_of(0.0) == doctest::Approx(h1.back().s - 1.0 / g2).epsilon(1e-12));
    CHECK(h1.proper_time_of(1.0) + (2.0 - 1.0) / g2 == doctest::Approx(1.0 / g1 + 1.0 / g2).epsilon(1e-10));
}

TEST_CASE("append rules")
{
    WorldlineHistory h = WorldlineHistory::inertial({1, 0, 1, "a"}, 1.0, 0.0, Vector3::Zero(), Vector3::Zero());
    h.append(make_sample(0.1, std::nan(""), Vector3::Zero(), Vector3::Zero(), FourVector::Zero(), 1.0));
    CHECK(h.size() == 2);
    CHECK_THROWS_AS(h.append(make_sample(0.1, std::nan(""), Vector3::Zero(), Vector3::Zero(), FourVector::Zero(), 1.0)),
                    Error);
    try {
        h.append(make_sample(0.1, std::nan(""), Vector3::Zero(), Vector3::Zero(), FourVector::Zero(), 1.0));
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonMonotonicTime);
    }
    WorldlineSample bad = make_sample(0.2, std::nan(""), Vector3::Zero(), Vector3::Zero(), FourVector::Zero(), 1.0);
    bad.u(0) = std::sqrt(1.01);
    try {
        h.append(bad);
        FAIL("expected ConstraintViolation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ConstraintViolation);
    }
    CHECK(h.size() == 2);
}

TEST_CASE("bounded histories refuse queries before the first sample")
{
    const WorldlineHistory H = sine_history(0.05);
    const HistoryView v(H);
    try {
        v.state_at_time(-2.5);
        FAIL("expected HistoryTooShort");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::HistoryTooShort);
    }
    try {
        v.state_at_time(2.5);
        FAIL("expected QueryBeyondPresent");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::QueryBeyondPresent);
    }
}

TEST_CASE("provisional tail extends the view")
{
    const WorldlineHistory h = WorldlineHistory::inertial({1, 0, 1, "a"}, 1.0, 0.0, Vector3::Zero(), Vector3(0.2, 0, 0));
    WorldlineSample tail = make_sample(0.1, std::nan(""), Vector3(0.02, 0, 0), Vector3(0.2, 0, 0), FourVector::Zero(), 1.0);
    const HistoryView v(h, tail);
    CHECK(v.present() == 0.1);
    CHECK(v.state_at_time(0.05).r(1) == doctest::Approx(0.01).epsilon(1e-14));
    CHECK_THROWS_AS(HistoryView(h).state_at_time(0.05), Error);
}

TEST_CASE("csv round trip")
{
    const WorldlineHistory H = sine_history(0.25);
    std::stringstream ss;
    write_csv(ss, H, "config_hash=0");
    const std::string text = ss.str();
    CHECK(text.rfind("# config_hash=0\nt,s,r0,r1,r2,r3,u0,u1,u2,u3,a0,a1,a2,a3\n", 0) == 0);
    const std::vector<WorldlineSample> back = read_csv(ss);
    REQUIRE(back.size() == H.size());
    for (std::size_t k = 0; k < back.size(); ++k) {
        CHECK(back[k].t == H.samples()[k].t);
        CHECK(back[k].s == H.samples()[k].s);
        CHECK(back[k].r == H.samples()[k].r);
        CHECK(back[k].u == H.samples()[k].u);
        CHECK(back[k].a == H.samples()[k].a);
    }
}
