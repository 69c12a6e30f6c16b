#include "oracles.hpp"
#include "rnb/scenarios.hpp"

#include <doctest.h>

#include <random>

using namespace rnb;

namespace {

CanonicalState random_state(int n, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> U(-2, 2);
    CanonicalState x(8 * n);
    for (int k = 0; k < x.size(); ++k)
        x(k) = U(rng);
    return x;
}

// Interacting asymmetric pair after a short run.
SystemState interacting_pair(double scale = 1.0)
{
    std::vector<ParticleInit> ps(2);
    ps[0].spec = {1.0, 0.3 * scale, 0.5, "a"};
    ps[1].spec = {2.0, -0.5 * scale, 0.7, "b"};
    ps[0].x0 = Vector3(-1, 0, 0);
    ps[0].v0 = Vector3(0.1, 0.2, 0);
    ps[1].x0 = Vector3(1, 0.5, 0);
    ps[1].v0 = Vector3(-0.05, 0, 0.1);
    SystemState st = seed(ps, 0.0, 1.0, ExternalField::none(), SelfForceMode::Exact, 0.01);
    run(st, 1.0);
    return st;
}

Configuration configuration_of(const SystemState& st)
{
    const FrozenHistoryContext ctx(st.histories, ExternalField::none(), st.c);
    return Configuration{ctx.canonical_state(), st.histories, ExternalField::none(), st.c};
}

std::vector<Vector3> positions(const SystemState& st)
{
    std::vector<Vector3> x;
    for (const auto& h : st.histories)
        x.push_back(h.back().r.tail<3>());
    return x;
}

std::vector<Vector3> momenta(const SystemState& st, const FrozenHistoryContext& ctx)
{
    std::vector<Vector3> P;
    for (std::size_t i = 0; i < st.size(); ++i) {
        const FourVector A = ctx.present_potentials()[i];
        const ParticleSpec& sp = st.histories[i].spec();
        P.push_back(sp.m0 * st.c * st.histories[i].back().u.tail<3>() + (sp.q / st.c) * Vector3(-A(1), -A(2), -A(3)));
    }
    return P;
}

} // namespace

TEST_CASE("effective momentum")
{
    const FourVector P = effective_momentum(FourVector(1, 0, 0, 0), {2, 0.5, 1, "p"}, FourVector::Zero(), 1.0);
    CHECK(P == FourVector(2, 0, 0, 0));
    const FourVector u = four_velocity(Vector3(0.3, -0.1, 0.2), 1.0);
    const FourVector A(0.4, 0.1, -0.2, 0.3);
    CHECK(effective_momentum(u, {1.5, 0, 1, "p"}, A, 1.0) == FourVector(1.5 * lower(u)));
    CHECK(oracle::max_abs(effective_momentum(u, {1.5, 0.2, 1, "p"}, A, 2.0) - (3.0 * lower(u) + 0.1 * A)) < 1e-15);
    try {
        effective_momentum(FourVector(2, 0, 0, 0), {1, 0, 1, "p"}, FourVector::Zero(), 1.0);
        FAIL("expected ConstraintViolation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ConstraintViolation);
    }
}

TEST_CASE("effective hamiltonian")
{
    const ParticleSpec spec{2, 0, 1, "p"};
    const FrozenHistoryContext ctx({WorldlineHistory::inertial(spec, 1.0, 0.0, Vector3::Zero(), Vector3::Zero())},
                                   ExternalField::none(), 1.0);
    CHECK(effective_hamiltonian(FourVector::Zero(), FourVector(2, 0, 0, 0), 0, ctx) == doctest::Approx(1.0));
    const FourVector u = four_velocity(Vector3(0.6, 0, 0), 1.0);
    CHECK(effective_hamiltonian(FourVector::Zero(), 2.0 * lower(u), 0, ctx) == doctest::Approx(1.0).epsilon(1e-14));

    const SystemState st = interacting_pair();
    const FrozenHistoryContext c2(st.histories, ExternalField::none(), 1.0);
    const CanonicalState x = c2.canonical_state();
    double sum = 0.0;
    for (int i = 0; i < 2; ++i)
        sum += effective_hamiltonian(r_of(x, i), P_of(x, i), i, c2);
    CHECK(std::abs(system_hamiltonian(x, c2) - sum) < 1e-14);
    // on shell each term is m0 c / 2
    CHECK(sum == doctest::Approx(1.5).epsilon(1e-9));

    CanonicalState bad(16 + 8);
    bad.setZero();
    CHECK_THROWS_AS(system_hamiltonian(bad, c2), Error);
}

TEST_CASE("fundamental brackets")
{
    std::mt19937_64 rng(3);
    const CanonicalState x = random_state(2, rng);
    const int dim = 16;
    CHECK(poisson_bracket(PhaseFunction::coordinate(r_index(0, 2), dim), PhaseFunction::coordinate(P_index(0, 2), dim),
                          x) == 1.0);
    CHECK(poisson_bracket(PhaseFunction::coordinate(r_index(0, 2), dim), PhaseFunction::coordinate(P_index(1, 2), dim),
                          x) == 0.0);
    double worst = 0.0;
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) {
            const double v = poisson_bracket(PhaseFunction::coordinate(a, dim), PhaseFunction::coordinate(b, dim), x);
            const bool a_r = (a % 8) < 4, b_r = (b % 8) < 4;
            double expected = 0.0;
            if (a / 8 == b / 8 && a % 4 == b % 4 && a_r != b_r)
                expected = a_r ? 1.0 : -1.0;
            worst = std::max(worst, std::abs(v - expected));
        }
    CHECK(worst < 1e-14);
}

TEST_CASE("bracket algebra")
{
    std::mt19937_64 rng(5);
    const int dim = 16;
    const CanonicalState x = random_state(2, rng);
    auto quad = [&](std::uint64_t seed, double scale = 1.0) {
        std::mt19937_64 g(seed);
        std::normal_distribution<double> N(0.0, scale);
        Quadratic q;
        q.c0 = N(g);
        q.g = Eigen::VectorXd::NullaryExpr(dim, [&](Eigen::Index) { return N(g); });
        const Eigen::MatrixXd B = Eigen::MatrixXd::NullaryExpr(dim, dim, [&](Eigen::Index, Eigen::Index) { return N(g); });
        q.Q = 0.5 * (B + B.transpose());
        return PhaseFunction::quadratic(q);
    };
    const PhaseFunction a = quad(1), b = quad(2), c = quad(3);
    const BracketAlgebraReport exact = check_bracket_algebra(x, {{a, b, c}});
    CHECK(exact.max() < 1e-10);

    // finite differences; rounding floor ~ eps |f| / (h h_nested), so keep |f| of order one
    auto numeric = [](const PhaseFunction& f) { return PhaseFunction::numeric([f](const CanonicalState& z) { return f(z); }); };
    const BracketAlgebraReport fd =
        check_bracket_algebra(x, {{numeric(quad(1, 0.1)), numeric(quad(2, 0.1)), numeric(quad(3, 0.1))}});
    MESSAGE("fd residuals " << fd.antisymmetry << " " << fd.linearity << " " << fd.leibniz << " " << fd.jacobi);
    CHECK(fd.max() < 1e-5);

    const GeneratorSet G = unconstrained_generators(2);
    std::vector<PhaseTriple> gens;
    gens.push_back({G.p[0], G.M[0][1], G.M[1][2]});
    gens.push_back({G.M[0][3], G.M[2][3], G.p[2]});
    gens.push_back({G.M[1][2], G.M[2][3], G.M[3][1]});
    CHECK(check_bracket_algebra(x, gens).jacobi < 1e-10);

    // directly against the analytic gradient: [a, b] = grad a^T J grad b
    const Eigen::VectorXd ga = a.gradient(x), gb = b.gradient(x);
    double direct = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int mu = 0; mu < 4; ++mu)
            direct += ga(r_index(i, mu)) * gb(P_index(i, mu)) - ga(P_index(i, mu)) * gb(r_index(i, mu));
    CHECK(std::abs(poisson_bracket(a, b, x) - direct) < 1e-12 * (1 + std::abs(direct)));
}

TEST_CASE("Lorentz conditions of the unconstrained generators")
{
    std::mt19937_64 rng(9);
    const GeneratorSet G = unconstrained_generators(2);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k)
        worst = std::max(worst, lorentz_conditions(G, random_state(2, rng)).max());
    CHECK(worst < 1e-11);

    const GeneratorSet G1 = unconstrained_generators(1);
    const CanonicalState x = random_state(1, rng);
    const FourVector rl = lower(r_of(x, 0)), P = P_of(x, 0);
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu)
            CHECK(std::abs(G1.M[mu][nu](x) - (rl(mu) * P(nu) - rl(nu) * P(mu))) < 1e-14);
}

TEST_CASE("translation generator")
{
    std::mt19937_64 rng(4);
    const CanonicalState x = random_state(2, rng);
    const FourVector a_cov(0.1, -0.2, 0.3, 0.05);
    const PhaseFunction F = unconstrained_generators(2).translation(a_cov);
    const FourVector a_up = raise(a_cov);
    for (int i = 0; i < 2; ++i)
        for (int mu = 0; mu < 4; ++mu) {
            CHECK(poisson_bracket(PhaseFunction::coordinate(r_index(i, mu), 16), F, x) ==
                  doctest::Approx(-a_up(mu)).epsilon(1e-14));
            CHECK(poisson_bracket(PhaseFunction::coordinate(P_index(i, mu), 16), F, x) == 0.0);
        }
}

TEST_CASE("canonical flow step")
{
    const ParticleSpec spec{1.3, 0, 1, "p"};
    const Vector3 v(0.2, -0.3, 0.1);
    const FrozenHistoryContext ctx({WorldlineHistory::inertial(spec, 1.0, 0.0, Vector3(1, 0, 0), v)},
                                   ExternalField::none(), 1.0);
    const CanonicalState x = ctx.canonical_state();
    const CanonicalState y = canonical_flow_step(x, ctx, {0.01});
    const FourVector u = four_velocity(v, 1.0);
    CHECK(oracle::max_abs(r_of(y, 0) - r_of(x, 0) - 0.01 * u) < 1e-15);
    CHECK(P_of(y, 0) == P_of(x, 0));

    // static interacting pair: dP equals (q/c) dA_nu/dr^mu u^nu ds
    const WorldlineHistory a = WorldlineHistory::inertial({1, 0.4, 0.5, "a"}, 1.0, 0.0, Vector3::Zero(), Vector3::Zero());
    const WorldlineHistory b = WorldlineHistory::inertial({1, -0.6, 0.5, "b"}, 1.0, 0.0, Vector3(2, 0, 0), Vector3::Zero());
    const FrozenHistoryContext pc({a, b}, ExternalField::none(), 1.0);
    const CanonicalState xs = pc.canonical_state();
    const double ds = 1e-3;
    const CanonicalState ys = canonical_flow_step(xs, pc, {ds, ds});
    const Matrix4 dA = pc.potential_jacobian(0, r_of(xs, 0));
    const FourVector expected = ds * 0.4 * dA.transpose() * FourVector(1, 0, 0, 0);
    CHECK(oracle::max_abs(P_of(ys, 0) - P_of(xs, 0) - expected) < 1e-9 * (1 + expected.norm()));
    // dP_x is the Coulomb-like attraction towards b: positive x component
    CHECK((P_of(ys, 0) - P_of(xs, 0))(1) < 0.0);

    // against the integrator: du over a short step agrees to O(ds^2)
    auto gap = [&](double dt) {
        std::vector<ParticleInit> ps{ParticleInit{{1, 0.4, 0.5, "a"}, Vector3::Zero(), Vector3::Zero(), std::nullopt},
                                     ParticleInit{{1, -0.6, 0.5, "b"}, Vector3(2, 0, 0), Vector3::Zero(), std::nullopt}};
        SystemState st = seed(ps, 0.0, 1.0, ExternalField::none(), SelfForceMode::Exact, dt);
        step(st);
        const CanonicalState z = canonical_flow_step(xs, pc, {dt, dt});
        const FourVector du_canon = raise(FourVector(P_of(z, 0) - P_of(xs, 0))) / 1.0;
        const FourVector du_dyn = st.histories[0].back().u - FourVector(1, 0, 0, 0);
        return oracle::max_abs(du_canon - du_dyn);
    };
    const double g1 = gap(0.02), g2 = gap(0.01);
    MESSAGE("canonical vs integrator " << g1 << " " << g2);
    CHECK(g2 < 0.3 * g1);
}

TEST_CASE("instant form")
{
    const SystemState free_st = [] {
        std::vector<ParticleInit> ps{ParticleInit{{1, 0, 0.5, "a"}, Vector3(0, 0, 0), Vector3(0.1, 0, 0), std::nullopt},
                                     ParticleInit{{2, 0, 0.5, "b"}, Vector3(1, 0, 0), Vector3(0, 0.2, 0), std::nullopt}};
        return seed(ps, 0.0, 1.0, ExternalField::none(), SelfForceMode::Exact, 0.01);
    }();
    const FrozenHistoryContext fctx(free_st.histories, ExternalField::none(), 1.0);
    const std::vector<Vector3> fP = momenta(free_st, fctx);
    const InstantFormReport f = instant_form_constrained(positions(free_st), fP, fctx, 0.01);
    CHECK(f.p0 == doctest::Approx(std::sqrt(1 + fP[0].squaredNorm()) + std::sqrt(4 + fP[1].squaredNorm())).epsilon(1e-14));
    CHECK(f.max_bracket == 0.0);

    const SystemState st = interacting_pair();
    const FrozenHistoryContext ctx(st.histories, ExternalField::none(), 1.0);
    const InstantFormReport r = instant_form_constrained(positions(st), momenta(st, ctx), ctx, 0.01);
    MESSAGE("bracket " << r.max_bracket << " increment mismatch " << r.increment_mismatch);
    CHECK(r.max_bracket > 1e-8);
    CHECK(r.increment_mismatch < 1e-6);
    const InstantFormReport again = instant_form_constrained(positions(st), momenta(st, ctx), ctx, 0.01);
    CHECK(std::abs(again.max_bracket - r.max_bracket) < 1e-10);

    const FrozenHistoryContext ext_ctx(st.histories, ExternalField::uniform(Vector3(0.1, 0, 0), Vector3::Zero()), 1.0);
    CHECK_THROWS_AS(instant_form_constrained(positions(st), momenta(st, ctx), ext_ctx, 0.01), Error);
}

TEST_CASE("non-local brackets")
{
    const SystemState st = interacting_pair();
    const Configuration cfg = configuration_of(st);
    const GeneratorSet G = unconstrained_generators(2);
    const PhaseFunction T = G.translation(FourVector(0.3, 0.1, -0.2, 0.4));
    Matrix4 b = Matrix4::Zero();
    b(0, 1) = 0.2;
    b(1, 0) = -0.2;
    b(1, 2) = 0.1;
    b(2, 1) = -0.1;
    const PhaseFunction L = G.lorentz(b);

    // delta argument between particle 0 now and a past sample of particle 1
    const std::size_t k = st.histories[1].size() / 2;
    const double sigma = 0.5;
    const HistoryFunctional xi = [&](const Configuration& c) {
        const FourVector R = r_of(c.x, 0) - c.histories[1].samples()[k].r;
        return dot(R, R) - sigma * sigma;
    };
    CHECK(std::abs(nonlocal_bracket(xi, cfg, T)) < 1e-9);
    CHECK(std::abs(nonlocal_bracket(xi, cfg, L)) < 1e-9);
    const PhaseFunction xi_local = PhaseFunction::numeric([&](const CanonicalState& x) {
        Configuration c = cfg;
        c.x = x;
        return xi(c);
    });
    CHECK(std::abs(poisson_bracket(xi_local, T, cfg.x)) > 1e-3);

    // a purely local functional: both brackets agree
    const HistoryFunctional loc = [](const Configuration& c) { return P_of(c.x, 0)(0) * r_of(c.x, 1)(1); };
    const PhaseFunction loc_f = PhaseFunction::numeric([](const CanonicalState& x) { return P_of(x, 0)(0) * r_of(x, 1)(1); });
    CHECK(std::abs(nonlocal_bracket(loc, cfg, L) - poisson_bracket(loc_f, L, cfg.x)) < 1e-6);

    const double nlT = nonlocal_bracket(hamiltonian_functional, cfg, T);
    const double nlL = nonlocal_bracket(hamiltonian_functional, cfg, L);
    const FrozenHistoryContext ctx(st.histories, ExternalField::none(), st.c);
    const double lT = poisson_bracket(hamiltonian_function(ctx), T, cfg.x);
    const double lL = poisson_bracket(hamiltonian_function(ctx), L, cfg.x);
    MESSAGE("H_N: nonlocal " << nlT << " " << nlL << " local " << lT << " " << lL);
    CHECK(std::abs(nlT) < 1e-8);
    CHECK(std::abs(nlL) < 1e-8);
    CHECK(std::max(std::abs(lT), std::abs(lL)) > 1e-6);
}

TEST_CASE("hamiltonian gradient matches finite differences")
{
    const SystemState st = interacting_pair();
    const FrozenHistoryContext ctx(st.histories, ExternalField::none(), st.c);
    const CanonicalState x = ctx.canonical_state();
    const PhaseFunction H = hamiltonian_function(ctx);
    const Eigen::VectorXd g = H.gradient(x);
    const Eigen::VectorXd n =
        PhaseFunction::numeric([&](const CanonicalState& z) { return system_hamiltonian(z, ctx); }, 1e-5).gradient(x);
    CHECK((g - n).cwiseAbs().maxCoeff() < 1e-6 * (1 + g.cwiseAbs().maxCoeff()));
}
