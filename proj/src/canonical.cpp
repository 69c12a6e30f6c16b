#include "rnb/canonical.hpp"

#include <cmath>

namespace rnb {

namespace {

Eigen::VectorXd fd_gradient(const PhaseFunction::ValueFn& f, const CanonicalState& x, double step)
{
    Eigen::VectorXd g(x.size());
    CanonicalState y = x;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double h = step * (1.0 + std::abs(x(k)));
        y(k) = x(k) + h;
        const double fp = f(y);
        y(k) = x(k) - h;
        const double fm = f(y);
        y(k) = x(k);
        g(k) = (fp - fm) / (2.0 * h);
    }
    return g;
}

// (J v)_r = v_P, (J v)_P = -v_r, so a^T J b = symplectic_product(a, b).
Eigen::VectorXd apply_J(const Eigen::VectorXd& v)
{
    Eigen::VectorXd out(v.size());
    for (Eigen::Index i = 0; i < v.size() / 8; ++i) {
        out.segment<4>(8 * i) = v.segment<4>(8 * i + 4);
        out.segment<4>(8 * i + 4) = -v.segment<4>(8 * i);
    }
    return out;
}

Eigen::MatrixXd J_matrix(Eigen::Index dim)
{
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim / 8; ++i)
        for (int mu = 0; mu < 4; ++mu) {
            J(8 * i + mu, 8 * i + 4 + mu) = 1.0;
            J(8 * i + 4 + mu, 8 * i + mu) = -1.0;
        }
    return J;
}

double eta(int mu) { return mu == 0 ? 1.0 : -1.0; }

} // namespace

PhaseFunction PhaseFunction::numeric(ValueFn f, double fd_step)
{
    PhaseFunction p;
    p.value_ = std::move(f);
    p.fd_step_ = fd_step;
    return p;
}

PhaseFunction PhaseFunction::analytic(ValueFn f, GradientFn grad)
{
    PhaseFunction p;
    p.value_ = std::move(f);
    p.grad_ = std::move(grad);
    return p;
}

PhaseFunction PhaseFunction::quadratic(Quadratic q)
{
    PhaseFunction p;
    p.quad_ = q;
    p.value_ = [q](const CanonicalState& x) { return q.c0 + q.g.dot(x) + 0.5 * x.dot(q.Q * x); };
    return p;
}

PhaseFunction PhaseFunction::coordinate(int index, int dim)
{
    Quadratic q;
    q.g = Eigen::VectorXd::Zero(dim);
    q.g(index) = 1.0;
    q.Q = Eigen::MatrixXd::Zero(dim, dim);
    return quadratic(q);
}

Eigen::VectorXd PhaseFunction::gradient(const CanonicalState& x) const
{
    if (quad_)
        return quad_->g + quad_->Q * x;
    if (grad_)
        return grad_(x);
    if (fd_step_ > 0.0 && value_)
        return fd_gradient(value_, x, fd_step_);
    throw Error(ErrorKind::GradientUnavailable, "phase function has no gradient");
}

PhaseFunction operator+(const PhaseFunction& a, const PhaseFunction& b)
{
    if (a.quad_ && b.quad_)
        return PhaseFunction::quadratic({a.quad_->c0 + b.quad_->c0, a.quad_->g + b.quad_->g, a.quad_->Q + b.quad_->Q});
    auto f = [a, b](const CanonicalState& x) { return a(x) + b(x); };
    if (a.has_analytic_gradient() && b.has_analytic_gradient())
        return PhaseFunction::analytic(f, [a, b](const CanonicalState& x) -> Eigen::VectorXd {
            return a.gradient(x) + b.gradient(x);
        });
    return PhaseFunction::numeric(f, std::max(a.fd_step_, b.fd_step_));
}

PhaseFunction operator*(double s, const PhaseFunction& a)
{
    if (a.quad_)
        return PhaseFunction::quadratic({s * a.quad_->c0, s * a.quad_->g, s * a.quad_->Q});
    auto f = [s, a](const CanonicalState& x) { return s * a(x); };
    if (a.has_analytic_gradient())
        return PhaseFunction::analytic(f, [s, a](const CanonicalState& x) -> Eigen::VectorXd {
            return s * a.gradient(x);
        });
    return PhaseFunction::numeric(f, a.fd_step_);
}

PhaseFunction product(const PhaseFunction& a, const PhaseFunction& b)
{
    auto f = [a, b](const CanonicalState& x) { return a(x) * b(x); };
    if (a.has_analytic_gradient() && b.has_analytic_gradient())
        return PhaseFunction::analytic(f, [a, b](const CanonicalState& x) -> Eigen::VectorXd {
            return a(x) * b.gradient(x) + b(x) * a.gradient(x);
        });
    return PhaseFunction::numeric(f, std::max(a.fd_step_, b.fd_step_));
}

double symplectic_product(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size() / 8; ++i)
        for (int mu = 0; mu < 4; ++mu)
            s += a(8 * i + mu) * b(8 * i + 4 + mu) - a(8 * i + 4 + mu) * b(8 * i + mu);
    return s;
}

double poisson_bracket(const PhaseFunction& eta_f, const PhaseFunction& xi, const CanonicalState& x)
{
    return symplectic_product(eta_f.gradient(x), xi.gradient(x));
}

PhaseFunction bracket_function(const PhaseFunction& a, const PhaseFunction& b, double fd_step)
{
    if (a.quadratic_form() && b.quadratic_form()) {
        const Quadratic& q1 = *a.quadratic_form();
        const Quadratic& q2 = *b.quadratic_form();
        const Eigen::MatrixXd J = J_matrix(q1.g.size());
        Quadratic q;
        q.c0 = symplectic_product(q1.g, q2.g);
        q.g = q1.Q * apply_J(q2.g) - q2.Q * apply_J(q1.g);
        q.Q = q1.Q * J * q2.Q - q2.Q * J * q1.Q;
        return PhaseFunction::quadratic(q);
    }
    return PhaseFunction::numeric([a, b](const CanonicalState& x) { return poisson_bracket(a, b, x); }, fd_step);
}

BracketAlgebraReport check_bracket_algebra(const CanonicalState& x, const std::vector<PhaseTriple>& triples,
                                           double nested_fd_step)
{
    BracketAlgebraReport r;
    const double al = 1.3, be = -0.7;
    for (const auto& t : triples) {
        const double ab = poisson_bracket(t.a, t.b, x);
        r.antisymmetry = std::max(r.antisymmetry, std::abs(ab + poisson_bracket(t.b, t.a, x)));
        const double lin = poisson_bracket(al * t.a + be * t.b, t.c, x) - al * poisson_bracket(t.a, t.c, x) -
                           be * poisson_bracket(t.b, t.c, x);
        r.linearity = std::max(r.linearity, std::abs(lin));
        const double leib =
            poisson_bracket(product(t.a, t.b), t.c, x) - t.a(x) * poisson_bracket(t.b, t.c, x) -
            t.b(x) * poisson_bracket(t.a, t.c, x);
        r.leibniz = std::max(r.leibniz, std::abs(leib));
        const double jac = poisson_bracket(bracket_function(t.a, t.b, nested_fd_step), t.c, x) +
                           poisson_bracket(bracket_function(t.b, t.c, nested_fd_step), t.a, x) +
                           poisson_bracket(bracket_function(t.c, t.a, nested_fd_step), t.b, x);
        r.jacobi = std::max(r.jacobi, std::abs(jac));
    }
    return r;
}

GeneratorSet unconstrained_generators(int n)
{
    const int dim = 8 * n;
    GeneratorSet G;
    for (int mu = 0; mu < 4; ++mu) {
        Quadratic q;
        q.g = Eigen::VectorXd::Zero(dim);
        q.Q = Eigen::MatrixXd::Zero(dim, dim);
        for (int i = 0; i < n; ++i)
            q.g(P_index(i, mu)) = 1.0;
        G.p[mu] = PhaseFunction::quadratic(q);
    }
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu) {
            Quadratic q;
            q.g = Eigen::VectorXd::Zero(dim);
            q.Q = Eigen::MatrixXd::Zero(dim, dim);
            if (mu != nu) {
                for (int i = 0; i < n; ++i) {
                    // r_mu P_nu - r_nu P_mu with r_mu = eta_mu mu r^mu
                    q.Q(r_index(i, mu), P_index(i, nu)) += eta(mu);
                    q.Q(P_index(i, nu), r_index(i, mu)) += eta(mu);
                    q.Q(r_index(i, nu), P_index(i, mu)) -= eta(nu);
                    q.Q(P_index(i, mu), r_index(i, nu)) -= eta(nu);
                }
            }
            G.M[mu][nu] = PhaseFunction::quadratic(q);
        }
    return G;
}

PhaseFunction GeneratorSet::translation(const FourVector& a_cov) const
{
    PhaseFunction F = (-eta(0) * a_cov(0)) * p[0];
    for (int mu = 1; mu < 4; ++mu)
        F = F + (-eta(mu) * a_cov(mu)) * p[mu];
    return F;
}

PhaseFunction GeneratorSet::lorentz(const Matrix4& b) const
{
    PhaseFunction F = 0.0 * p[0];
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = mu + 1; nu < 4; ++nu)
            F = F + (eta(mu) * eta(nu) * 0.5 * (b(mu, nu) - b(nu, mu))) * M[mu][nu];
    return F;
}

LorentzResiduals lorentz_conditions(const GeneratorSet& g, const CanonicalState& x)
{
    LorentzResiduals r;
    auto e = [](int a, int b) { return a == b ? eta(a) : 0.0; };
    std::array<double, 4> p;
    std::array<std::array<double, 4>, 4> M;
    for (int mu = 0; mu < 4; ++mu) {
        p[mu] = g.p[mu](x);
        for (int nu = 0; nu < 4; ++nu)
            M[mu][nu] = g.M[mu][nu](x);
    }
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu) {
            r.pp = std::max(r.pp, std::abs(poisson_bracket(g.p[mu], g.p[nu], x)));
            for (int al = 0; al < 4; ++al) {
                const double lhs = poisson_bracket(g.M[mu][nu], g.p[al], x);
                const double rhs = e(mu, al) * p[nu] - e(nu, al) * p[mu];
                r.Mp = std::max(r.Mp, std::abs(lhs - rhs));
                for (int be = 0; be < 4; ++be) {
                    const double lhs2 = poisson_bracket(g.M[mu][nu], g.M[al][be], x);
                    const double rhs2 = e(mu, al) * M[nu][be] - e(nu, al) * M[mu][be] + e(mu, be) * M[al][nu] +
                                        e(nu, be) * M[mu][al];
                    r.MM = std::max(r.MM, std::abs(lhs2 - rhs2));
                }
            }
        }
    return r;
}

FourVector effective_momentum(const FourVector& u, const ParticleSpec& spec, const FourVector& A_eff_cov, double c,
                              double hard_tol)
{
    if (std::abs(dot(u, u) - 1.0) > hard_tol)
        throw Error(ErrorKind::ConstraintViolation, "effective_momentum: |u.u - 1| exceeds hard_tol");
    return spec.m0 * c * lower(u) + (spec.q / c) * A_eff_cov;
}

FrozenHistoryContext::FrozenHistoryContext(std::vector<WorldlineHistory> histories, ExternalField external, double c,
                                           RootOptions opt)
    : histories_(std::move(histories)), external_(std::move(external)), c_(c), opt_(opt)
{
    for (std::size_t i = 0; i < histories_.size(); ++i)
        A_present_.push_back(potential(i, histories_[i].back().r));
}

FourVector FrozenHistoryContext::potential(std::size_t i, const FourVector& event) const
{
    if (i >= histories_.size())
        throw Error(ErrorKind::ContextMismatch, "particle index outside frozen context");
    std::vector<HistoryView> views(histories_.begin(), histories_.end());
    return effective_potential(views, i, event, external_, opt_);
}

Matrix4 FrozenHistoryContext::potential_jacobian(std::size_t i, const FourVector& event, double fd_step) const
{
    Matrix4 J;
    for (int nu = 0; nu < 4; ++nu) {
        const double h = fd_step * (1.0 + std::abs(event(nu)));
        FourVector ep = event, em = event;
        ep(nu) += h;
        em(nu) -= h;
        J.col(nu) = (potential(i, ep) - potential(i, em)) / (2.0 * h);
    }
    return J;
}

CanonicalState FrozenHistoryContext::canonical_state() const
{
    CanonicalState x(8 * histories_.size());
    for (std::size_t i = 0; i < histories_.size(); ++i) {
        const WorldlineSample& w = histories_[i].back();
        x.segment<4>(8 * i) = w.r;
        x.segment<4>(8 * i + 4) = effective_momentum(w.u, spec(i), A_present_[i], c_, histories_[i].tolerances().hard_tol);
    }
    return x;
}

double effective_hamiltonian(const FourVector& r, const FourVector& P, std::size_t i, const FrozenHistoryContext& ctx)
{
    const ParticleSpec& sp = ctx.spec(i);
    const double c = ctx.c();
    const FourVector Pi = P - (sp.q / c) * ctx.potential(i, r);
    return dot(Pi, Pi) / (2.0 * sp.m0 * c);
}

double system_hamiltonian(const CanonicalState& x, const FrozenHistoryContext& ctx)
{
    if (static_cast<std::size_t>(particle_count(x)) != ctx.size())
        throw Error(ErrorKind::ContextMismatch, "state and context particle counts differ");
    double H = 0.0;
    for (int i = 0; i < particle_count(x); ++i)
        H += effective_hamiltonian(r_of(x, i), P_of(x, i), i, ctx);
    return H;
}

PhaseFunction hamiltonian_function(const FrozenHistoryContext& ctx)
{
    const FrozenHistoryContext* c = &ctx;
    auto value = [c](const CanonicalState& x) { return system_hamiltonian(x, *c); };
    auto grad = [c](const CanonicalState& x) -> Eigen::VectorXd {
        Eigen::VectorXd g(x.size());
        const double cc = c->c();
        for (int i = 0; i < particle_count(x); ++i) {
            const ParticleSpec& sp = c->spec(i);
            const FourVector r = r_of(x, i);
            const FourVector Pi = P_of(x, i) - (sp.q / cc) * c->potential(i, r);
            const FourVector Pi_up = raise(Pi);
            g.segment<4>(8 * i + 4) = Pi_up / (sp.m0 * cc);
            if (sp.q != 0.0) {
                const Matrix4 dA = c->potential_jacobian(i, r);
                g.segment<4>(8 * i) = -(sp.q / (sp.m0 * cc * cc)) * (dA.transpose() * Pi_up);
            } else {
                g.segment<4>(8 * i).setZero();
            }
        }
        return g;
    };
    return PhaseFunction::analytic(value, grad);
}

CanonicalState canonical_flow_step(const CanonicalState& x, const FrozenHistoryContext& ctx,
                                   const std::vector<double>& ds)
{
    const Eigen::VectorXd g = hamiltonian_function(ctx).gradient(x);
    CanonicalState y = x;
    for (int i = 0; i < particle_count(x); ++i) {
        y.segment<4>(8 * i) += ds[i] * g.segment<4>(8 * i + 4);
        y.segment<4>(8 * i + 4) -= ds[i] * g.segment<4>(8 * i);
    }
    return y;
}

InstantFormReport instant_form_constrained(const std::vector<Vector3>& x, const std::vector<Vector3>& P,
                                           const FrozenHistoryContext& ctx, double dt, double fd_step)
{
    if (ctx.external().kind() != ExternalField::Kind::None)
        throw Error(ErrorKind::ContextMismatch, "instant form requires an isolated system");
    if (x.size() != ctx.size() || P.size() != ctx.size())
        throw Error(ErrorKind::ContextMismatch, "constrained state does not match context");
    const double c = ctx.c();
    const double t = ctx.histories().front().last_time();

    auto energy = [&](std::size_t i, const Vector3& xi, const Vector3& Pi) {
        const ParticleSpec& sp = ctx.spec(i);
        const FourVector A = ctx.potential(i, make_four(c * t, xi));
        const Vector3 A_up(-A(1), -A(2), -A(3));
        const Vector3 Pk = Pi - (sp.q / c) * A_up;
        return std::sqrt(sp.m0 * sp.m0 * c * c + Pk.squaredNorm()) + (sp.q / c) * A(0);
    };

    InstantFormReport rep;
    double scale_r = 0.0, scale_P = 0.0, err_r = 0.0, err_P = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double Ei = energy(i, x[i], P[i]);
        rep.p0 += Ei;
        rep.N_l0 += -x[i] * Ei;

        Vector3 dE_dx, dE_dP;
        for (int l = 0; l < 3; ++l) {
            Vector3 xp = x[i], xm = x[i];
            const double hx = fd_step * (1.0 + std::abs(x[i](l)));
            xp(l) += hx;
            xm(l) -= hx;
            dE_dx(l) = (energy(i, xp, P[i]) - energy(i, xm, P[i])) / (2.0 * hx);
            Vector3 Pp = P[i], Pm = P[i];
            const double hP = fd_step * (1.0 + std::abs(P[i](l)));
            Pp(l) += hP;
            Pm(l) -= hP;
            dE_dP(l) = (energy(i, x[i], Pp) - energy(i, x[i], Pm)) / (2.0 * hP);
        }
        rep.bracket_p0_pl += dE_dx;

        // Generated: dt c [x', p0]; expected: dr^l = v^l dt, dP^l = -dt (q/c) v^nu d_l A_nu.
        const ParticleSpec& sp = ctx.spec(i);
        const FourVector event = make_four(c * t, x[i]);
        const FourVector A = ctx.potential(i, event);
        const Vector3 A_up(-A(1), -A(2), -A(3));
        const Vector3 u_sp = (P[i] - (sp.q / c) * A_up) / (sp.m0 * c);
        const double u0 = std::sqrt(1.0 + u_sp.squaredNorm());
        const FourVector v = (c / u0) * make_four(u0, u_sp);
        const Matrix4 dA = ctx.potential_jacobian(i, event, fd_step);
        Vector3 dP_exp;
        for (int l = 0; l < 3; ++l)
            dP_exp(l) = -dt * (sp.q / c) * v.dot(dA.col(l + 1));

        rep.dr_generated.push_back(c * dt * dE_dP);
        rep.dr_expected.push_back(dt * v.tail<3>());
        rep.dP_generated.push_back(-c * dt * dE_dx);
        rep.dP_expected.push_back(dP_exp);
        err_r = std::max(err_r, (rep.dr_generated.back() - rep.dr_expected.back()).cwiseAbs().maxCoeff());
        err_P = std::max(err_P, (rep.dP_generated.back() - rep.dP_expected.back()).cwiseAbs().maxCoeff());
        scale_r = std::max(scale_r, rep.dr_expected.back().cwiseAbs().maxCoeff());
        scale_P = std::max(scale_P, rep.dP_expected.back().cwiseAbs().maxCoeff());
    }
    rep.max_bracket = rep.bracket_p0_pl.cwiseAbs().maxCoeff();
    const double floor = 1e-300;
    rep.increment_mismatch = std::max(err_r / std::max(scale_r, floor),
                                      scale_P > 0 ? err_P / scale_P : (err_P > 0 ? err_P / std::max(scale_r, floor) : 0.0));
    return rep;
}

Configuration transform_configuration(const Configuration& cfg, const PhaseFunction& F, double alpha)
{
    Configuration out = cfg;
    const Eigen::VectorXd dx = apply_J(F.gradient(cfg.x));
    out.x = cfg.x + alpha * dx;

    const int n = particle_count(cfg.x);
    for (int i = 0; i < n; ++i) {
        // Affine part of r -> dr(r) = dF/dP^(i) with P = 0.
        auto delta_r = [&](const FourVector& r) {
            CanonicalState z = CanonicalState::Zero(cfg.x.size());
            z.segment<4>(8 * i) = r;
            return FourVector(F.gradient(z).segment<4>(8 * i + 4));
        };
        const FourVector d = delta_r(FourVector::Zero());
        Matrix4 B;
        for (int k = 0; k < 4; ++k)
            B.col(k) = delta_r(FourVector::Unit(k)) - d;

        const WorldlineHistory& h = cfg.histories[i];
        std::vector<WorldlineSample> samples = h.samples();
        for (auto& w : samples) {
            w.r += alpha * (B * w.r + d);
            w.u += alpha * B * w.u;
            w.a += alpha * B * w.a;
            w.t = w.r(0) / cfg.c;
        }
        out.histories[i] = WorldlineHistory::from_samples(h.spec(), h.c(), samples, h.prehistory(), h.tolerances());
    }
    return out;
}

double nonlocal_bracket(const HistoryFunctional& xi, const Configuration& cfg, const PhaseFunction& F,
                        const NonlocalOptions& opt)
{
    auto D = [&](double a) {
        return (xi(transform_configuration(cfg, F, a)) - xi(transform_configuration(cfg, F, -a))) / (2.0 * a);
    };
    const double d1 = D(opt.alpha);
    const double d2 = D(0.5 * opt.alpha);
    const double r = (4.0 * d2 - d1) / 3.0;
    if (!std::isfinite(r) || std::abs(d1 - d2) > opt.noise_abs + opt.noise_rel * std::abs(r))
        throw Error(ErrorKind::NumericalNoise, "Richardson estimates disagree: " + std::to_string(d1) + " vs " +
                                                   std::to_string(d2));
    return r;
}

double hamiltonian_functional(const Configuration& cfg)
{
    const FrozenHistoryContext ctx(cfg.histories, cfg.external, cfg.c);
    return system_hamiltonian(cfg.x, ctx);
}

} // namespace rnb
