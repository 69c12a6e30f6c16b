#include "rnb/scenarios.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace rnb {

ExternalField profiled_uniform(const Vector3& E, const Vector3& B, std::function<double(double)> profile, double c)
{
    const FaradayTensor FB = FaradayTensor::from_fields(Vector3::Zero(), B);
    const FaradayTensor FE = FaradayTensor::from_fields(E, Vector3::Zero());
    auto F = [=](const FourVector& r) { return FB + profile(r(0) / c) * FE; };
    // A_0 = -p(t) E.x carries the electric part exactly even when p varies in time.
    auto A = [=](const FourVector& r) {
        FourVector a = -0.5 * contract_force(FB, r);
        a(0) += -profile(r(0) / c) * E.dot(r.tail<3>());
        return a;
    };
    return ExternalField::analytic(F, A);
}

double smooth_pulse(double t, double t_on, double t_off, double ramp)
{
    auto step = [](double x) {
        if (x <= 0.0)
            return 0.0;
        if (x >= 1.0)
            return 1.0;
        return x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
    };
    if (ramp <= 0.0)
        return (t >= t_on && t <= t_off) ? 1.0 : 0.0;
    return step((t - t_on) / ramp) * step((t_off - t) / ramp);
}

WorldlineHistory with_charge(const WorldlineHistory& h, double q)
{
    ParticleSpec sp = h.spec();
    sp.q = q;
    return WorldlineHistory::from_samples(sp, h.c(), h.samples(), h.prehistory(), h.tolerances());
}

double max_abs_position_difference(const WorldlineHistory& a, const WorldlineHistory& b)
{
    const std::size_t n = std::min(a.size(), b.size());
    double m = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        m = std::max(m, (a.samples()[k].r.tail<3>() - b.samples()[k].r.tail<3>()).cwiseAbs().maxCoeff());
    return m;
}

namespace {

IntegratorOptions quiet_options()
{
    IntegratorOptions o;
    o.canonical_diagnostics = false;
    return o;
}

double max_norm(const FourVector& v) { return v.cwiseAbs().maxCoeff(); }

FourVector exact_self_force(const HistoryView& v, double t)
{
    const WorldlineSample w = v.state_at_time(t);
    return (v.spec().q / v.c()) * contract_force(self_faraday(v, t), w.u);
}

} // namespace

LocallyIsolatedReport demo_locally_isolated(const LocallyIsolatedConfig& cfg)
{
    ExternalField ext = ExternalField::none();
    if (cfg.field_enabled) {
        const double t_on = cfg.t_on, t_off = cfg.t_switch, ramp = cfg.ramp;
        ext = profiled_uniform(
            cfg.E, Vector3::Zero(), [=](double t) { return smooth_pulse(t, t_on, t_off, ramp); }, cfg.c);
    }
    ParticleInit p;
    p.spec = cfg.spec;
    SystemState st = seed({p}, cfg.t0, cfg.c, ext, cfg.mode, cfg.dt);

    LocallyIsolatedReport rep;
    Diagnostics& diag = rep.diagnostics;
    const long total = static_cast<long>(std::llround((cfg.t_end - cfg.t0) / cfg.dt));
    double prev_H = std::numeric_limits<double>::quiet_NaN();
    while (st.steps_taken < total) {
        step(st, &diag);
        const DiagnosticsRecord& r = diag.records.back();
        const double H = r.H_eff.front();
        if (!std::isnan(prev_H)) {
            const double jump = std::abs(H - prev_H);
            rep.H_eff_max_jump = std::max(rep.H_eff_max_jump, jump);
            if (r.t - cfg.dt < cfg.t_switch && r.t >= cfg.t_switch)
                rep.H_eff_jump_at_switch = jump;
        }
        prev_H = H;
        if (r.t > cfg.t_switch) {
            HistoryView v(st.histories.front());
            rep.max_self_force_post = std::max(rep.max_self_force_post, max_norm(exact_self_force(v, r.t)));
        }
    }
    rep.steps = st.steps_taken;
    rep.self_force_nonzero = rep.max_self_force_post > 1e-12;

    const WorldlineHistory& h = st.histories.front();
    const WorldlineHistory h2 = with_charge(h, 2.0 * h.spec().q);
    const double f1 = max_norm(exact_self_force(HistoryView(h), st.t_now));
    const double f2 = max_norm(exact_self_force(HistoryView(h2), st.t_now));
    rep.self_force_q_ratio = f1 > 0.0 ? f2 / f1 : 0.0;
    rep.final_state = std::move(st);
    return rep;
}

GloballyIsolatedReport demo_globally_isolated(const GloballyIsolatedConfig& cfg)
{
    if (cfg.particles.size() < 2)
        throw Error(ErrorKind::Validation, "a globally isolated system needs at least two particles");
    SystemState st = seed(cfg.particles, cfg.t0, cfg.c, ExternalField::none(), cfg.mode, cfg.dt);
    GloballyIsolatedReport rep;
    rep.diagnostics = run(st, cfg.t_end);
    rep.max_constraint = rep.diagnostics.max_constraint();

    if (st.size() == 2) {
        const auto& a = st.histories[0].samples();
        const auto& b = st.histories[1].samples();
        const Vector3 centre = a.front().r.tail<3>() + b.front().r.tail<3>();
        for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k)
            rep.mirror_residual = std::max(
                rep.mirror_residual, (a[k].r.tail<3>() + b[k].r.tail<3>() - centre).cwiseAbs().maxCoeff());
    }
    const auto& recs = rep.diagnostics.records;
    if (!recs.empty())
        rep.momentum_drift = (recs.back().p_total - recs.front().p_total).tail<3>();

    FrozenHistoryContext ctx(st.histories, ExternalField::none(), cfg.c);
    std::vector<Vector3> x, P;
    for (std::size_t i = 0; i < st.size(); ++i) {
        const WorldlineSample& w = st.histories[i].back();
        const ParticleSpec& sp = st.histories[i].spec();
        const FourVector A = ctx.present_potentials()[i];
        x.push_back(w.r.tail<3>());
        P.push_back(sp.m0 * cfg.c * w.u.tail<3>() + (sp.q / cfg.c) * Vector3(-A(1), -A(2), -A(3)));
    }
    const InstantFormReport inst = instant_form_constrained(x, P, ctx, cfg.dt);
    rep.bracket_certificate = inst.max_bracket;
    rep.increment_mismatch = inst.increment_mismatch;
    const CanonicalState xs = ctx.canonical_state();
    rep.lorentz_residual = lorentz_conditions(unconstrained_generators(particle_count(xs)), xs).max();
    rep.final_state = std::move(st);
    return rep;
}

double integration_tolerance(const std::vector<ParticleInit>& particles, double t0, double t_end, double dt, double c,
                             const ExternalField& external, SelfForceMode mode)
{
    SystemState coarse = seed(particles, t0, c, external, mode, dt, quiet_options());
    SystemState fine = seed(particles, t0, c, external, mode, 0.5 * dt, quiet_options());
    run(coarse, t_end);
    run(fine, t_end);
    double m = 0.0;
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        const auto& a = coarse.histories[i].samples();
        const auto& b = fine.histories[i].samples();
        const std::size_t off_a = a.size() - static_cast<std::size_t>(coarse.steps_taken) - 1;
        const std::size_t off_b = b.size() - static_cast<std::size_t>(fine.steps_taken) - 1;
        for (long k = 0; k <= coarse.steps_taken; ++k)
            m = std::max(m, (a[off_a + k].r.tail<3>() - b[off_b + 2 * k].r.tail<3>()).cwiseAbs().maxCoeff());
    }
    return m;
}

FlowReport flow_non_bijectivity_check(const FlowConfig& cfg)
{
    if (cfg.a.size() != cfg.b.size())
        throw Error(ErrorKind::Validation, "flow check needs two seeds of the same size");
    SystemState sa = seed(cfg.a, cfg.t0, cfg.c, ExternalField::none(), cfg.mode, cfg.dt, quiet_options());
    SystemState sb = seed(cfg.b, cfg.t0, cfg.c, ExternalField::none(), cfg.mode, cfg.dt, quiet_options());

    FlowReport rep;
    for (std::size_t i = 0; i < sa.size(); ++i) {
        const WorldlineSample& wa = sa.histories[i].back();
        const WorldlineSample& wb = sb.histories[i].back();
        rep.initial_agreement = std::max(rep.initial_agreement, max_norm(wa.r - wb.r));
        rep.initial_agreement = std::max(rep.initial_agreement, max_norm(wa.u - wb.u));
    }
    rep.window = cfg.window > 0.0 ? cfg.window : std::max(sa.required_coverage, sb.required_coverage);
    const long steps = std::max(1L, static_cast<long>(std::ceil(rep.window / cfg.dt - 1e-9)));
    for (long k = 0; k < steps; ++k) {
        step(sa);
        step(sb);
        double d = 0.0;
        for (std::size_t i = 0; i < sa.size(); ++i)
            d = std::max(d, (sa.histories[i].back().r.tail<3>() - sb.histories[i].back().r.tail<3>())
                                .cwiseAbs()
                                .maxCoeff());
        rep.t.push_back(sa.t_now);
        rep.divergence.push_back(d);
        rep.max_divergence = std::max(rep.max_divergence, d);
    }
    rep.integration_tolerance = integration_tolerance(cfg.a, cfg.t0, sa.t_now, cfg.dt, cfg.c, ExternalField::none(),
                                                      cfg.mode);
    return rep;
}

BoostReport boost_covariance_check(double beta, double t_end, double dt)
{
    const double c = 1.0;
    std::vector<ParticleInit> s_frame(2);
    s_frame[0].spec = {1.0, 0.3, 0.5, "a"};
    s_frame[1].spec = {1.0, -0.3, 0.5, "b"};
    s_frame[0].x0 = Vector3(0.0, -1.0, 0.0);
    s_frame[1].x0 = Vector3(0.0, 1.0, 0.0);

    BoostReport rep;
    rep.beta = beta;
    SystemState S = seed(s_frame, 0.0, c, ExternalField::none(), SelfForceMode::Exact, dt, quiet_options());
    run(S, t_end);
    rep.integration_tolerance =
        integration_tolerance(s_frame, 0.0, t_end, dt, c, ExternalField::none(), SelfForceMode::Exact);

    const Boost L(Vector3(beta, 0.0, 0.0));
    std::vector<ParticleInit> p_frame = s_frame;
    double t0p = 0.0;
    for (auto& p : p_frame) {
        const FourVector r = boost(make_four(0.0, p.x0), L);
        const FourVector u = boost(four_velocity(p.v0, c), L);
        t0p = r(0) / c; // common to both: the events share x
        p.x0 = r.tail<3>();
        p.v0 = c * u.tail<3>() / u(0);
    }
    // Run long enough in S' to cover the S interval after mapping back.
    const double span = L.gamma() * (t_end + beta * 2.0 * std::abs(p_frame[0].x0(0)) / c) + 2.0 * dt;
    const double dtp = dt;
    SystemState Sp = seed(p_frame, t0p, c, ExternalField::none(), SelfForceMode::Exact, dtp, quiet_options());
    run(Sp, t0p + span);

    const Boost Linv = L.inverse();
    for (std::size_t i = 0; i < 2; ++i) {
        HistoryView hs(S.histories[i]);
        for (const auto& w : Sp.histories[i].samples()) {
            const FourVector r = boost(w.r, Linv);
            const double t = r(0) / c;
            if (t < 0.0 || t > S.t_now)
                continue;
            const Vector3 x = hs.state_at_time(t).r.tail<3>();
            rep.max_difference = std::max(rep.max_difference, (x - r.tail<3>()).cwiseAbs().maxCoeff());
            ++rep.compared;
        }
    }
    return rep;
}

std::vector<ParticleInit> balanced_pair(double q, double d, double sigma, double m0)
{
    std::vector<ParticleInit> p(2);
    p[0].spec = {m0, q, sigma, "plus"};
    p[1].spec = {m0, -q, sigma, "minus"};
    p[0].x0 = Vector3(-0.5 * d, 0.0, 0.0);
    p[1].x0 = Vector3(0.5 * d, 0.0, 0.0);
    return p;
}

ExternalField balancing_field(const std::vector<ParticleInit>& pair, double c, double t0, double kappa)
{
    SystemState st = seed(pair, t0, c, ExternalField::none(), SelfForceMode::Exact, 1.0, quiet_options());
    std::vector<HistoryView> views(st.histories.begin(), st.histories.end());
    const FieldEvaluation ev = total_faraday(views, 0, t0, SelfForceMode::Exact, ExternalField::none());
    const Vector3 E = -ev.F.electric();
    return profiled_uniform(
        E, Vector3::Zero(),
        [=](double t) {
            const double x = t - t0;
            return x <= 0.0 ? 1.0 : 1.0 / (1.0 + kappa * x * x * x * x * x);
        },
        c);
}

OrderStudyReport rk4_order_study(double dt, double t_end)
{
    const double c = 1.0, t0 = 0.0;
    const auto pair = balanced_pair(0.3, 3.0, 0.5, 1.0);
    const ExternalField ext = balancing_field(pair, c, t0, 0.2);
    auto final_positions = [&](double h) {
        SystemState st = seed(pair, t0, c, ext, SelfForceMode::Exact, h, quiet_options());
        run(st, t_end);
        Eigen::VectorXd y(6 * st.size());
        for (std::size_t i = 0; i < st.size(); ++i) {
            y.segment<3>(6 * i) = st.histories[i].back().r.tail<3>();
            y.segment<3>(6 * i + 3) = st.histories[i].back().u.tail<3>();
        }
        return y;
    };
    const Eigen::VectorXd ref = final_positions(dt / 8.0);
    OrderStudyReport rep;
    rep.dt = dt;
    rep.error_dt = (final_positions(dt) - ref).cwiseAbs().maxCoeff();
    rep.error_half = (final_positions(dt / 2.0) - ref).cwiseAbs().maxCoeff();
    rep.ratio = rep.error_dt / rep.error_half;
    return rep;
}

WorldlineHistory oscillating_history(const GapStudyConfig& cfg, double sigma)
{
    const double A = cfg.amplitude, w = cfg.omega, c = cfg.c;
    auto sample = [&](double t) {
        const Vector3 x(A * std::sin(w * t), 0.0, 0.0);
        const Vector3 v(A * w * std::cos(w * t), 0.0, 0.0);
        const Vector3 acc(-A * w * w * std::sin(w * t), 0.0, 0.0);
        const double g = 1.0 / std::sqrt(1.0 - v.squaredNorm() / (c * c));
        const double gdot = g * g * g * v.dot(acc) / (c * c);
        const FourVector dudt = make_four(gdot, Vector3((gdot * v + g * acc) / c));
        WorldlineSample s = make_sample(t, 0.0, x, v, (g / c) * dudt, c);
        s.s = std::numeric_limits<double>::quiet_NaN();
        return s;
    };
    // Enough history for the largest delay at the first probe.
    const double start = cfg.t_begin - 2.0 * sigma / c - 1.0;
    const long n = static_cast<long>(std::ceil((cfg.t_end - start) / cfg.node_spacing));
    std::vector<WorldlineSample> ss;
    ss.reserve(static_cast<std::size_t>(n) + 1);
    for (long k = n; k >= 0; --k)
        ss.push_back(sample(cfg.t_end - static_cast<double>(k) * cfg.node_spacing));
    ParticleSpec sp = cfg.spec;
    sp.sigma = sigma;
    return WorldlineHistory::from_samples(sp, c, ss, Prehistory::Bounded);
}

std::vector<GapRow> self_force_gap_study(const GapStudyConfig& cfg)
{
    std::vector<GapRow> rows;
    const double q = cfg.spec.q, c = cfg.c;
    for (double sigma : cfg.sigmas) {
        const WorldlineHistory h = oscillating_history(cfg, sigma);
        const HistoryView v(h);
        GapRow row;
        row.sigma = sigma;
        ParticleSpec sp = cfg.spec;
        sp.sigma = sigma;
        row.em_mass = sp.em_mass(c);
        std::vector<double> y;
        std::vector<std::array<double, 2>> X;
        const long probes = static_cast<long>(std::llround((cfg.t_end - cfg.t_begin) / cfg.probe_spacing));
        for (long k = 0; k <= probes; ++k) {
            const double t = cfg.t_begin + static_cast<double>(k) * cfg.probe_spacing;
            DelayRoot root;
            const FaradayTensor F = self_faraday_at(v, v.state_at_time(t).r, {}, &root);
            const FourVector G = (q / c) * contract_force(F, root.source_event.u);
            const FourVector asym = asymptotic_self_force(v, t, sigma);
            row.max_gap = std::max(row.max_gap, max_norm(G - asym));

            const KinematicDerivatives kd = v.derivatives_at_time(t - root.t_ret);
            const FourVector mass_dir = -c * kd.sample.a;
            const FourVector g_dir = (q * q / c) * (kd.adot - kd.sample.u * dot(kd.sample.u, kd.adot));
            const FourVector Gup = raise(G);
            for (int mu = 0; mu < 4; ++mu) {
                y.push_back(Gup(mu));
                X.push_back({mass_dir(mu), g_dir(mu)});
            }
        }
        Eigen::MatrixXd M(static_cast<Eigen::Index>(X.size()), 2);
        Eigen::VectorXd b(static_cast<Eigen::Index>(y.size()));
        for (std::size_t r = 0; r < X.size(); ++r) {
            M(static_cast<Eigen::Index>(r), 0) = X[r][0];
            M(static_cast<Eigen::Index>(r), 1) = X[r][1];
            b(static_cast<Eigen::Index>(r)) = y[r];
        }
        const Eigen::Vector2d coef = M.colPivHouseholderQr().solve(b);
        row.fitted_mass = coef(0);
        row.fitted_gprime = coef(1);
        rows.push_back(row);
    }
    return rows;
}

} // namespace rnb
