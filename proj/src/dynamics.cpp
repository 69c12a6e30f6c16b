#include "rnb/dynamics.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <thread>

namespace rnb {

namespace {

struct ParticleState {
    Vector3 x;
    FourVector u;
};

struct ParticleRate {
    Vector3 dx;
    FourVector du;
    FourVector a; // du/ds
};

double static_delay_estimate(const std::vector<WorldlineHistory>& hs, double c)
{
    double m = 0.0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        const double si = hs[i].spec().sigma;
        m = std::max(m, si / c);
        for (std::size_t j = 0; j < hs.size(); ++j) {
            if (i == j)
                continue;
            const double d = (hs[i].back().r.tail<3>() - hs[j].back().r.tail<3>()).norm();
            const double s = std::max(si, hs[j].spec().sigma);
            m = std::max(m, std::sqrt(d * d + s * s) / c);
        }
    }
    return m;
}

std::vector<ParticleRate> evaluate(const SystemState& st, const std::vector<HistoryView>& views, double t,
                                   const std::vector<ParticleState>& y, double* max_delay)
{
    const std::size_t n = y.size();
    std::vector<ParticleRate> k(n);
    std::vector<double> delays(n, 0.0);
    auto one = [&](std::size_t i) {
        const ParticleSpec& sp = st.histories[i].spec();
        const FieldEvaluation ev = total_faraday(views, i, t, st.mode, st.external, st.opt.roots, st.opt.interactions);
        const FourVector K = four_force(ev, y[i].u, sp.q, st.c);
        const double gamma = y[i].u(0);
        k[i].a = raise(K) / (sp.m0 * st.c);
        k[i].du = st.c * k[i].a / gamma;
        k[i].dx = st.c * y[i].u.tail<3>() / gamma;
        delays[i] = ev.max_delay;
    };
    if (st.opt.parallel && n > 1) {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(n);
        for (std::size_t i = 0; i < n; ++i)
            pool.emplace_back([&, i] {
                try {
                    one(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            });
        for (auto& th : pool)
            th.join();
        for (auto& e : errors)
            if (e)
                std::rethrow_exception(e);
    } else {
        for (std::size_t i = 0; i < n; ++i)
            one(i);
    }
    if (max_delay)
        for (double d : delays)
            *max_delay = std::max(*max_delay, d);
    return k;
}

std::vector<ParticleState> advance(const std::vector<ParticleState>& y, const std::vector<ParticleRate>& k, double h)
{
    std::vector<ParticleState> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        out[i].x = y[i].x + h * k[i].dx;
        out[i].u = y[i].u + h * k[i].du;
    }
    return out;
}

std::vector<HistoryView> stage_views(const SystemState& st, double t, const std::vector<ParticleState>& y,
                                     const std::vector<ParticleRate>& a_est)
{
    std::vector<HistoryView> views;
    views.reserve(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        WorldlineSample tail;
        tail.t = t;
        tail.s = std::numeric_limits<double>::quiet_NaN();
        tail.r = make_four(st.c * t, y[i].x);
        tail.u = y[i].u;
        tail.a = a_est[i].a;
        views.emplace_back(st.histories[i], tail);
    }
    return views;
}

} // namespace

SystemState seed(const std::vector<ParticleInit>& particles, double t0, double c, const ExternalField& external,
                 SelfForceMode mode, double dt, const IntegratorOptions& opt)
{
    if (!(c > 0) || !std::isfinite(c))
        throw Error(ErrorKind::Validation, "c must be positive");
    if (!(dt > 0) || !std::isfinite(dt))
        throw Error(ErrorKind::Validation, "dt must be positive");
    SystemState st;
    st.t0 = t0;
    st.t_now = t0;
    st.c = c;
    st.dt = dt;
    st.mode = mode;
    st.external = external;
    st.opt = opt;

    double available = std::numeric_limits<double>::infinity();
    for (const auto& p : particles) {
        p.spec.validate();
        if (p.prehistory) {
            WorldlineHistory h = WorldlineHistory::from_samples(p.spec, c, *p.prehistory, Prehistory::Bounded, opt.tol);
            if (std::abs(h.last_time() - t0) > 1e-12 * (1.0 + std::abs(t0)))
                throw Error(ErrorKind::Validation, "prehistory of '" + p.spec.label + "' must end at t0");
            available = std::min(available, t0 - h.first_time());
            st.histories.push_back(std::move(h));
        } else {
            if (!(p.v0.norm() < c))
                throw Error(ErrorKind::Validation, "initial speed of '" + p.spec.label + "' must be below c");
            st.histories.push_back(WorldlineHistory::inertial(p.spec, c, t0, p.x0, p.v0, 0.0, opt.tol));
        }
    }

    const double estimate = static_delay_estimate(st.histories, c);
    if (estimate > available)
        throw InsufficientPrehistory(estimate, available);
    try {
        st.required_coverage = max_delay(st.histories, t0, opt.roots);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::HistoryTooShort)
            throw InsufficientPrehistory(std::max(estimate, available), available);
        throw;
    }
    if (st.required_coverage > available)
        throw InsufficientPrehistory(st.required_coverage, available);
    return st;
}

void step(SystemState& st, Diagnostics* diag)
{
    const auto wall0 = std::chrono::steady_clock::now();
    const std::size_t n = st.size();
    const double t = st.t_now;
    const double dt = st.dt;
    const double t1 = st.t0 + static_cast<double>(st.steps_taken + 1) * dt;
    const double h = t1 - t;

    std::vector<ParticleState> y(n);
    for (std::size_t i = 0; i < n; ++i)
        y[i] = {st.histories[i].back().r.tail<3>(), st.histories[i].back().u};

    double max_delay_used = 0.0;
    std::vector<HistoryView> base(st.histories.begin(), st.histories.end());
    const auto k1 = evaluate(st, base, t, y, &max_delay_used);
    // The node acceleration is now known exactly; replace the provisional value.
    for (std::size_t i = 0; i < n; ++i)
        st.histories[i].set_last_acceleration(k1[i].a);

    const auto y2 = advance(y, k1, 0.5 * h);
    const auto k2 = evaluate(st, stage_views(st, t + 0.5 * h, y2, k1), t + 0.5 * h, y2, nullptr);
    const auto y3 = advance(y, k2, 0.5 * h);
    const auto k3 = evaluate(st, stage_views(st, t + 0.5 * h, y3, k2), t + 0.5 * h, y3, nullptr);
    const auto y4 = advance(y, k3, h);
    const auto k4 = evaluate(st, stage_views(st, t1, y4, k3), t1, y4, nullptr);

    DiagnosticsRecord rec;
    rec.step = st.steps_taken + 1;
    rec.t = t1;
    rec.max_delay = max_delay_used;
    for (std::size_t i = 0; i < n; ++i) {
        ParticleState next;
        next.x = y[i].x + h / 6.0 * (k1[i].dx + 2.0 * k2[i].dx + 2.0 * k3[i].dx + k4[i].dx);
        next.u = y[i].u + h / 6.0 * (k1[i].du + 2.0 * k2[i].du + 2.0 * k3[i].du + k4[i].du);
        if (st.opt.renormalize_velocity)
            next.u /= std::sqrt(dot(next.u, next.u));
        WorldlineSample w;
        w.t = t1;
        w.s = std::numeric_limits<double>::quiet_NaN();
        w.r = make_four(st.c * t1, next.x);
        w.u = next.u;
        w.a = k4[i].a; // provisional until the next step's first stage
        const WorldlineSample prev = st.histories[i].back();
        st.histories[i].append(w);
        const WorldlineSample& cur = st.histories[i].back();
        rec.constraint.push_back(std::abs(dot(cur.u, cur.u) - 1.0));
        const FourVector dr = cur.r - prev.r;
        const double ds = cur.s - prev.s;
        rec.line_element.push_back(std::abs(ds - std::sqrt(dot(dr, dr))) / ds);
    }
    st.steps_taken += 1;
    st.t_now = t1;

    if (diag) {
        if (st.opt.canonical_diagnostics) {
            std::vector<HistoryView> views(st.histories.begin(), st.histories.end());
            for (std::size_t i = 0; i < n; ++i) {
                const WorldlineSample& w = st.histories[i].back();
                const ParticleSpec& sp = st.histories[i].spec();
                const FourVector A = effective_potential(views, i, w.r, st.external, st.opt.roots);
                const FourVector P = effective_momentum(w.u, sp, A, st.c, st.opt.tol.hard_tol);
                const FourVector Pi = P - (sp.q / st.c) * A;
                rec.H_eff.push_back(dot(Pi, Pi) / (2.0 * sp.m0 * st.c));
                rec.p_total += P;
                const FourVector rl = lower(w.r);
                rec.M_total += rl * P.transpose() - P * rl.transpose();
            }
        }
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wall0).count();
        diag->records.push_back(std::move(rec));
    }
}

Diagnostics run(SystemState& st, double t_end, const RunSinks& sinks)
{
    if (!(t_end > st.t_now))
        throw Error(ErrorKind::Validation, "t_end must exceed the current time");
    Diagnostics diag;
    const long total = static_cast<long>(std::llround((t_end - st.t0) / st.dt));
    try {
        while (st.steps_taken < total)
            step(st, &diag);
    } catch (...) {
        if (!sinks.output_dir.empty())
            write_outputs(st, diag, sinks);
        throw;
    }
    if (!sinks.output_dir.empty())
        write_outputs(st, diag, sinks);
    return diag;
}

void Diagnostics::write_csv(std::ostream& os, const std::string& header_comment) const
{
    if (!header_comment.empty())
        os << "# " << header_comment << '\n';
    const std::size_t n = records.empty() ? 0 : records.front().constraint.size();
    os << "step,t,max_constraint";
    for (std::size_t i = 0; i < n; ++i)
        os << ",constraint_" << i << ",H_eff_" << i << ",line_element_" << i;
    os << ",p0,p1,p2,p3,M01,M02,M03,M12,M13,M23,max_delay\n";
    os << std::setprecision(17);
    for (const auto& r : records) {
        double mc = 0.0;
        for (double c : r.constraint)
            mc = std::max(mc, c);
        os << r.step << ',' << r.t << ',' << mc;
        for (std::size_t i = 0; i < n; ++i)
            os << ',' << r.constraint[i] << ',' << (i < r.H_eff.size() ? r.H_eff[i] : 0.0) << ','
               << r.line_element[i];
        for (int mu = 0; mu < 4; ++mu)
            os << ',' << r.p_total(mu);
        os << ',' << r.M_total(0, 1) << ',' << r.M_total(0, 2) << ',' << r.M_total(0, 3) << ',' << r.M_total(1, 2)
           << ',' << r.M_total(1, 3) << ',' << r.M_total(2, 3) << ',' << r.max_delay << '\n';
    }
}

double Diagnostics::max_constraint() const
{
    double m = 0.0;
    for (const auto& r : records)
        for (double c : r.constraint)
            m = std::max(m, c);
    return m;
}

void write_outputs(const SystemState& st, const Diagnostics& diag, const RunSinks& sinks)
{
    namespace fs = std::filesystem;
    fs::create_directories(sinks.output_dir);
    for (std::size_t i = 0; i < st.size(); ++i) {
        std::string label = st.histories[i].spec().label;
        if (label.empty())
            label = "particle" + std::to_string(i);
        std::ofstream f(fs::path(sinks.output_dir) / ("trajectory_" + label + ".csv"));
        rnb::write_csv(f, st.histories[i], sinks.header_comment);
    }
    std::ofstream d(fs::path(sinks.output_dir) / "diagnostics.csv");
    diag.write_csv(d, sinks.header_comment);
}

} // namespace rnb
