#include "rnb/retardation.hpp"

#include <algorithm>
#include <cmath>

namespace rnb {

namespace {

struct DelayEquation {
    const HistoryView& src;
    Vector3 x_obs;
    double t;
    double sigma;
    double c;

    WorldlineSample source_at(double tau) const { return src.state_at_time(t - tau); }

    double rhs(const WorldlineSample& w) const
    {
        const Vector3 d = x_obs - w.r.tail<3>();
        return std::sqrt(d.squaredNorm() + sigma * sigma) / c;
    }

    double residual(double tau, const WorldlineSample& w) const
    {
        const Vector3 d = x_obs - w.r.tail<3>();
        return (c * tau) * (c * tau) - d.squaredNorm() - sigma * sigma;
    }
};

DelayRoot finish(const DelayEquation& eq, double tau, const WorldlineSample& w, int iters, bool bisected)
{
    DelayRoot root;
    root.t_ret = tau;
    root.source_event = w;
    root.residual = eq.residual(tau, w);
    root.iterations = iters;
    root.bisected = bisected;
    root.s_ret = eq.t <= eq.src.present() ? eq.src.proper_time_of(eq.t) - w.s
                                          : std::numeric_limits<double>::quiet_NaN();
    return root;
}

} // namespace

DelayRoot pair_delay(const HistoryView& source, const FourVector& observer_event, double sigma,
                     const RootOptions& opt)
{
    const double c = source.c();
    const double t = observer_event(0) / c;
    const DelayEquation eq{source, observer_event.tail<3>(), t, sigma, c};

    const double present = std::min(t, source.present());
    const WorldlineSample now = source.state_at_time(present);
    const double d0 = (eq.x_obs - now.r.tail<3>()).norm();
    const double scale = 1.0 + d0 * d0 + sigma * sigma;
    const double tol = opt.root_tol_scale * scale;
    const double tau_floor = t - present;

    double tau = opt.seed ? *opt.seed : std::sqrt(d0 * d0 + sigma * sigma) / c;
    tau = std::max(tau, tau_floor);

    double prev_step = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= opt.max_iter; ++it) {
        const WorldlineSample w = eq.source_at(tau);
        const double next = std::max(eq.rhs(w), tau_floor);
        const double step = std::abs(next - tau);
        if (step <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(next, 1.0 / c)) {
            const WorldlineSample wn = eq.source_at(next);
            const DelayRoot r = finish(eq, next, wn, it, false);
            if (std::abs(r.residual) <= tol)
                return r;
            break;
        }
        if (!(step < prev_step))
            break; // not contracting: fall back to bisection
        prev_step = step;
        tau = next;
    }

    // Bracketed bisection on f(tau) = c tau - sqrt(|dx|^2 + sigma^2), increasing for subluminal sources.
    auto f = [&](double x) { return c * x - c * eq.rhs(eq.source_at(x)); };
    double lo = tau_floor, hi = std::max(tau, std::sqrt(d0 * d0 + sigma * sigma) / c);
    if (f(lo) > 0)
        throw Error(ErrorKind::NoConvergence, "delay bracket: f(lo) > 0");
    int expand = 0;
    while (f(hi) <= 0) {
        hi = 2.0 * hi + 1.0 / c;
        if (++expand > 200)
            throw Error(ErrorKind::NoConvergence, "delay bracket expansion failed");
    }
    for (int it = 0; it < 400 && hi - lo > 2.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) > 0)
            hi = mid;
        else
            lo = mid;
    }
    const double root_tau = 0.5 * (lo + hi);
    const DelayRoot r = finish(eq, root_tau, eq.source_at(root_tau), opt.max_iter, true);
    if (!(std::abs(r.residual) <= tol))
        throw Error(ErrorKind::NoConvergence, "delay residual " + std::to_string(r.residual));
    return r;
}

DelayRoot self_delay(const HistoryView& h, double t, double sigma, const RootOptions& opt)
{
    return pair_delay(h, h.state_at_time(t).r, sigma, opt);
}

void check_jacobian(const FourVector& R, const FourVector& u, const RootOptions& opt)
{
    if (std::abs(dot(R, u)) < opt.jac_tol_scale * R.norm() * u.norm())
        throw Error(ErrorKind::DegenerateJacobian, "grazing retarded root, |R.u| too small");
}

FourVector delta_line_integral(const DelayRoot& root, const FourVector& observer_event, double q,
                               LineWeight weight, const RootOptions& opt)
{
    const FourVector& u = root.source_event.u;
    const FourVector R = root.source_event.r - observer_event;
    check_jacobian(R, u, opt);
    const double inv = q / std::abs(dot(R, u));
    if (weight == LineWeight::Scalar)
        return FourVector(inv, 0, 0, 0);
    return inv * u;
}

FourVector delta_line_integral(const HistoryView& source, const FourVector& observer_event, double sigma, double q,
                               LineWeight weight, const RootOptions& opt)
{
    return delta_line_integral(pair_delay(source, observer_event, sigma, opt), observer_event, q, weight, opt);
}

double max_delay(const std::vector<WorldlineHistory>& histories, double t, const RootOptions& opt)
{
    double m = 0.0;
    for (std::size_t i = 0; i < histories.size(); ++i) {
        const HistoryView hi(histories[i]);
        m = std::max(m, self_delay(hi, t, histories[i].spec().sigma, opt).t_ret);
        const FourVector obs = hi.state_at_time(t).r;
        for (std::size_t j = 0; j < histories.size(); ++j) {
            if (j == i)
                continue;
            const HistoryView hj(histories[j]);
            m = std::max(m, pair_delay(hj, obs, histories[i].spec().sigma, opt).t_ret);
            m = std::max(m, pair_delay(hj, obs, histories[j].spec().sigma, opt).t_ret);
        }
    }
    return m;
}

} // namespace rnb
