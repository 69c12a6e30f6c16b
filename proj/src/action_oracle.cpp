#include "rnb/action_oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace rnb {

void OracleConfig::validate() const
{
    if (!(w > 0.0) || !std::isfinite(w))
        throw Error(ErrorKind::Validation, "oracle width w must be positive");
    if (nodes < 32)
        throw Error(ErrorKind::Validation, "oracle needs at least 32 nodes");
    if (!(fd_step > 0.0))
        throw Error(ErrorKind::Validation, "oracle fd_step must be positive");
}

DiscreteWorldline discretize(const WorldlineHistory& h, double t_begin, double t_end, int nodes, double lookback)
{
    if (nodes < 2 || !(t_end > t_begin))
        throw Error(ErrorKind::Validation, "discretization window is empty");
    const HistoryView v(h);
    const double s0 = v.proper_time_of(t_begin);
    const double s1 = v.proper_time_of(t_end);
    DiscreteWorldline d;
    d.spec = h.spec();
    d.c = h.c();
    d.h = (s1 - s0) / (nodes - 1);
    const double s_lb = v.proper_time_of(std::max(t_begin - lookback, v.earliest()));
    const int back = static_cast<int>(std::floor((s0 - s_lb) / d.h));
    d.first_observer = back;
    d.observers = nodes;
    for (int k = -back; k <= nodes; ++k) {
        const double s = s0 + k * d.h;
        const WorldlineSample w = v.state_at_time(v.time_at_proper_time(s));
        d.r.push_back(w.r);
        d.u.push_back(w.u);
    }
    return d;
}

namespace {

double gaussian(double f, double w)
{
    return std::exp(-0.5 * (f / w) * (f / w)) / (std::sqrt(2.0 * std::numbers::pi) * w);
}

// 2 q int ds u delta_w(R^2 - sigma^2) over the retarded part of the source; contravariant.
FourVector line_potential(const DiscreteWorldline& src, const FourVector& x, double sigma, double w)
{
    FourVector A = FourVector::Zero();
    const std::size_t n = src.r.size();
    for (std::size_t m = 0; m < n; ++m) {
        const FourVector R = x - src.r[m];
        // Retarded roots have R^0 >= sigma; the cut sits well inside the Gaussian tail.
        if (R(0) <= 0.5 * sigma)
            continue;
        const double f = dot(R, R) - sigma * sigma;
        if (std::abs(f) > 40.0 * w)
            continue;
        const double wt = (m == 0 || m + 1 == n) ? 0.5 : 1.0;
        A += wt * gaussian(f, w) * src.u[m];
    }
    return 2.0 * src.spec.q * src.h * A;
}

struct LocalTerms {
    FourVector mass = FourVector::Zero();
    FourVector interaction = FourVector::Zero();
};

LocalTerms node_gradient(const std::vector<DiscreteWorldline>& wl, std::size_t i, int k,
                         const ExternalField& external, double w, double fd_step)
{
    const DiscreteWorldline& d = wl[i];
    const double m0c = d.spec.m0 * d.c;
    const double qc = d.spec.q / d.c;
    const FourVector& rm = d.r[k - 1];
    const FourVector& rp = d.r[k + 1];
    const FourVector Am = qc != 0.0 ? regularized_potential(wl, i, rm, external, w) : FourVector::Zero();
    const FourVector Ap = qc != 0.0 ? regularized_potential(wl, i, rp, external, w) : FourVector::Zero();
    const FourVector rmm = k >= 2 ? d.r[k - 2] : rm;
    const FourVector rpp = d.r[k + 2 < static_cast<int>(d.r.size()) ? k + 2 : k + 1];

    auto mass = [&](const FourVector& rk) {
        const FourVector a = rk - rm, b = rp - rk;
        return 0.5 * m0c * (dot(a, a) + dot(b, b)) / d.h;
    };
    auto interaction = [&](const FourVector& rk) {
        if (qc == 0.0)
            return 0.0;
        const FourVector Ak = regularized_potential(wl, i, rk, external, w);
        // dr^mu A_mu with central differences at k-1, k, k+1.
        return qc * (0.5 * (rk - rmm).dot(Am) + 0.5 * (rp - rm).dot(Ak) + 0.5 * (rpp - rk).dot(Ap));
    };
    LocalTerms g;
    for (int mu = 0; mu < 4; ++mu) {
        FourVector xp = d.r[k], xm = d.r[k];
        const double step = fd_step * (1.0 + std::abs(d.r[k](mu)));
        xp(mu) += step;
        xm(mu) -= step;
        g.mass(mu) = (mass(xp) - mass(xm)) / (2.0 * step * d.h);
        g.interaction(mu) = (interaction(xp) - interaction(xm)) / (2.0 * step * d.h);
    }
    return g;
}

} // namespace

FourVector regularized_potential(const std::vector<DiscreteWorldline>& wl, std::size_t i, const FourVector& x,
                                 const ExternalField& external, double w)
{
    FourVector A = 2.0 * line_potential(wl[i], x, wl[i].spec.sigma, w);
    for (std::size_t j = 0; j < wl.size(); ++j) {
        if (j == i)
            continue;
        const double si = wl[i].spec.sigma, sj = wl[j].spec.sigma;
        if (si == sj)
            A += 2.0 * line_potential(wl[j], x, si, w);
        else
            A += line_potential(wl[j], x, si, w) + line_potential(wl[j], x, sj, w);
    }
    return external.potential(x) + lower(A);
}

double calibrated_width(const std::vector<DiscreteWorldline>& wl, double factor)
{
    double df = 0.0;
    for (std::size_t i = 0; i < wl.size(); ++i) {
        for (std::size_t j = 0; j < wl.size(); ++j) {
            const double sigma = std::max(wl[i].spec.sigma, wl[j].spec.sigma);
            const DiscreteWorldline& src = wl[j];
            for (int k = wl[i].first_observer; k < wl[i].first_observer + wl[i].observers; ++k) {
                const FourVector& x = wl[i].r[k];
                for (std::size_t m = 0; m + 1 < src.r.size(); ++m) {
                    const FourVector R0 = x - src.r[m], R1 = x - src.r[m + 1];
                    if (R0(0) <= 0.0 || R1(0) <= 0.0)
                        continue;
                    const double f0 = dot(R0, R0) - sigma * sigma, f1 = dot(R1, R1) - sigma * sigma;
                    if (f0 * f1 <= 0.0)
                        df = std::max(df, std::abs(f1 - f0));
                }
            }
        }
    }
    return factor * df;
}

OracleReport action_oracle(const std::vector<DiscreteWorldline>& wl, const std::vector<WorldlineHistory>& histories,
                           const ExternalField& external, const OracleConfig& cfg)
{
    cfg.validate();
    const double needed = calibrated_width(wl, 1.0);
    if (cfg.w < needed)
        throw Error(ErrorKind::WidthTooSmall, "oracle width " + std::to_string(cfg.w) +
                                                  " under-resolves the node spacing (needs >= " +
                                                  std::to_string(needed) + ")");
    std::vector<HistoryView> views(histories.begin(), histories.end());
    OracleReport rep;
    rep.w = cfg.w;
    rep.h = wl.front().h;
    double err = 0.0, scale = 0.0, sum2 = 0.0;
    long count = 0;
    for (std::size_t i = 0; i < wl.size(); ++i) {
        const DiscreteWorldline& d = wl[i];
        const double si = d.spec.sigma;
        for (int k = d.first_observer; k < d.first_observer + d.observers; ++k) {
            NodeComparison nc;
            nc.particle = static_cast<int>(i);
            nc.node = k - d.first_observer;
            const LocalTerms g = node_gradient(wl, i, k, external, cfg.w, cfg.fd_step);
            nc.mass_gradient = g.mass;
            nc.interaction_gradient = g.interaction;
            if (d.spec.q != 0.0) {
                FaradayTensor F = external.faraday(d.r[k]) + self_faraday_at(views[i], d.r[k]);
                for (std::size_t j = 0; j < views.size(); ++j)
                    if (j != i)
                        F += binary_faraday(views[j], d.r[k], si, views[j].spec().sigma);
                nc.force = (d.spec.q / d.c) * contract_force(F, d.u[k]);
            }
            err = std::max(err, (nc.interaction_gradient - nc.force).cwiseAbs().maxCoeff());
            scale = std::max(scale, nc.force.cwiseAbs().maxCoeff());
            rep.mass_gradient_max = std::max(rep.mass_gradient_max, nc.mass_gradient.cwiseAbs().maxCoeff());
            sum2 += (nc.mass_gradient + nc.interaction_gradient).squaredNorm();
            ++count;
            rep.nodes.push_back(nc);
        }
    }
    rep.force_relative = scale > 0.0 ? err / scale : err;
    rep.gradient_norm = std::sqrt(sum2 / std::max(1L, count));
    return rep;
}

double action_gradient_norm(const std::vector<DiscreteWorldline>& wl, const ExternalField& external,
                            const OracleConfig& cfg)
{
    cfg.validate();
    double sum2 = 0.0;
    long count = 0;
    for (std::size_t i = 0; i < wl.size(); ++i) {
        for (int k = wl[i].first_observer; k < wl[i].first_observer + wl[i].observers; ++k) {
            const LocalTerms g = node_gradient(wl, i, k, external, cfg.w, cfg.fd_step);
            sum2 += (g.mass + g.interaction).squaredNorm();
            ++count;
        }
    }
    return std::sqrt(sum2 / std::max(1L, count));
}

double swap_symmetry_residual(const DiscreteWorldline& a, const DiscreteWorldline& b, double w)
{
    auto one_way = [w](const DiscreteWorldline& outer, const DiscreteWorldline& inner) {
        const double sigmas[2] = {outer.spec.sigma, inner.spec.sigma};
        double total = 0.0;
        // Midpoint rule on the outer curve, trapezoid on the inner one.
        for (std::size_t k = 0; k + 1 < outer.r.size(); ++k) {
            const FourVector dr = outer.r[k + 1] - outer.r[k];
            const FourVector x = 0.5 * (outer.r[k + 1] + outer.r[k]);
            for (std::size_t m = 0; m < inner.r.size(); ++m) {
                const FourVector R = x - inner.r[m];
                const double wt = (m == 0 || m + 1 == inner.r.size()) ? 0.5 : 1.0;
                double g = 0.0;
                for (double s : sigmas)
                    g += gaussian(dot(R, R) - s * s, w);
                total += wt * inner.h * g * dot(dr, inner.u[m]);
            }
        }
        return outer.spec.q * inner.spec.q * total;
    };
    const double ab = one_way(a, b);
    const double ba = one_way(b, a);
    const double scale = std::max(std::abs(ab), std::abs(ba));
    return scale > 0.0 ? std::abs(ab - ba) / scale : 0.0;
}

std::vector<DiscreteWorldline> perturbed(const std::vector<DiscreteWorldline>& wl, double amplitude,
                                         std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<DiscreteWorldline> out = wl;
    for (auto& d : out) {
        Vector3 dir(N(rng), N(rng), N(rng));
        dir.normalize();
        const int modes = 1 + static_cast<int>(rng() % 3);
        const double L = static_cast<double>(d.observers + 1);
        for (int k = d.first_observer; k < d.first_observer + d.observers; ++k) {
            const double x = static_cast<double>(k - d.first_observer + 1) / L;
            const double bump = amplitude * std::sin(std::numbers::pi * modes * x);
            d.r[k].tail<3>() += bump * dir;
        }
    }
    return out;
}

WorldlineHistory random_smooth_history(const ParticleSpec& spec, double c, const Vector3& x0, std::uint64_t seed,
                                       double t_begin, double t_end, double dt)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    struct Mode {
        Vector3 amp;
        double omega, phase;
    };
    std::vector<Mode> modes;
    double speed_bound = 0.0;
    for (int n = 0; n < 3; ++n) {
        Mode m{Vector3(U(rng), U(rng), U(rng)), 0.5 + 0.5 * (U(rng) + 1.0), std::numbers::pi * U(rng)};
        modes.push_back(m);
        speed_bound += m.amp.norm() * m.omega;
    }
    const double scale = 0.45 * c / speed_bound;
    auto sample = [&](double t) {
        Vector3 x = x0, v = Vector3::Zero(), acc = Vector3::Zero();
        for (const auto& m : modes) {
            const double ph = m.omega * t + m.phase;
            x += scale * m.amp * (std::sin(ph) - std::sin(m.phase));
            v += scale * m.amp * m.omega * std::cos(ph);
            acc -= scale * m.amp * m.omega * m.omega * std::sin(ph);
        }
        const double g = 1.0 / std::sqrt(1.0 - v.squaredNorm() / (c * c));
        const double gdot = g * g * g * v.dot(acc) / (c * c);
        const FourVector dudt = make_four(gdot, Vector3((gdot * v + g * acc) / c));
        WorldlineSample s = make_sample(t, std::numeric_limits<double>::quiet_NaN(), x, v, (g / c) * dudt, c);
        return s;
    };
    const long n = static_cast<long>(std::ceil((t_end - t_begin) / dt));
    std::vector<WorldlineSample> ss;
    for (long k = 0; k <= n; ++k)
        ss.push_back(sample(t_begin + (t_end - t_begin) * static_cast<double>(k) / static_cast<double>(n)));
    return WorldlineHistory::from_samples(spec, c, ss, Prehistory::Bounded);
}

} // namespace rnb
