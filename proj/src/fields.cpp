#include "rnb/fields.hpp"

#include <algorithm>
#include <cmath>

namespace rnb {

ExternalField ExternalField::uniform(const Vector3& E, const Vector3& B)
{
    ExternalField f;
    f.kind_ = Kind::Uniform;
    f.F0_ = FaradayTensor::from_fields(E, B);
    return f;
}

ExternalField ExternalField::analytic(TensorFn F, PotentialFn A)
{
    ExternalField f;
    f.kind_ = Kind::Analytic;
    f.F_ = std::move(F);
    f.A_ = std::move(A);
    return f;
}

FaradayTensor ExternalField::faraday(const FourVector& r) const
{
    switch (kind_) {
    case Kind::None: return FaradayTensor();
    case Kind::Uniform: return F0_;
    case Kind::Analytic: return F_(r);
    }
    return FaradayTensor();
}

FourVector ExternalField::potential(const FourVector& r) const
{
    switch (kind_) {
    case Kind::None: return FourVector::Zero();
    case Kind::Uniform: return -0.5 * F0_.matrix() * r;
    case Kind::Analytic: return A_ ? A_(r) : FourVector::Zero();
    }
    return FourVector::Zero();
}

namespace {

// -(k/|D|) d/ds' [ (u_mu R_nu - u_nu R_mu) / D ], D = R.u, with dR/ds' and du/ds' supplied.
FaradayTensor retarded_tensor(double k, const FourVector& R, const FourVector& u, const FourVector& dR,
                              const FourVector& du)
{
    const FourVector Rl = lower(R), ul = lower(u);
    const double D = dot(R, u);
    const double dD = dot(dR, u) + dot(R, du);
    const FaradayTensor W = FaradayTensor::wedge(ul, Rl);
    const FaradayTensor dW = FaradayTensor::wedge(lower(du), Rl) + FaradayTensor::wedge(ul, lower(dR));
    const FaradayTensor dquot = (1.0 / D) * dW - (dD / (D * D)) * W;
    return (-k / std::abs(D)) * dquot;
}

} // namespace

FaradayTensor self_faraday_at(const HistoryView& h, const FourVector& observer_event, const RootOptions& opt,
                              DelayRoot* root_out)
{
    const double q = h.spec().q;
    if (q == 0.0)
        return FaradayTensor();
    const DelayRoot root = pair_delay(h, observer_event, h.spec().sigma, opt);
    if (root_out)
        *root_out = root;
    const WorldlineSample& w = root.source_event;
    const FourVector R = observer_event - w.r; // r(s) - r(s')
    check_jacobian(R, w.u, opt);
    return retarded_tensor(2.0 * q, R, w.u, -w.u, w.a);
}

FaradayTensor self_faraday(const HistoryView& h, double t, const RootOptions& opt)
{
    return self_faraday_at(h, h.state_at_time(t).r, opt);
}

FaradayTensor binary_term(const HistoryView& source, const FourVector& observer_event, double sigma,
                          const RootOptions& opt, DelayRoot* root_out)
{
    const double q = source.spec().q;
    if (q == 0.0)
        return FaradayTensor();
    const DelayRoot root = pair_delay(source, observer_event, sigma, opt);
    if (root_out)
        *root_out = root;
    const WorldlineSample& w = root.source_event;
    const FourVector R = w.r - observer_event; // r_j(s_j) - r_i(s_i)
    check_jacobian(R, w.u, opt);
    return retarded_tensor(q, R, w.u, w.u, w.a);
}

FaradayTensor binary_faraday(const HistoryView& source, const FourVector& observer_event, double sigma_i,
                             double sigma_j, const RootOptions& opt)
{
    const FaradayTensor a = binary_term(source, observer_event, sigma_i, opt);
    if (sigma_i == sigma_j)
        return 2.0 * a;
    return a + binary_term(source, observer_event, sigma_j, opt);
}

FaradayTensor binary_faraday_pointlimit(const HistoryView& source, const FourVector& observer_event,
                                        const RootOptions& opt)
{
    return 2.0 * binary_term(source, observer_event, 0.0, opt);
}

FourVector asymptotic_self_force(const HistoryView& h, double t, double sigma, const RootOptions& opt)
{
    const double q = h.spec().q;
    const double c = h.c();
    if (q == 0.0)
        return FourVector::Zero();
    const DelayRoot root = self_delay(h, t, sigma, opt);
    const KinematicDerivatives k = h.derivatives_at_time(t - root.t_ret);
    const FourVector& u = k.sample.u;
    const FourVector& a = k.sample.a;
    const FourVector& ad = k.adot;
    const double m_em = q * q / (c * c * sigma);
    const FourVector g_prime = (1.0 / 3.0) * (q * q / c) * (ad - u * dot(u, ad));
    return lower(FourVector(-m_em * c * a + g_prime));
}

FieldEvaluation total_faraday(const std::vector<HistoryView>& views, std::size_t i, double t, SelfForceMode mode,
                              const ExternalField& external, const RootOptions& opt, Interactions on)
{
    const HistoryView& hi = views[i];
    const FourVector obs = hi.state_at_time(t).r;
    FieldEvaluation ev;
    DelayRoot root;
    ev.F = external.faraday(obs);
    if (on.self && mode == SelfForceMode::Exact) {
        ev.F += self_faraday_at(hi, obs, opt, &root);
        ev.max_delay = std::max(ev.max_delay, root.t_ret);
    } else if (on.self) {
        ev.self_force = asymptotic_self_force(hi, t, hi.spec().sigma, opt);
    }
    for (std::size_t j = 0; j < views.size(); ++j) {
        if (j == i || !on.binary)
            continue;
        const double si = hi.spec().sigma, sj = views[j].spec().sigma;
        if (mode == SelfForceMode::Asymptotic) {
            ev.F += 2.0 * binary_term(views[j], obs, 0.0, opt, &root);
            ev.max_delay = std::max(ev.max_delay, root.t_ret);
        } else if (si == sj) {
            ev.F += 2.0 * binary_term(views[j], obs, si, opt, &root);
            ev.max_delay = std::max(ev.max_delay, root.t_ret);
        } else {
            ev.F += binary_term(views[j], obs, si, opt, &root);
            ev.max_delay = std::max(ev.max_delay, root.t_ret);
            ev.F += binary_term(views[j], obs, sj, opt, &root);
            ev.max_delay = std::max(ev.max_delay, root.t_ret);
        }
    }
    return ev;
}

FourVector four_force(const FieldEvaluation& ev, const FourVector& u, double q, double c)
{
    return (q / c) * contract_force(ev.F, u) + ev.self_force;
}

FourVector effective_potential(const std::vector<HistoryView>& views, std::size_t i, const FourVector& observer_event,
                               const ExternalField& external, const RootOptions& opt)
{
    const HistoryView& hi = views[i];
    FourVector A = raise(external.potential(observer_event));
    if (hi.spec().q != 0.0)
        A += 2.0 * delta_line_integral(hi, observer_event, hi.spec().sigma, hi.spec().q, LineWeight::FourVelocity, opt);
    for (std::size_t j = 0; j < views.size(); ++j) {
        if (j == i || views[j].spec().q == 0.0)
            continue;
        const double qj = views[j].spec().q;
        const FourVector a = delta_line_integral(views[j], observer_event, views[j].spec().sigma, qj,
                                                 LineWeight::FourVelocity, opt);
        if (views[j].spec().sigma == hi.spec().sigma)
            A += 2.0 * a;
        else
            A += a + delta_line_integral(views[j], observer_event, hi.spec().sigma, qj, LineWeight::FourVelocity, opt);
    }
    return lower(A);
}

} // namespace rnb
