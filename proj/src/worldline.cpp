#include "rnb/worldline.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace rnb {

void ParticleSpec::validate() const
{
    if (!(std::isfinite(m0) && m0 > 0))
        throw Error(ErrorKind::Validation, "particle '" + label + "': m0 must be positive");
    if (!(std::isfinite(sigma) && sigma > 0))
        throw Error(ErrorKind::Validation, "particle '" + label + "': sigma must be positive");
    if (!std::isfinite(q))
        throw Error(ErrorKind::Validation, "particle '" + label + "': q must be finite");
}

WorldlineSample make_sample(double t, double s, const Vector3& x, const Vector3& v, const FourVector& a, double c)
{
    WorldlineSample w;
    w.t = t;
    w.s = s;
    w.r = make_four(c * t, x);
    w.u = four_velocity(v, c);
    w.a = a;
    return w;
}

namespace {

Vector3 spatial(const FourVector& r) { return r.tail<3>(); }

Vector3 coordinate_velocity(const WorldlineSample& w, double c) { return c * spatial(w.u) / w.u(0); }

FourVector du_dt(const WorldlineSample& w, double c) { return c * w.a / w.u(0); }

void check_sample(const WorldlineSample& w, const Tolerances& tol)
{
    if (!(std::isfinite(w.t) && w.r.allFinite() && w.u.allFinite() && w.a.allFinite()))
        throw Error(ErrorKind::ConstraintViolation, "non-finite sample");
    const double norm = dot(w.u, w.u);
    if (std::abs(norm - 1.0) > tol.hard_tol)
        throw Error(ErrorKind::ConstraintViolation, "|u.u - 1| = " + std::to_string(std::abs(norm - 1.0)));
}

struct Hermite {
    double h00, h10, h01, h11;
};

Hermite basis(double th)
{
    const double t2 = th * th, t3 = t2 * th;
    return {2 * t3 - 3 * t2 + 1, t3 - 2 * t2 + th, -2 * t3 + 3 * t2, t3 - t2};
}
Hermite basis_d1(double th) { return {6 * th * th - 6 * th, 3 * th * th - 4 * th + 1, -6 * th * th + 6 * th, 3 * th * th - 2 * th}; }
Hermite basis_d2(double th) { return {12 * th - 6, 6 * th - 4, -12 * th + 6, 6 * th - 2}; }

template <typename V>
V hermite(const Hermite& b, const V& y0, const V& m0, const V& y1, const V& m1, double h)
{
    return b.h00 * y0 + b.h10 * h * m0 + b.h01 * y1 + b.h11 * h * m1;
}

// gamma at the midpoint of [lo, hi] from the Hermite interpolant of u.
double mid_gamma(const WorldlineSample& lo, const WorldlineSample& hi, double c)
{
    const double h = hi.t - lo.t;
    const Hermite b = basis(0.5);
    return b.h00 * lo.u(0) + b.h10 * h * du_dt(lo, c)(0) + b.h01 * hi.u(0) + b.h11 * h * du_dt(hi, c)(0);
}

} // namespace

WorldlineHistory WorldlineHistory::inertial(const ParticleSpec& spec, double c, double t0, const Vector3& x0,
                                            const Vector3& v0, double s0, Tolerances tol)
{
    WorldlineHistory h;
    h.spec_ = spec;
    h.c_ = c;
    h.tol_ = tol;
    h.kind_ = Prehistory::Inertial;
    WorldlineSample w = make_sample(t0, s0, x0, v0, FourVector::Zero(), c);
    check_sample(w, tol);
    h.samples_.push_back(w);
    return h;
}

WorldlineHistory WorldlineHistory::from_samples(const ParticleSpec& spec, double c,
                                                std::vector<WorldlineSample> samples, Prehistory kind,
                                                Tolerances tol)
{
    if (samples.empty())
        throw Error(ErrorKind::Validation, "empty prehistory");
    WorldlineHistory h;
    h.spec_ = spec;
    h.c_ = c;
    h.tol_ = tol;
    h.kind_ = kind;
    for (auto& w : samples) {
        w.r(0) = c * w.t;
        if (h.samples_.empty()) {
            check_sample(w, tol);
            if (std::isnan(w.s))
                w.s = 0.0;
            h.samples_.push_back(w);
        } else {
            h.append(w);
        }
    }
    return h;
}

void WorldlineHistory::append(WorldlineSample w)
{
    const WorldlineSample& last = samples_.back();
    if (!(w.t > last.t))
        throw Error(ErrorKind::NonMonotonicTime, "append at t=" + std::to_string(w.t) +
                                                     " not after t=" + std::to_string(last.t));
    check_sample(w, tol_);
    w.r(0) = c_ * w.t;
    if (std::isnan(w.s)) {
        const double h = w.t - last.t;
        w.s = last.s + h / 6.0 * (c_ / last.u(0) + 4.0 * c_ / mid_gamma(last, w, c_) + c_ / w.u(0));
    }
    if (!(w.s > last.s))
        throw Error(ErrorKind::NonMonotonicTime, "proper time not increasing");
    samples_.push_back(w);
}

void WorldlineHistory::set_last_acceleration(const FourVector& a) { samples_.back().a = a; }

void WorldlineHistory::set_last_sample(const WorldlineSample& w)
{
    samples_.back() = w;
    samples_.back().r(0) = c_ * w.t;
}

WorldlineSample WorldlineHistory::state_at_time(double t) const { return HistoryView(*this).state_at_time(t); }

double WorldlineHistory::proper_time_of(double t) const { return HistoryView(*this).proper_time_of(t); }

double HistoryView::earliest() const
{
    return h_->kind_ == Prehistory::Inertial ? -std::numeric_limits<double>::infinity() : h_->first_time();
}

HistoryView::Segment HistoryView::locate(double t) const
{
    const auto& s = h_->samples_;
    if (!(t <= present()))
        throw Error(ErrorKind::QueryBeyondPresent, "query t=" + std::to_string(t) + " beyond present " +
                                                       std::to_string(present()));
    if (t < s.front().t) {
        if (h_->kind_ == Prehistory::Bounded)
            throw Error(ErrorKind::HistoryTooShort, "query t=" + std::to_string(t) + " before recorded history " +
                                                        std::to_string(s.front().t));
        return {};
    }
    if (t > s.back().t)
        return {&s.back(), &*tail_};
    auto it = std::upper_bound(s.begin(), s.end(), t, [](double x, const WorldlineSample& w) { return x < w.t; });
    const WorldlineSample* lo = &*(it - 1);
    if (lo->t == t)
        return {lo, lo};
    return {lo, &*it};
}

WorldlineSample HistoryView::prehistory_state(double t) const
{
    const WorldlineSample& f = h_->samples_.front();
    const double c = h_->c_;
    WorldlineSample w;
    w.t = t;
    w.u = f.u;
    w.a = FourVector::Zero();
    w.r = make_four(c * t, Vector3(spatial(f.r) + coordinate_velocity(f, c) * (t - f.t)));
    w.s = f.s + c * (t - f.t) / f.u(0);
    return w;
}

KinematicDerivatives HistoryView::interpolate(const Segment& seg, double t, bool need_adot) const
{
    const double c = h_->c_;
    const WorldlineSample& lo = *seg.lo;
    const WorldlineSample& hi = *seg.hi;
    const double h = hi.t - lo.t;
    const double th = (t - lo.t) / h;
    const Hermite b0 = basis(th), b1 = basis_d1(th), b2 = basis_d2(th);

    const Vector3 x0 = spatial(lo.r), x1 = spatial(hi.r);
    const Vector3 v0 = coordinate_velocity(lo, c), v1 = coordinate_velocity(hi, c);
    const FourVector du0 = du_dt(lo, c), du1 = du_dt(hi, c);

    KinematicDerivatives out;
    WorldlineSample& w = out.sample;
    w.t = t;
    w.r = make_four(c * t, hermite<Vector3>(b0, x0, v0, x1, v1, h));
    w.u = hermite<FourVector>(b0, lo.u, du0, hi.u, du1, h);
    const FourVector U1 = hermite<FourVector>(b1, lo.u, du0, hi.u, du1, h) / h;
    w.a = w.u(0) / c * U1;
    if (need_adot) {
        const FourVector U2 = hermite<FourVector>(b2, lo.u, du0, hi.u, du1, h) / (h * h);
        const FourVector da_dt = U1(0) / c * U1 + w.u(0) / c * U2;
        out.adot = w.u(0) / c * da_dt;
    }
    w.s = proper_time_of(t);
    return out;
}

WorldlineSample HistoryView::state_at_time(double t) const
{
    const Segment seg = locate(t);
    if (!seg.lo)
        return prehistory_state(t);
    if (seg.lo == seg.hi)
        return *seg.lo;
    return interpolate(seg, t, false).sample;
}

KinematicDerivatives HistoryView::derivatives_at_time(double t) const
{
    Segment seg = locate(t);
    if (!seg.lo)
        return {prehistory_state(t), FourVector::Zero()};
    if (seg.lo != seg.hi)
        return interpolate(seg, t, true);

    // Exact node: stored sample, second derivative from an adjacent segment.
    KinematicDerivatives out{*seg.lo, FourVector::Zero()};
    const auto& s = h_->samples_;
    const std::size_t k = static_cast<std::size_t>(seg.lo - s.data());
    Segment adj;
    if (k > 0)
        adj = {&s[k - 1], &s[k]};
    else if (s.size() > 1)
        adj = {&s[0], &s[1]};
    else if (tail_)
        adj = {&s[0], &*tail_};
    if (adj.lo)
        out.adot = interpolate(adj, t, true).adot;
    return out;
}

double HistoryView::proper_time_of(double t) const
{
    const Segment seg = locate(t);
    if (!seg.lo)
        return prehistory_state(t).s;
    if (seg.lo == seg.hi)
        return seg.lo->s;
    const double c = h_->c_;
    const WorldlineSample& lo = *seg.lo;
    const WorldlineSample& hi = *seg.hi;
    const double h = hi.t - lo.t;
    const FourVector du0 = du_dt(lo, c), du1 = du_dt(hi, c);
    auto gamma_at = [&](double tt) {
        const Hermite b = basis((tt - lo.t) / h);
        return b.h00 * lo.u(0) + b.h10 * h * du0(0) + b.h01 * hi.u(0) + b.h11 * h * du1(0);
    };
    const double dt = t - lo.t;
    return lo.s + dt / 6.0 * (c / lo.u(0) + 4.0 * c / gamma_at(lo.t + 0.5 * dt) + c / gamma_at(t));
}

double HistoryView::time_at_proper_time(double s) const
{
    const double c = h_->c_;
    const WorldlineSample& f = h_->samples_.front();
    if (s < f.s) {
        if (h_->kind_ == Prehistory::Bounded)
            throw Error(ErrorKind::HistoryTooShort, "proper time before recorded history");
        return f.t + (s - f.s) * f.u(0) / c;
    }
    double lo = f.t, hi = present();
    if (s > proper_time_of(hi))
        throw Error(ErrorKind::QueryBeyondPresent, "proper time beyond present");
    // Newton with a bisection safeguard; ds/dt = c / gamma.
    double t = lo + (s - f.s) / (proper_time_of(hi) - f.s + 1e-300) * (hi - lo);
    for (int it = 0; it < 200; ++it) {
        const double g = proper_time_of(t) - s;
        if (g > 0)
            hi = t;
        else
            lo = t;
        if (std::abs(g) <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(s)))
            return t;
        double next = t - g * state_at_time(t).u(0) / c;
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        if (next == t)
            return t;
        t = next;
    }
    return t;
}

void write_csv(std::ostream& os, const WorldlineHistory& h, const std::string& header_comment)
{
    if (!header_comment.empty())
        os << "# " << header_comment << '\n';
    os << "t,s,r0,r1,r2,r3,u0,u1,u2,u3,a0,a1,a2,a3\n";
    os << std::setprecision(17);
    for (const auto& w : h.samples()) {
        os << w.t << ',' << w.s;
        for (int i = 0; i < 4; ++i) os << ',' << w.r(i);
        for (int i = 0; i < 4; ++i) os << ',' << w.u(i);
        for (int i = 0; i < 4; ++i) os << ',' << w.a(i);
        os << '\n';
    }
}

std::vector<WorldlineSample> read_csv(std::istream& is)
{
    std::vector<WorldlineSample> out;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        if (!header) {
            header = true;
            if (line.rfind("t,", 0) == 0)
                continue;
        }
        std::vector<double> v;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            v.push_back(std::stod(cell));
        if (v.size() != 14)
            throw Error(ErrorKind::Validation, "trajectory row needs 14 columns: " + line);
        WorldlineSample w;
        w.t = v[0];
        w.s = v[1];
        for (int i = 0; i < 4; ++i) {
            w.r(i) = v[2 + i];
            w.u(i) = v[6 + i];
            w.a(i) = v[10 + i];
        }
        out.push_back(w);
    }
    return out;
}

} // namespace rnb
