#pragma once

#include "rnb/errors.hpp"
#include "rnb/minkowski.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rnb {

struct ParticleSpec {
    double m0 = 1.0;
    double q = 0.0;
    double sigma = 1.0;
    std::string label;

    // Leading-order EM mass q^2/(c^2 sigma).
    double em_mass(double c) const { return q * q / (c * c * sigma); }
    void validate() const;
};

struct WorldlineSample {
    double t = 0.0;
    double s = 0.0;
    FourVector r = FourVector::Zero();
    FourVector u = FourVector::Zero();
    FourVector a = FourVector::Zero();
};

struct Tolerances {
    double constraint_tol = 1e-9;
    double hard_tol = 1e-6;
};

// Sample with r^0 = ct, u from the coordinate velocity, s and a as given.
WorldlineSample make_sample(double t, double s, const Vector3& x, const Vector3& v, const FourVector& a, double c);

enum class Prehistory {
    Inertial, // exact linear extension for all t before the first sample
    Bounded   // no data before the first sample
};

class WorldlineHistory {
public:
    WorldlineHistory() = default;

    // Single node at t0 with inertial prehistory (r0, u0 constant).
    static WorldlineHistory inertial(const ParticleSpec& spec, double c, double t0, const Vector3& x0,
                                     const Vector3& v0, double s0 = 0.0, Tolerances tol = {});

    // Explicit prehistory samples (strictly increasing t).
    static WorldlineHistory from_samples(const ParticleSpec& spec, double c, std::vector<WorldlineSample> samples,
                                         Prehistory kind = Prehistory::Bounded, Tolerances tol = {});

    // A NaN sample.s is filled by Simpson quadrature of c dt / gamma over the new interval.
    void append(WorldlineSample sample);
    void set_last_acceleration(const FourVector& a);
    void set_last_sample(const WorldlineSample& sample);

    const ParticleSpec& spec() const { return spec_; }
    double c() const { return c_; }
    const Tolerances& tolerances() const { return tol_; }
    Prehistory prehistory() const { return kind_; }
    const std::vector<WorldlineSample>& samples() const { return samples_; }
    const WorldlineSample& front() const { return samples_.front(); }
    const WorldlineSample& back() const { return samples_.back(); }
    std::size_t size() const { return samples_.size(); }
    double first_time() const { return samples_.front().t; }
    double last_time() const { return samples_.back().t; }

    WorldlineSample state_at_time(double t) const;
    double proper_time_of(double t) const;

private:
    friend class HistoryView;
    ParticleSpec spec_;
    double c_ = 1.0;
    Tolerances tol_;
    Prehistory kind_ = Prehistory::Inertial;
    std::vector<WorldlineSample> samples_;
};

struct KinematicDerivatives {
    WorldlineSample sample;
    FourVector adot = FourVector::Zero(); // d^2u/ds^2
};

// Read-only view of a history, optionally extended by one provisional sample past
// the last node (used for Runge-Kutta substages).
class HistoryView {
public:
    HistoryView(const WorldlineHistory& h) : h_(&h) {}
    HistoryView(const WorldlineHistory& h, const WorldlineSample& tail) : h_(&h), tail_(tail) {}

    const WorldlineHistory& history() const { return *h_; }
    const ParticleSpec& spec() const { return h_->spec_; }
    double c() const { return h_->c_; }
    double present() const { return tail_ ? tail_->t : h_->last_time(); }
    double earliest() const;

    WorldlineSample state_at_time(double t) const;
    KinematicDerivatives derivatives_at_time(double t) const;
    double proper_time_of(double t) const;
    // Coordinate time at which the accumulated proper time equals s.
    double time_at_proper_time(double s) const;

private:
    struct Segment {
        const WorldlineSample* lo = nullptr;
        const WorldlineSample* hi = nullptr;
    };
    Segment locate(double t) const;
    KinematicDerivatives interpolate(const Segment& seg, double t, bool need_adot) const;
    WorldlineSample prehistory_state(double t) const;

    const WorldlineHistory* h_;
    std::optional<WorldlineSample> tail_;
};

void write_csv(std::ostream& os, const WorldlineHistory& h, const std::string& header_comment = "");
std::vector<WorldlineSample> read_csv(std::istream& is);

} // namespace rnb
