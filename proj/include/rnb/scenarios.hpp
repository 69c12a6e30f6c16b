#pragma once

#include "rnb/dynamics.hpp"

#include <functional>
#include <vector>

namespace rnb {

// Uniform E scaled by profile(t) plus a static uniform B.
ExternalField profiled_uniform(const Vector3& E, const Vector3& B, std::function<double(double)> profile, double c);

// 0 before t_on, 1 on [t_on + ramp, t_off - ramp], 0 after t_off; quintic smoothstep edges.
double smooth_pulse(double t, double t_on, double t_off, double ramp);

// Same worldline data with a different charge.
WorldlineHistory with_charge(const WorldlineHistory& h, double q);

double max_abs_position_difference(const WorldlineHistory& a, const WorldlineHistory& b);

// One-particle run driven by an external field that is switched off.
struct LocallyIsolatedConfig {
    ParticleSpec spec{1.0, 0.2, 0.5, "p"};
    double c = 1.0;
    Vector3 E = Vector3(0.05, 0.0, 0.0);
    double t0 = 0.0;
    double t_on = 0.0;
    double t_switch = 2.0;
    double ramp = 0.5;
    double t_end = 5.0;
    double dt = 0.02;
    SelfForceMode mode = SelfForceMode::Exact;
    bool field_enabled = true;
};

struct LocallyIsolatedReport {
    double max_self_force_post = 0.0;
    double H_eff_max_jump = 0.0;
    double H_eff_jump_at_switch = 0.0;
    double self_force_q_ratio = 0.0; // |f(2q)| / |f(q)| on the final snapshot
    bool self_force_nonzero = false;
    long steps = 0;
    SystemState final_state;
    Diagnostics diagnostics;
};

LocallyIsolatedReport demo_locally_isolated(const LocallyIsolatedConfig& cfg);

struct GloballyIsolatedConfig {
    std::vector<ParticleInit> particles;
    double c = 1.0;
    double t0 = 0.0;
    double t_end = 2.0;
    double dt = 0.02;
    SelfForceMode mode = SelfForceMode::Exact;
};

struct GloballyIsolatedReport {
    double mirror_residual = 0.0; // |x_0 + x_1 - (x_0 + x_1)(t0)|, two particles only
    Vector3 momentum_drift = Vector3::Zero();
    double bracket_certificate = 0.0; // max |[p0|x', p_l]| on the final snapshot
    double increment_mismatch = 0.0;
    double lorentz_residual = 0.0;
    double max_constraint = 0.0;
    SystemState final_state;
    Diagnostics diagnostics;
};

GloballyIsolatedReport demo_globally_isolated(const GloballyIsolatedConfig& cfg);

struct FlowConfig {
    std::vector<ParticleInit> a, b;
    double c = 1.0;
    double t0 = 0.0;
    double dt = 0.02;
    double window = 0.0; // 0: one max-delay window
    SelfForceMode mode = SelfForceMode::Exact;
};

struct FlowReport {
    double initial_agreement = 0.0;
    double window = 0.0;
    double integration_tolerance = 0.0;
    double max_divergence = 0.0;
    std::vector<double> t, divergence;
    bool diverged() const { return max_divergence > 10.0 * integration_tolerance; }
    bool passed() const { return initial_agreement <= 1e-14 && diverged(); }
};

FlowReport flow_non_bijectivity_check(const FlowConfig& cfg);

// Step-halving estimate of the position error of a run: max |x_dt - x_{dt/2}| at common nodes.
double integration_tolerance(const std::vector<ParticleInit>& particles, double t0, double t_end, double dt, double c,
                             const ExternalField& external, SelfForceMode mode);

struct BoostReport {
    double beta = 0.0;
    double max_difference = 0.0;
    double integration_tolerance = 0.0;
    int compared = 0;
    bool passed() const { return compared > 0 && max_difference <= 10.0 * integration_tolerance; }
};

// Two particles at rest, separated along y; the run is repeated in a frame boosted along x.
BoostReport boost_covariance_check(double beta = 0.3, double t_end = 2.0, double dt = 0.02);

struct OrderStudyReport {
    double dt = 0.0;
    double error_dt = 0.0;
    double error_half = 0.0;
    double ratio = 0.0;
};

// Oppositely charged pair held by a uniform field that decays smoothly after t0.
std::vector<ParticleInit> balanced_pair(double q, double d, double sigma, double m0);
ExternalField balancing_field(const std::vector<ParticleInit>& pair, double c, double t0, double kappa);
OrderStudyReport rk4_order_study(double dt = 0.1, double t_end = 4.0);

struct GapRow {
    double sigma = 0.0;
    double max_gap = 0.0;
    double fitted_mass = 0.0;
    double em_mass = 0.0;
    double fitted_gprime = 0.0;
};

struct GapStudyConfig {
    ParticleSpec spec{1.0, 1.0, 1.0, "p"};
    double c = 1.0;
    double amplitude = 0.3;
    double omega = 1.0;
    double node_spacing = 1e-3;
    double t_begin = 0.0;
    double t_end = 2.0;
    double probe_spacing = 0.05;
    std::vector<double> sigmas{0.4, 0.2, 0.1, 0.05, 0.025};
};

// Smooth oscillating worldline x = A sin(w t) sampled on a uniform grid.
WorldlineHistory oscillating_history(const GapStudyConfig& cfg, double sigma);
// Exact self 4-force contracted with the retarded velocity minus the asymptotic form, and a
// least-squares fit of the mass and g' coefficients.
std::vector<GapRow> self_force_gap_study(const GapStudyConfig& cfg);

} // namespace rnb
