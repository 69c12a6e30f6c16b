#pragma once

#include "rnb/worldline.hpp"

#include <optional>
#include <vector>

namespace rnb {

struct DelayRoot {
    double t_ret = 0.0;
    double s_ret = 0.0; // proper-time delay of the source
    WorldlineSample source_event;
    double residual = 0.0;
    int iterations = 0;
    bool bisected = false;
};

struct RootOptions {
    double root_tol_scale = 1e-12;
    double jac_tol_scale = 1e-10;
    int max_iter = 200;
    std::optional<double> seed;
};

// Causal root of c tau = sqrt(|x_obs(t) - x_src(t - tau)|^2 + sigma^2), t = observer_event^0 / c.
DelayRoot pair_delay(const HistoryView& source, const FourVector& observer_event, double sigma,
                     const RootOptions& opt = {});

// Same equation with the particle observing its own past.
DelayRoot self_delay(const HistoryView& h, double t, double sigma, const RootOptions& opt = {});

enum class LineWeight {
    FourVelocity, // q u / |R.u|
    Scalar        // (q / |R.u|, 0, 0, 0)
};

// Resolves 2q * integral ds u delta(R.R - sigma^2) at the causal root.
FourVector delta_line_integral(const HistoryView& source, const FourVector& observer_event, double sigma, double q,
                               LineWeight weight = LineWeight::FourVelocity, const RootOptions& opt = {});
FourVector delta_line_integral(const DelayRoot& root, const FourVector& observer_event, double q,
                               LineWeight weight = LineWeight::FourVelocity, const RootOptions& opt = {});

// Throws DegenerateJacobian when |R.u| is below jac_tol_scale * |R| |u|.
void check_jacobian(const FourVector& R, const FourVector& u, const RootOptions& opt);

// Largest self and pair delay over the system at time t.
double max_delay(const std::vector<WorldlineHistory>& histories, double t, const RootOptions& opt = {});

} // namespace rnb
