#pragma once

#include "rnb/fields.hpp"

#include <cstdint>
#include <vector>

namespace rnb {

struct OracleConfig {
    double w = 0.0;       // Gaussian width in the squared-interval argument
    int nodes = 64;       // observer nodes per worldline
    double fd_step = 1e-6;
    void validate() const;
};

// Nodes at uniform proper-time spacing h. Observer nodes are [first_observer, first_observer + observers);
// the nodes before them supply the retarded past, and one node follows.
struct DiscreteWorldline {
    ParticleSpec spec;
    double c = 1.0;
    double h = 0.0;
    std::vector<FourVector> r, u;
    int first_observer = 0;
    int observers = 0;
};

DiscreteWorldline discretize(const WorldlineHistory& h, double t_begin, double t_end, int nodes, double lookback);

// factor times the largest squared-interval increment between adjacent source nodes near a root.
double calibrated_width(const std::vector<DiscreteWorldline>& wl, double factor = 4.0);

// Regularized covariant potential of particle i at x from the frozen node sets.
FourVector regularized_potential(const std::vector<DiscreteWorldline>& wl, std::size_t i, const FourVector& x,
                                 const ExternalField& external, double w);

struct NodeComparison {
    int particle = 0;
    int node = 0;
    FourVector mass_gradient = FourVector::Zero();        // per unit proper time
    FourVector interaction_gradient = FourVector::Zero(); // per unit proper time
    FourVector force = FourVector::Zero();                // implemented (q/c) F^tot u, covariant
};

struct OracleReport {
    std::vector<NodeComparison> nodes;
    double w = 0.0;
    double h = 0.0;
    double force_relative = 0.0;    // max |grad_int - force| / max |force|
    double gradient_norm = 0.0;     // RMS of the full gradient per unit proper time
    double mass_gradient_max = 0.0; // max |mass part|
};

// Gradient of the discretized action with respect to every observer node, compared against the implemented
// forces evaluated on the histories.
OracleReport action_oracle(const std::vector<DiscreteWorldline>& wl, const std::vector<WorldlineHistory>& histories,
                           const ExternalField& external, const OracleConfig& cfg);

// Gradient only (no implemented force), for extremality comparisons.
double action_gradient_norm(const std::vector<DiscreteWorldline>& wl, const ExternalField& external,
                            const OracleConfig& cfg);

// Relative difference of the symmetric binary double sum evaluated with the roles of A and B exchanged.
double swap_symmetry_residual(const DiscreteWorldline& a, const DiscreteWorldline& b, double w);

// Smooth random displacement of the observer nodes (zero at the window ends).
std::vector<DiscreteWorldline> perturbed(const std::vector<DiscreteWorldline>& wl, double amplitude,
                                         std::uint64_t seed);

// x(t) = x0 + sum of three random low-frequency sinusoids; speed stays below 0.5 c.
WorldlineHistory random_smooth_history(const ParticleSpec& spec, double c, const Vector3& x0, std::uint64_t seed,
                                       double t_begin, double t_end, double dt);

} // namespace rnb
