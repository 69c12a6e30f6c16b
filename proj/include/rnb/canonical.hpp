#pragma once

#include "rnb/fields.hpp"

#include <array>
#include <functional>
#include <optional>
#include <vector>

namespace rnb {

// x = {(r^(i)mu, P^(i)_mu)}: particle i occupies entries [8i, 8i+8), r first.
typedef Eigen::VectorXd CanonicalState;

inline int r_index(int i, int mu) { return 8 * i + mu; }
inline int P_index(int i, int mu) { return 8 * i + 4 + mu; }
inline FourVector r_of(const CanonicalState& x, int i) { return x.segment<4>(8 * i); }
inline FourVector P_of(const CanonicalState& x, int i) { return x.segment<4>(8 * i + 4); }
inline int particle_count(const CanonicalState& x) { return static_cast<int>(x.size() / 8); }

// c0 + g.x + 1/2 x^T Q x with Q symmetric.
struct Quadratic {
    double c0 = 0.0;
    Eigen::VectorXd g;
    Eigen::MatrixXd Q;
};

class PhaseFunction {
public:
    typedef std::function<double(const CanonicalState&)> ValueFn;
    typedef std::function<Eigen::VectorXd(const CanonicalState&)> GradientFn;

    PhaseFunction() = default;
    // Gradient by central differences with step fd_step * (1 + |x_k|).
    static PhaseFunction numeric(ValueFn f, double fd_step = 1e-6);
    static PhaseFunction analytic(ValueFn f, GradientFn grad);
    static PhaseFunction quadratic(Quadratic q);
    static PhaseFunction coordinate(int index, int dim);

    double operator()(const CanonicalState& x) const { return value_(x); }
    Eigen::VectorXd gradient(const CanonicalState& x) const;
    bool has_analytic_gradient() const { return static_cast<bool>(grad_) || quad_.has_value(); }
    const std::optional<Quadratic>& quadratic_form() const { return quad_; }
    double fd_step() const { return fd_step_; }

    friend PhaseFunction operator+(const PhaseFunction& a, const PhaseFunction& b);
    friend PhaseFunction operator*(double s, const PhaseFunction& a);
    friend PhaseFunction product(const PhaseFunction& a, const PhaseFunction& b);

private:
    ValueFn value_;
    GradientFn grad_;
    std::optional<Quadratic> quad_;
    double fd_step_ = 0.0;
};

// a^T J b with [r^(i)mu, P^(j)_nu] = delta^ij delta^mu_nu.
double symplectic_product(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

double poisson_bracket(const PhaseFunction& eta, const PhaseFunction& xi, const CanonicalState& x);

// [eta, xi] as a phase function: exact for quadratics, numeric otherwise.
PhaseFunction bracket_function(const PhaseFunction& eta, const PhaseFunction& xi, double fd_step = 1e-4);

struct BracketAlgebraReport {
    double antisymmetry = 0.0;
    double linearity = 0.0;
    double leibniz = 0.0;
    double jacobi = 0.0;
    double max() const { return std::max({antisymmetry, linearity, leibniz, jacobi}); }
};

struct PhaseTriple {
    PhaseFunction a, b, c;
};

BracketAlgebraReport check_bracket_algebra(const CanonicalState& x, const std::vector<PhaseTriple>& triples,
                                           double nested_fd_step = 1e-4);

struct GeneratorSet {
    std::array<PhaseFunction, 4> p;                // p_mu, covariant
    std::array<std::array<PhaseFunction, 4>, 4> M; // M_{mu nu} = -M_{nu mu}

    // F = -p^mu a_mu with covariant a_mu.
    PhaseFunction translation(const FourVector& a_cov) const;
    // F = 1/2 M^{mu nu} b_{mu nu} with covariant antisymmetric b.
    PhaseFunction lorentz(const Matrix4& b_cov) const;
};

GeneratorSet unconstrained_generators(int n_particles);

struct LorentzResiduals {
    double pp = 0.0;
    double Mp = 0.0;
    double MM = 0.0;
    double max() const { return std::max({pp, Mp, MM}); }
};

// Structure constants consistent with [r^mu, P_nu] = delta^mu_nu.
LorentzResiduals lorentz_conditions(const GeneratorSet& g, const CanonicalState& x);

FourVector effective_momentum(const FourVector& u, const ParticleSpec& spec, const FourVector& A_eff_cov, double c,
                              double hard_tol = 1e-6);

class FrozenHistoryContext {
public:
    FrozenHistoryContext(std::vector<WorldlineHistory> histories, ExternalField external, double c,
                         RootOptions opt = {});

    std::size_t size() const { return histories_.size(); }
    double c() const { return c_; }
    const std::vector<WorldlineHistory>& histories() const { return histories_; }
    const ExternalField& external() const { return external_; }
    const ParticleSpec& spec(std::size_t i) const { return histories_[i].spec(); }

    // Covariant A_eff for particle i at an arbitrary event.
    FourVector potential(std::size_t i, const FourVector& event) const;
    // d A_mu / d r^nu by central differences; column nu.
    Matrix4 potential_jacobian(std::size_t i, const FourVector& event, double fd_step = 1e-6) const;
    // A_eff at each particle's present event.
    const std::vector<FourVector>& present_potentials() const { return A_present_; }
    // Canonical state of the snapshot: r = present events, P = m0 c u + (q/c) A_eff.
    CanonicalState canonical_state() const;

private:
    std::vector<WorldlineHistory> histories_;
    ExternalField external_;
    double c_;
    RootOptions opt_;
    std::vector<FourVector> A_present_;
};

double effective_hamiltonian(const FourVector& r, const FourVector& P, std::size_t i, const FrozenHistoryContext& ctx);
double system_hamiltonian(const CanonicalState& x, const FrozenHistoryContext& ctx);
PhaseFunction hamiltonian_function(const FrozenHistoryContext& ctx);

CanonicalState canonical_flow_step(const CanonicalState& x, const FrozenHistoryContext& ctx,
                                   const std::vector<double>& ds);

struct InstantFormReport {
    double p0 = 0.0;
    Vector3 N_l0 = Vector3::Zero();
    Vector3 bracket_p0_pl = Vector3::Zero(); // [p0|x', p_l]
    double max_bracket = 0.0;
    double increment_mismatch = 0.0; // max relative mismatch against the difference equations
    std::vector<Vector3> dr_generated, dr_expected, dP_generated, dP_expected;
};

// Constrained state: spatial positions x^l and contravariant spatial momenta P^l per particle at the
// snapshot time; increments are for a coordinate-time step dt.
InstantFormReport instant_form_constrained(const std::vector<Vector3>& x, const std::vector<Vector3>& P,
                                           const FrozenHistoryContext& ctx, double dt, double fd_step = 1e-6);

// Full configuration for history functionals.
struct Configuration {
    CanonicalState x;
    std::vector<WorldlineHistory> histories;
    ExternalField external;
    double c = 1.0;
};

typedef std::function<double(const Configuration&)> HistoryFunctional;

// Applies z -> z + alpha [z, F] to the canonical state and to every history sample. F must generate
// an affine map of r (any element of the Poincare generator set does).
Configuration transform_configuration(const Configuration& cfg, const PhaseFunction& F, double alpha);

struct NonlocalOptions {
    double alpha = 1e-3;
    double noise_abs = 1e-6;
    double noise_rel = 0.05;
};

double nonlocal_bracket(const HistoryFunctional& xi, const Configuration& cfg, const PhaseFunction& F,
                        const NonlocalOptions& opt = {});

// H_N evaluated on a configuration (non-local functional of the histories).
double hamiltonian_functional(const Configuration& cfg);

} // namespace rnb
