#pragma once

#include "rnb/retardation.hpp"

#include <functional>
#include <vector>

namespace rnb {

class ExternalField {
public:
    enum class Kind { None, Uniform, Analytic };
    typedef std::function<FaradayTensor(const FourVector&)> TensorFn;
    typedef std::function<FourVector(const FourVector&)> PotentialFn;

    static ExternalField none() { return ExternalField(); }
    static ExternalField uniform(const Vector3& E, const Vector3& B);
    // Potential is covariant A_mu; the caller keeps F and A consistent.
    static ExternalField analytic(TensorFn F, PotentialFn A);

    Kind kind() const { return kind_; }
    FaradayTensor faraday(const FourVector& r) const;
    // Covariant; uniform fields use the linear gauge A_mu = -1/2 F_{mu nu} r^nu.
    FourVector potential(const FourVector& r) const;

private:
    Kind kind_ = Kind::None;
    FaradayTensor F0_;
    TensorFn F_;
    PotentialFn A_;
};

enum class SelfForceMode { Exact, Asymptotic };

// Retarded self tensor seen at observer_event from the particle's own past.
FaradayTensor self_faraday_at(const HistoryView& h, const FourVector& observer_event, const RootOptions& opt = {},
                              DelayRoot* root_out = nullptr);
FaradayTensor self_faraday(const HistoryView& h, double t, const RootOptions& opt = {});

// Single-root binary term H_{mu nu} of source j at observer_event with delta shift sigma.
FaradayTensor binary_term(const HistoryView& source, const FourVector& observer_event, double sigma,
                          const RootOptions& opt = {}, DelayRoot* root_out = nullptr);
FaradayTensor binary_faraday(const HistoryView& source, const FourVector& observer_event, double sigma_i,
                             double sigma_j, const RootOptions& opt = {});
FaradayTensor binary_faraday_pointlimit(const HistoryView& source, const FourVector& observer_event,
                                        const RootOptions& opt = {});

// Covariant g_mu at the retarded proper time.
FourVector asymptotic_self_force(const HistoryView& h, double t, double sigma, const RootOptions& opt = {});

// Which retarded contributions total_faraday includes; the external field is always included.
struct Interactions {
    bool self = true;
    bool binary = true;
};

struct FieldEvaluation {
    FaradayTensor F;
    FourVector self_force = FourVector::Zero(); // covariant, asymptotic mode only
    double max_delay = 0.0;
};

FieldEvaluation total_faraday(const std::vector<HistoryView>& views, std::size_t i, double t, SelfForceMode mode,
                              const ExternalField& external, const RootOptions& opt = {}, Interactions on = {});

// Covariant m0 c du_mu/ds = (q/c) F_{mu nu} u^nu (+ g_mu).
FourVector four_force(const FieldEvaluation& ev, const FourVector& u, double q, double c);

// A_ext + 2 A_self + sum_j two-root binary potential, covariant, at an arbitrary observer event.
FourVector effective_potential(const std::vector<HistoryView>& views, std::size_t i, const FourVector& observer_event,
                               const ExternalField& external, const RootOptions& opt = {});

} // namespace rnb
