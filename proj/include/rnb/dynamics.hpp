#pragma once

#include "rnb/canonical.hpp"
#include "rnb/fields.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rnb {

struct ParticleInit {
    ParticleSpec spec;
    Vector3 x0 = Vector3::Zero();
    Vector3 v0 = Vector3::Zero();
    // Explicit prehistory ending at t0; otherwise an inertial prehistory is synthesized.
    std::optional<std::vector<WorldlineSample>> prehistory;
};

struct IntegratorOptions {
    RootOptions roots;
    Tolerances tol;
    bool renormalize_velocity = false;
    bool parallel = false;
    bool canonical_diagnostics = true; // H_eff, total p and M per step
    Interactions interactions;
};

struct SystemState {
    std::vector<WorldlineHistory> histories;
    double t0 = 0.0;
    long steps_taken = 0;
    double t_now = 0.0;
    ExternalField external;
    SelfForceMode mode = SelfForceMode::Exact;
    double dt = 0.01;
    double c = 1.0;
    IntegratorOptions opt;
    double required_coverage = 0.0; // max delay at t0

    std::size_t size() const { return histories.size(); }
};

struct DiagnosticsRecord {
    long step = 0;
    double t = 0.0;
    std::vector<double> constraint; // |u.u - 1|
    std::vector<double> H_eff;
    std::vector<double> line_element; // |ds - sqrt(dr.dr)| / ds over the step
    FourVector p_total = FourVector::Zero();
    Matrix4 M_total = Matrix4::Zero();
    double max_delay = 0.0;
    double wall_ms = 0.0;
};

struct Diagnostics {
    std::vector<DiagnosticsRecord> records;
    // Wall time is kept in memory only so repeated runs produce identical files.
    void write_csv(std::ostream& os, const std::string& header_comment = "") const;
    double max_constraint() const;
};

SystemState seed(const std::vector<ParticleInit>& particles, double t0, double c, const ExternalField& external,
                 SelfForceMode mode, double dt, const IntegratorOptions& opt = {});

void step(SystemState& state, Diagnostics* diag = nullptr);

struct RunSinks {
    std::string output_dir; // empty: no files
    std::string header_comment;
};

Diagnostics run(SystemState& state, double t_end, const RunSinks& sinks = {});

void write_outputs(const SystemState& state, const Diagnostics& diag, const RunSinks& sinks);

} // namespace rnb
