#pragma once

#include "rnb/dynamics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rnb {

struct ExternalSpec {
    std::string type = "none"; // none | uniform | pulse
    Vector3 E = Vector3::Zero();
    Vector3 B = Vector3::Zero();
    double t_on = 0.0;  // pulse only
    double t_off = 0.0; // pulse only
    double ramp = 0.0;  // pulse only

    bool operator==(const ExternalSpec&) const = default;
};

struct ParticleConfig {
    std::string label;
    double m0 = 1.0;
    double q = 0.0;
    double sigma = 1.0;
    Vector3 position = Vector3::Zero();
    Vector3 velocity = Vector3::Zero();
    std::string prehistory; // CSV path, relative to the config file

    bool operator==(const ParticleConfig&) const = default;
};

struct OracleSection {
    double w = 0.0; // 0: w_factor times the node-spacing width
    double w_factor = 4.0;
    int nodes = 64;
    double fd_step = 1e-6;
    double t_begin = 0.0;
    double t_end = 0.0; // 0: run end minus one step

    bool operator==(const OracleSection&) const = default;
};

struct RunConfig {
    double c = 1.0;
    std::string mode = "exact"; // exact | asymptotic
    double dt = 0.01;
    double t0 = 0.0;
    double t_end = 1.0;
    double constraint_tol = 1e-9;
    double hard_tol = 1e-6;
    double root_tol_scale = 1e-12;
    double jacobian_tol_scale = 1e-10;
    int max_iter = 200;
    std::string output_dir = "out";
    std::uint64_t seed = 1;
    bool parallel = false;
    bool renormalize_velocity = false;
    ExternalSpec external;
    std::vector<ParticleConfig> particles;
    OracleSection oracle;
    std::vector<double> sigmas; // compare-asymptotic sweep
    std::string base_dir;       // directory of the config file; not serialized

    bool operator==(const RunConfig& o) const;
    void validate() const;

    SelfForceMode self_force_mode() const;
    IntegratorOptions integrator_options() const;
    ExternalField external_field() const;
    std::vector<ParticleInit> particle_inits() const;
};

RunConfig parse_config(const std::string& text, const std::string& base_dir = "");
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

// FNV-1a over the serialized form.
std::string config_hash(const RunConfig& cfg);

} // namespace rnb
