#include "rnb/config.hpp"
#include "rnb/scenarios.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace rnb {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object())
        throw Error(ErrorKind::Validation, where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw Error(ErrorKind::Validation, "unknown key '" + it.key() + "' in " + where);
}

template <class T> void read(const json& j, const char* key, T& out, const std::string& where)
{
    if (!j.contains(key))
        return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorKind::Validation, std::string("bad value for '") + key + "' in " + where);
    }
}

void read_vec(const json& j, const char* key, Vector3& out, const std::string& where)
{
    if (!j.contains(key))
        return;
    const json& a = j.at(key);
    if (!a.is_array() || a.size() != 3)
        throw Error(ErrorKind::Validation, std::string("'") + key + "' in " + where + " must be a 3-array");
    for (int k = 0; k < 3; ++k) {
        if (!a[k].is_number())
            throw Error(ErrorKind::Validation, std::string("'") + key + "' in " + where + " must be numeric");
        out(k) = a[k].get<double>();
    }
}

json vec(const Vector3& v) { return json::array({v(0), v(1), v(2)}); }

void require_finite(double v, const std::string& name)
{
    if (!std::isfinite(v))
        throw Error(ErrorKind::Validation, name + " must be finite");
}

} // namespace

bool RunConfig::operator==(const RunConfig& o) const
{
    return c == o.c && mode == o.mode && dt == o.dt && t0 == o.t0 && t_end == o.t_end &&
           constraint_tol == o.constraint_tol && hard_tol == o.hard_tol && root_tol_scale == o.root_tol_scale &&
           jacobian_tol_scale == o.jacobian_tol_scale && max_iter == o.max_iter && output_dir == o.output_dir &&
           seed == o.seed && parallel == o.parallel && renormalize_velocity == o.renormalize_velocity &&
           external == o.external && particles == o.particles && oracle == o.oracle && sigmas == o.sigmas;
}

void RunConfig::validate() const
{
    for (auto [v, n] : {std::pair{c, "c"}, {dt, "dt"}, {t0, "t0"}, {t_end, "t_end"}, {constraint_tol, "constraint_tol"},
                        {hard_tol, "hard_tol"}, {root_tol_scale, "root_tol_scale"},
                        {jacobian_tol_scale, "jacobian_tol_scale"}})
        require_finite(v, n);
    if (!(c > 0))
        throw Error(ErrorKind::Validation, "c must be positive");
    if (!(dt > 0))
        throw Error(ErrorKind::Validation, "dt must be positive");
    if (!(t_end > t0))
        throw Error(ErrorKind::Validation, "t_end must exceed t0");
    if (mode != "exact" && mode != "asymptotic")
        throw Error(ErrorKind::Validation, "mode must be 'exact' or 'asymptotic'");
    if (!(constraint_tol > 0) || !(hard_tol > 0) || !(root_tol_scale > 0) || !(jacobian_tol_scale > 0) ||
        max_iter < 1)
        throw Error(ErrorKind::Validation, "tolerances must be positive");
    if (external.type != "none" && external.type != "uniform" && external.type != "pulse")
        throw Error(ErrorKind::Validation, "external.type must be none, uniform or pulse");
    if (!external.E.allFinite() || !external.B.allFinite())
        throw Error(ErrorKind::Validation, "external field must be finite");
    if (external.type == "pulse" && (!(external.t_off > external.t_on) || external.ramp < 0))
        throw Error(ErrorKind::Validation, "pulse needs t_off > t_on and ramp >= 0");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < particles.size(); ++i) {
        const ParticleConfig& p = particles[i];
        ParticleSpec{p.m0, p.q, p.sigma, p.label}.validate();
        if (!p.position.allFinite() || !p.velocity.allFinite())
            throw Error(ErrorKind::Validation, "particle state must be finite");
        if (p.prehistory.empty() && !(p.velocity.norm() < c))
            throw Error(ErrorKind::Validation, "particle speed must be below c");
        const std::string l = p.label.empty() ? "particle" + std::to_string(i) : p.label;
        if (!labels.insert(l).second)
            throw Error(ErrorKind::Validation, "duplicate particle label '" + l + "'");
    }
    if (oracle.nodes < 32)
        throw Error(ErrorKind::Validation, "oracle.nodes must be at least 32");
    if (oracle.w < 0 || !(oracle.w_factor > 0) || !(oracle.fd_step > 0))
        throw Error(ErrorKind::Validation, "oracle widths and steps must be positive");
    for (double s : sigmas)
        if (!(s > 0) || !std::isfinite(s))
            throw Error(ErrorKind::Validation, "sigmas must be positive");
}

SelfForceMode RunConfig::self_force_mode() const
{
    return mode == "asymptotic" ? SelfForceMode::Asymptotic : SelfForceMode::Exact;
}

IntegratorOptions RunConfig::integrator_options() const
{
    IntegratorOptions o;
    o.roots.root_tol_scale = root_tol_scale;
    o.roots.jac_tol_scale = jacobian_tol_scale;
    o.roots.max_iter = max_iter;
    o.tol.constraint_tol = constraint_tol;
    o.tol.hard_tol = hard_tol;
    o.parallel = parallel;
    o.renormalize_velocity = renormalize_velocity;
    return o;
}

ExternalField RunConfig::external_field() const
{
    if (external.type == "uniform")
        return ExternalField::uniform(external.E, external.B);
    if (external.type == "pulse") {
        const double on = external.t_on, off = external.t_off, ramp = external.ramp;
        return profiled_uniform(
            external.E, external.B, [=](double t) { return smooth_pulse(t, on, off, ramp); }, c);
    }
    return ExternalField::none();
}

std::vector<ParticleInit> RunConfig::particle_inits() const
{
    namespace fs = std::filesystem;
    if (particles.empty())
        throw Error(ErrorKind::Validation, "at least one particle is required");
    std::vector<ParticleInit> out;
    for (std::size_t i = 0; i < particles.size(); ++i) {
        const ParticleConfig& p = particles[i];
        ParticleInit init;
        init.spec = {p.m0, p.q, p.sigma, p.label.empty() ? "particle" + std::to_string(i) : p.label};
        init.x0 = p.position;
        init.v0 = p.velocity;
        if (!p.prehistory.empty()) {
            fs::path path(p.prehistory);
            if (path.is_relative() && !base_dir.empty())
                path = fs::path(base_dir) / path;
            std::ifstream f(path);
            if (!f)
                throw Error(ErrorKind::MissingArtifact, "cannot read prehistory " + path.string());
            init.prehistory = read_csv(f);
        }
        out.push_back(std::move(init));
    }
    return out;
}

RunConfig parse_config(const std::string& text, const std::string& base_dir)
{
    json j;
    try {
        j = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Validation, std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(j,
                   {"c", "mode", "dt", "t0", "t_end", "tolerances", "output_dir", "seed", "parallel",
                    "renormalize_velocity", "external", "particles", "oracle", "sigmas"},
                   "config");
    RunConfig cfg;
    cfg.base_dir = base_dir;
    read(j, "c", cfg.c, "config");
    read(j, "mode", cfg.mode, "config");
    read(j, "dt", cfg.dt, "config");
    read(j, "t0", cfg.t0, "config");
    read(j, "t_end", cfg.t_end, "config");
    read(j, "output_dir", cfg.output_dir, "config");
    read(j, "seed", cfg.seed, "config");
    read(j, "parallel", cfg.parallel, "config");
    read(j, "renormalize_velocity", cfg.renormalize_velocity, "config");
    read(j, "sigmas", cfg.sigmas, "config");
    if (j.contains("tolerances")) {
        const json& t = j.at("tolerances");
        reject_unknown(t, {"constraint_tol", "hard_tol", "root_tol_scale", "jacobian_tol_scale", "max_iter"},
                       "tolerances");
        read(t, "constraint_tol", cfg.constraint_tol, "tolerances");
        read(t, "hard_tol", cfg.hard_tol, "tolerances");
        read(t, "root_tol_scale", cfg.root_tol_scale, "tolerances");
        read(t, "jacobian_tol_scale", cfg.jacobian_tol_scale, "tolerances");
        read(t, "max_iter", cfg.max_iter, "tolerances");
    }
    if (j.contains("external")) {
        const json& e = j.at("external");
        reject_unknown(e, {"type", "E", "B", "t_on", "t_off", "ramp"}, "external");
        read(e, "type", cfg.external.type, "external");
        read_vec(e, "E", cfg.external.E, "external");
        read_vec(e, "B", cfg.external.B, "external");
        read(e, "t_on", cfg.external.t_on, "external");
        read(e, "t_off", cfg.external.t_off, "external");
        read(e, "ramp", cfg.external.ramp, "external");
    }
    if (j.contains("oracle")) {
        const json& o = j.at("oracle");
        reject_unknown(o, {"w", "w_factor", "nodes", "fd_step", "t_begin", "t_end"}, "oracle");
        read(o, "w", cfg.oracle.w, "oracle");
        read(o, "w_factor", cfg.oracle.w_factor, "oracle");
        read(o, "nodes", cfg.oracle.nodes, "oracle");
        read(o, "fd_step", cfg.oracle.fd_step, "oracle");
        read(o, "t_begin", cfg.oracle.t_begin, "oracle");
        read(o, "t_end", cfg.oracle.t_end, "oracle");
    }
    if (j.contains("particles")) {
        const json& ps = j.at("particles");
        if (!ps.is_array())
            throw Error(ErrorKind::Validation, "particles must be an array");
        for (const json& p : ps) {
            reject_unknown(p, {"label", "m0", "q", "sigma", "position", "velocity", "prehistory"}, "particle");
            ParticleConfig pc;
            read(p, "label", pc.label, "particle");
            read(p, "m0", pc.m0, "particle");
            read(p, "q", pc.q, "particle");
            read(p, "sigma", pc.sigma, "particle");
            read_vec(p, "position", pc.position, "particle");
            read_vec(p, "velocity", pc.velocity, "particle");
            read(p, "prehistory", pc.prehistory, "particle");
            cfg.particles.push_back(pc);
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw Error(ErrorKind::MissingArtifact, "cannot read config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

std::string serialize_config(const RunConfig& cfg)
{
    json j;
    j["c"] = cfg.c;
    j["mode"] = cfg.mode;
    j["dt"] = cfg.dt;
    j["t0"] = cfg.t0;
    j["t_end"] = cfg.t_end;
    j["tolerances"] = {{"constraint_tol", cfg.constraint_tol},
                       {"hard_tol", cfg.hard_tol},
                       {"root_tol_scale", cfg.root_tol_scale},
                       {"jacobian_tol_scale", cfg.jacobian_tol_scale},
                       {"max_iter", cfg.max_iter}};
    j["output_dir"] = cfg.output_dir;
    j["seed"] = cfg.seed;
    j["parallel"] = cfg.parallel;
    j["renormalize_velocity"] = cfg.renormalize_velocity;
    json e = {{"type", cfg.external.type}, {"E", vec(cfg.external.E)}, {"B", vec(cfg.external.B)}};
    if (cfg.external.type == "pulse") {
        e["t_on"] = cfg.external.t_on;
        e["t_off"] = cfg.external.t_off;
        e["ramp"] = cfg.external.ramp;
    }
    j["external"] = e;
    json ps = json::array();
    for (const auto& p : cfg.particles) {
        json pj = {{"label", p.label},          {"m0", p.m0}, {"q", p.q}, {"sigma", p.sigma},
                   {"position", vec(p.position)}, {"velocity", vec(p.velocity)}};
        if (!p.prehistory.empty())
            pj["prehistory"] = p.prehistory;
        ps.push_back(pj);
    }
    j["particles"] = ps;
    j["oracle"] = {{"w", cfg.oracle.w},           {"w_factor", cfg.oracle.w_factor}, {"nodes", cfg.oracle.nodes},
                   {"fd_step", cfg.oracle.fd_step}, {"t_begin", cfg.oracle.t_begin},   {"t_end", cfg.oracle.t_end}};
    j["sigmas"] = cfg.sigmas;
    return j.dump(2);
}

std::string config_hash(const RunConfig& cfg)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : serialize_config(cfg)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace rnb
