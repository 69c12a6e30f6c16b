#include "rnb/action_oracle.hpp"
#include "rnb/artifacts.hpp"
#include "rnb/config.hpp"
#include "rnb/scenarios.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <random>

using namespace rnb;
namespace fs = std::filesystem;

namespace {

enum Exit { Ok = 0, AssertionFailed = 1, ValidationFailed = 2, NumericalFailure = 3, MissingArtifactExit = 4 };

struct Checks {
    Table table{{"check", "value", "threshold", "pass"}, {}};
    bool ok = true;

    void below(const std::string& name, double v, double limit)
    {
        const bool pass = v < limit;
        table.add({name, num(v), "<" + num(limit), pass ? "1" : "0"});
        ok = ok && pass;
        std::cout << (pass ? "[PASS] " : "[FAIL] ") << name << " = " << v << " (< " << limit << ")\n";
    }
    void above(const std::string& name, double v, double limit)
    {
        const bool pass = v > limit;
        table.add({name, num(v), ">" + num(limit), pass ? "1" : "0"});
        ok = ok && pass;
        std::cout << (pass ? "[PASS] " : "[FAIL] ") << name << " = " << v << " (> " << limit << ")\n";
    }
};

std::string header(const RunConfig& cfg) { return "config_hash=" + config_hash(cfg); }

std::string out_dir(const RunConfig& cfg, const std::string& override_dir, const std::string& sub)
{
    fs::path p = override_dir.empty() ? fs::path(cfg.output_dir) : fs::path(override_dir);
    if (p.is_relative() && override_dir.empty() && !cfg.base_dir.empty())
        p = fs::path(cfg.base_dir) / p;
    if (!sub.empty())
        p /= sub;
    return p.string();
}

int cmd_run(const RunConfig& cfg, const std::string& dir)
{
    SystemState st = seed(cfg.particle_inits(), cfg.t0, cfg.c, cfg.external_field(), cfg.self_force_mode(), cfg.dt,
                          cfg.integrator_options());
    const Diagnostics d = run(st, cfg.t_end, {dir, header(cfg)});
    std::cout << "steps " << st.steps_taken << ", t = " << st.t_now << ", max |u.u-1| = " << d.max_constraint()
              << "\nwrote " << dir << "\n";
    return Ok;
}

int cmd_check_pb(const RunConfig& cfg, const std::string& dir)
{
    Checks ck;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    auto random_state = [&](int n) {
        CanonicalState x(8 * n);
        for (int k = 0; k < 8 * n; ++k)
            x(k) = U(rng);
        return x;
    };

    double fund = 0.0;
    const CanonicalState x0 = random_state(2);
    for (int a = 0; a < 16; ++a)
        for (int b = 0; b < 16; ++b) {
            const double v = poisson_bracket(PhaseFunction::coordinate(a, 16), PhaseFunction::coordinate(b, 16), x0);
            double expect = 0.0;
            if (a % 8 < 4 && b == a + 4)
                expect = 1.0;
            if (b % 8 < 4 && a == b + 4)
                expect = -1.0;
            fund = std::max(fund, std::abs(v - expect));
        }
    ck.below("fundamental_brackets", fund, 1e-14);

    const GeneratorSet g = unconstrained_generators(2);
    double lorentz = 0.0;
    for (int k = 0; k < 100; ++k)
        lorentz = std::max(lorentz, lorentz_conditions(g, random_state(2)).max());
    ck.below("lorentz_conditions", lorentz, 1e-11);

    std::vector<PhaseTriple> triples;
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = mu + 1; nu < 4; ++nu)
            triples.push_back({g.M[mu][nu], g.p[mu], g.M[(mu + 1) % 4][(nu + 1) % 4]});
    const BracketAlgebraReport alg = check_bracket_algebra(random_state(2), triples);
    ck.below("antisymmetry", alg.antisymmetry, 1e-10);
    ck.below("jacobi_generators", alg.jacobi, 1e-10);

    fs::create_directories(dir);
    write_table((fs::path(dir) / "pb_residuals.csv").string(), ck.table, header(cfg));
    return ck.ok ? Ok : AssertionFailed;
}

int cmd_demo_no_interaction(const RunConfig& cfg, const std::string& dir)
{
    Checks ck;
    GloballyIsolatedConfig gc;
    gc.particles = cfg.particle_inits();
    gc.c = cfg.c;
    gc.t0 = cfg.t0;
    gc.t_end = cfg.t_end;
    gc.dt = cfg.dt;
    gc.mode = cfg.self_force_mode();
    const GloballyIsolatedReport g = demo_globally_isolated(gc);
    ck.above("bracket_certificate", g.bracket_certificate, 1e-8);
    ck.below("increment_mismatch", g.increment_mismatch, 1e-6);
    std::cout << "total momentum drift " << g.momentum_drift.transpose() << " (reported only)\n";

    for (auto& p : gc.particles)
        p.spec.q = 0.0;
    const GloballyIsolatedReport control = demo_globally_isolated(gc);
    ck.below("bracket_control_q0", control.bracket_certificate, 1e-12);

    LocallyIsolatedConfig lc;
    const ParticleSpec first = cfg.particle_inits().front().spec;
    if (first.q != 0.0)
        lc.spec = first;
    lc.c = cfg.c;
    lc.dt = cfg.dt;
    const LocallyIsolatedReport l = demo_locally_isolated(lc);
    ck.above("post_switch_self_force", l.max_self_force_post, 1e-12);
    ck.below("self_force_q2_scaling_error", std::abs(l.self_force_q_ratio - 4.0), 1e-9);

    Table t = ck.table;
    t.add({"momentum_drift_x", num(g.momentum_drift(0)), "reported", "1"});
    t.add({"momentum_drift_y", num(g.momentum_drift(1)), "reported", "1"});
    t.add({"momentum_drift_z", num(g.momentum_drift(2)), "reported", "1"});
    t.add({"H_eff_max_jump", num(l.H_eff_max_jump), "reported", "1"});
    fs::create_directories(dir);
    write_table((fs::path(dir) / "no_interaction.csv").string(), t, header(cfg));
    return ck.ok ? Ok : AssertionFailed;
}

int cmd_compare_asymptotic(const RunConfig& cfg, const std::string& dir)
{
    const std::vector<double> sigmas = cfg.sigmas.empty() ? std::vector<double>{0.4, 0.2, 0.1} : cfg.sigmas;
    GapStudyConfig gs;
    gs.c = cfg.c;
    gs.sigmas = sigmas;
    const std::vector<GapRow> rows = self_force_gap_study(gs);

    Table t{{"sigma", "max_force_gap", "fitted_mass", "em_mass", "trajectory_divergence"}, {}};
    for (std::size_t k = 0; k < sigmas.size(); ++k) {
        std::vector<ParticleInit> inits = cfg.particle_inits();
        for (auto& p : inits)
            p.spec.sigma = sigmas[k];
        SystemState ex = seed(inits, cfg.t0, cfg.c, cfg.external_field(), SelfForceMode::Exact, cfg.dt,
                              cfg.integrator_options());
        SystemState as = seed(inits, cfg.t0, cfg.c, cfg.external_field(), SelfForceMode::Asymptotic, cfg.dt,
                              cfg.integrator_options());
        run(ex, cfg.t_end);
        run(as, cfg.t_end);
        double div = 0.0;
        for (std::size_t i = 0; i < ex.size(); ++i)
            div = std::max(div, max_abs_position_difference(ex.histories[i], as.histories[i]));
        t.add({num(sigmas[k]), num(rows[k].max_gap), num(rows[k].fitted_mass), num(rows[k].em_mass), num(div)});
        std::cout << "sigma " << sigmas[k] << ": force gap " << rows[k].max_gap << ", divergence " << div << "\n";
    }
    Checks ck;
    double worst = 0.0;
    for (std::size_t k = 1; k < rows.size(); ++k)
        worst = std::max(worst, rows[k].max_gap / rows[k - 1].max_gap);
    ck.below("gap_shrinks_with_sigma", worst, 1.0);
    fs::create_directories(dir);
    write_table((fs::path(dir) / "gap_vs_sigma.csv").string(), t, header(cfg));
    return ck.ok ? Ok : AssertionFailed;
}

int cmd_action_oracle(const RunConfig& cfg, const std::string& dir)
{
    SystemState st = seed(cfg.particle_inits(), cfg.t0, cfg.c, cfg.external_field(), cfg.self_force_mode(), cfg.dt,
                          cfg.integrator_options());
    run(st, cfg.t_end);
    const double t_begin = cfg.oracle.t_begin > cfg.t0 ? cfg.oracle.t_begin : cfg.t0 + 0.25 * (cfg.t_end - cfg.t0);
    const double t_end = cfg.oracle.t_end > 0.0 ? cfg.oracle.t_end : cfg.t_end - 0.25 * (cfg.t_end - cfg.t0);
    std::vector<DiscreteWorldline> wl;
    const double lookback = std::max(1.0, 2.0 * st.required_coverage);
    for (const auto& h : st.histories)
        wl.push_back(discretize(h, t_begin, t_end, cfg.oracle.nodes, lookback));
    OracleConfig oc;
    oc.nodes = cfg.oracle.nodes;
    oc.fd_step = cfg.oracle.fd_step;
    oc.w = cfg.oracle.w > 0.0 ? cfg.oracle.w : calibrated_width(wl, cfg.oracle.w_factor);
    const OracleReport rep = action_oracle(wl, st.histories, cfg.external_field(), oc);
    const double perturbed_norm = action_gradient_norm(perturbed(wl, 0.01, cfg.seed), cfg.external_field(), oc);

    Table t{{"particle", "node", "grad0", "grad1", "grad2", "grad3", "force0", "force1", "force2", "force3"}, {}};
    for (const auto& n : rep.nodes)
        t.add({std::to_string(n.particle), std::to_string(n.node), num(n.interaction_gradient(0)),
               num(n.interaction_gradient(1)), num(n.interaction_gradient(2)), num(n.interaction_gradient(3)),
               num(n.force(0)), num(n.force(1)), num(n.force(2)), num(n.force(3))});
    fs::create_directories(dir);
    write_table((fs::path(dir) / "oracle_residuals.csv").string(), t, header(cfg));

    Checks ck;
    std::cout << "w = " << rep.w << ", h = " << rep.h << "\n";
    ck.below("force_vs_gradient_relative", rep.force_relative, 0.03);
    ck.below("extremality_ratio", rep.gradient_norm / perturbed_norm, 0.1);
    write_table((fs::path(dir) / "oracle_summary.csv").string(), ck.table, header(cfg));
    return ck.ok ? Ok : AssertionFailed;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Retarded N-body dynamics of finite-size charges"};
    app.require_subcommand(1);
    std::string config_path, output_override, run_dir, plots_dir;
    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* o = sub->add_option("-c,--config", config_path, "Run configuration (JSON)");
        if (config_required)
            o->required()->check(CLI::ExistingFile);
        sub->add_option("-o,--output-dir", output_override, "Override the configured output directory");
    };
    auto* run_cmd = app.add_subcommand("run", "Integrate the configured system");
    add_common(run_cmd, true);
    auto* pb_cmd = app.add_subcommand("check-pb", "Poisson-bracket certificates");
    add_common(pb_cmd, false);
    auto* demo_cmd = app.add_subcommand("demo-no-interaction", "Isolated-system demos and bracket certificate");
    add_common(demo_cmd, true);
    auto* cmp_cmd = app.add_subcommand("compare-asymptotic", "Exact vs asymptotic self-force sweep over sigma");
    add_common(cmp_cmd, true);
    auto* orc_cmd = app.add_subcommand("action-oracle", "Discretized-action gradient vs implemented forces");
    add_common(orc_cmd, true);
    auto* plot_cmd = app.add_subcommand("emit-plots", "Plot-ready CSVs from a run directory");
    plot_cmd->add_option("--run-dir", run_dir, "Directory with run artifacts")->required();
    plot_cmd->add_option("--out-dir", plots_dir, "Destination (default: <run-dir>/plots)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Ok : ValidationFailed;
    }

    try {
        if (plot_cmd->parsed()) {
            const auto files = emit_plots_data(run_dir, plots_dir.empty() ? run_dir + "/plots" : plots_dir);
            for (const auto& f : files)
                std::cout << "wrote " << f << "\n";
            return Ok;
        }
        RunConfig cfg;
        if (!config_path.empty())
            cfg = load_config(config_path);
        if (run_cmd->parsed())
            return cmd_run(cfg, out_dir(cfg, output_override, ""));
        if (pb_cmd->parsed())
            return cmd_check_pb(cfg, out_dir(cfg, output_override, ""));
        if (demo_cmd->parsed())
            return cmd_demo_no_interaction(cfg, out_dir(cfg, output_override, ""));
        if (cmp_cmd->parsed())
            return cmd_compare_asymptotic(cfg, out_dir(cfg, output_override, ""));
        if (orc_cmd->parsed())
            return cmd_action_oracle(cfg, out_dir(cfg, output_override, ""));
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.kind()) {
        case ErrorKind::Validation:
        case ErrorKind::InsufficientPrehistory:
        case ErrorKind::ContextMismatch:
            return ValidationFailed;
        case ErrorKind::MissingArtifact:
            return MissingArtifactExit;
        default:
            return NumericalFailure;
        }
    } catch (const std::exception& e) {
        std::cerr << "error[Internal]: " << e.what() << "\n";
        return NumericalFailure;
    }
    return Ok;
}
