// Command-line pipeline: DNS snapshot generation, POD basis construction,
// reduced-order evolution with post-processing stabilization, parameter
// studies, and stability audits.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "vmspod/diagnostics.hpp"

namespace fs = std::filesystem;
using namespace vmspod;

namespace {

struct Overrides {
    std::string config_path;
    std::optional<int> r;
    std::optional<int> R;
    std::optional<double> nu_t;
    std::optional<double> dt;
    std::string scheme;
    std::string out;
};

void add_common(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--config", ov.config_path, "path to the JSON run configuration")
        ->required();
    cmd->add_option("--r", ov.r, "override: number of POD modes");
    cmd->add_option("--R", ov.R, "override: large-scale cutoff");
    cmd->add_option("--nu-t", ov.nu_t, "override: eddy viscosity");
    cmd->add_option("--dt", ov.dt, "override: time step");
    cmd->add_option("--scheme", ov.scheme, "override: backward-euler or bdf2");
    cmd->add_option("--out", ov.out, "override: output directory");
}

RunConfig resolve(const Overrides& ov) {
    RunConfig cfg = load_config(ov.config_path);
    if (ov.r) cfg.r = *ov.r;
    if (ov.R) cfg.R = *ov.R;
    if (ov.nu_t) cfg.nu_t = *ov.nu_t;
    if (ov.dt) cfg.dt = *ov.dt;
    if (!ov.scheme.empty()) cfg.scheme = ov.scheme;
    if (!ov.out.empty()) cfg.out_dir = ov.out;
    cfg.validate();
    return cfg;
}

std::map<std::string, std::string> base_meta(const RunConfig& cfg) {
    return {{"config_hash", std::to_string(cfg.hash())},
            {"problem", cfg.problem},
            {"scheme", cfg.scheme}};
}

std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.out_dir);
    const fs::path p = fs::path(cfg.out_dir) / name;
    std::ofstream os(p);
    if (!os) throw ValidationError("cannot open output file " + p.string());
    return os;
}

void warn_bdf2_nu_t(const RunConfig& cfg) {
    if (cfg.time_scheme() == TimeScheme::Bdf2 && cfg.nu_t >= 4.0 * cfg.nu)
        std::cerr << "warning: BDF2 with nu_T >= 4 nu lies outside the proven stability "
                     "range (stability is guaranteed only for nu_T < 4 nu)\n";
}

int cmd_dns(const Overrides& ov) {
    const RunConfig cfg = resolve(ov);
    const Mesh mesh = build_rect_mesh(cfg.nx, cfg.ny, cfg.bounds);
    const TaylorHoodSpace space(mesh);
    const SparseMat M = assemble_mass(space);
    const auto res = solve_nse(cfg.make_problem(), space, cfg.time_scheme(),
                               cfg.snapshot_stride, cfg.warmup_skip);
    fs::create_directories(cfg.out_dir);
    const fs::path snap_path = fs::path(cfg.out_dir) / "snapshots.vps";
    write_snapshots(res.snapshots, snap_path.string());
    auto meta = base_meta(cfg);
    meta["fingerprint"] = std::to_string(space.fingerprint());
    auto os = open_out(cfg, "dns_trajectory.csv");
    write_dns_trajectory_csv(res, M, os, meta);
    std::cout << "dns: " << res.snapshots.count() << " snapshots -> " << snap_path.string()
              << "\n";
    return 0;
}

int cmd_pod(const Overrides& ov, const std::string& snapshots_path) {
    const RunConfig cfg = resolve(ov);
    const Mesh mesh = build_rect_mesh(cfg.nx, cfg.ny, cfg.bounds);
    const TaylorHoodSpace space(mesh);
    const SparseMat M = assemble_mass(space);
    const SparseMat A = assemble_stiffness(space);
    const std::string path = snapshots_path.empty()
                                 ? (fs::path(cfg.out_dir) / "snapshots.vps").string()
                                 : snapshots_path;
    SnapshotSet snaps = read_snapshots(path, space.fingerprint());
    if (cfg.center) snaps = center_snapshots(snaps);
    const Mat K = build_correlation(snaps, M);
    const auto basis = compute_pod_basis(K, snaps, M, A, cfg.r);

    const fs::path basis_path = fs::path(cfg.out_dir) / "basis.vpb";
    fs::create_directories(cfg.out_dir);
    write_basis(basis, basis_path.string());

    auto meta = base_meta(cfg);
    meta["fingerprint"] = std::to_string(space.fingerprint());
    meta["snapshots"] = path;
    auto os = open_out(cfg, "eigenvalues.csv");
    write_metadata(os, meta);
    os << "index,lambda,h1_norm\n";
    for (int j = 0; j < basis.d_retained; ++j)
        os << (j + 1) << "," << fmt17(basis.eigenvalues[j]) << "," << fmt17(basis.h1_norms[j])
           << "\n";
    std::cout << "pod: rank " << basis.d_retained << ", kept r=" << basis.r() << " -> "
              << basis_path.string() << "\n";
    return 0;
}

/// Shared by `rom` and `audit`: evolve the reduced model per config.
struct RomRun {
    RunConfig cfg;
    std::unique_ptr<Pipeline> pipe;  // used when no basis file is given
    ROMTrajectory traj;
    FluctuationMatrix fluct;
    ReducedSystem sys;
};

RomRun evolve_rom(const Overrides& ov, const std::string& basis_path) {
    RomRun run;
    run.cfg = resolve(ov);
    warn_bdf2_nu_t(run.cfg);
    run.pipe = std::make_unique<Pipeline>(run.cfg);
    if (!basis_path.empty()) {
        // external basis replaces the pipeline's own (fingerprint-checked)
        run.pipe->basis = read_basis(basis_path, run.pipe->space.fingerprint());
        run.pipe->sys = build_reduced_system(run.pipe->basis, run.pipe->space, run.pipe->A,
                                             run.pipe->prob);
    }
    if (run.cfg.R > run.pipe->basis.r())
        throw ValidationError("R exceeds the number of available modes");
    run.sys = run.pipe->sys;
    run.fluct = build_fluctuation_matrix(run.sys.S, std::min(run.cfg.R, run.sys.r));
    const int steps = static_cast<int>(std::llround(run.cfg.T / run.cfg.dt));
    run.traj = diag_detail::run_vms_matched(*run.pipe, run.cfg.dt, steps, run.cfg.nu_t,
                                            run.fluct);
    return run;
}

int cmd_rom(const Overrides& ov, const std::string& basis_path) {
    RomRun run = evolve_rom(ov, basis_path);
    auto meta = base_meta(run.cfg);
    meta["fingerprint"] = std::to_string(run.pipe->space.fingerprint());
    meta["r"] = std::to_string(run.sys.r);
    meta["R"] = std::to_string(run.cfg.R);
    meta["nu_t"] = fmt17(run.cfg.nu_t);
    auto os = open_out(run.cfg, "rom_trajectory.csv");
    write_rom_trajectory_csv(run.traj, os, meta);
    std::cout << "rom: " << run.traj.steps() << " steps -> "
              << (fs::path(run.cfg.out_dir) / "rom_trajectory.csv").string() << "\n";
    return 0;
}

int cmd_study(const Overrides& ov, const std::string& kind) {
    const RunConfig cfg = resolve(ov);
    warn_bdf2_nu_t(cfg);
    Pipeline pipe(cfg);
    std::vector<RateRow> rows;
    if (kind == "dt") {
        rows = study_varying_dt(pipe, {8 * cfg.dt, 4 * cfg.dt, 2 * cfg.dt, cfg.dt});
    } else if (kind == "R") {
        std::vector<int> cutoffs;
        for (int R = 0; R <= pipe.sys.r; ++R) cutoffs.push_back(R);
        rows = study_varying_R(pipe, cutoffs);
    } else {
        throw ValidationError("study kind must be dt or R");
    }
    auto meta = base_meta(cfg);
    meta["kind"] = kind;
    meta["fingerprint"] = std::to_string(pipe.space.fingerprint());
    auto os = open_out(cfg, "study_" + kind + ".csv");
    write_rate_table_csv(rows, os, meta);
    std::cout << "study " << kind << ": " << rows.size() << " rows -> "
              << (fs::path(cfg.out_dir) / ("study_" + kind + ".csv")).string() << "\n";
    return 0;
}

int cmd_audit(const Overrides& ov, const std::string& basis_path) {
    RomRun run = evolve_rom(ov, basis_path);
    const auto audit = stability_audit(run.traj, run.sys, run.cfg.time_scheme(), run.cfg.dt,
                                       run.cfg.nu_t, run.fluct);
    auto os = open_out(run.cfg, "audit.txt");
    os << "config_hash=" << run.cfg.hash() << "\n"
       << "scheme=" << run.cfg.scheme << "\n"
       << "lhs=" << fmt17(audit.lhs) << "\n"
       << "rhs=" << fmt17(audit.rhs) << "\n"
       << "pass=" << (audit.pass ? "PASS" : "FAIL") << "\n"
       << "asserted=" << (audit.asserted ? "yes" : "no (forced run, reported only)") << "\n";
    if (run.cfg.time_scheme() == TimeScheme::Bdf2)
        os << "coefficient_4nu_minus_nut_positive=" << (audit.coefficient_ok ? "yes" : "no")
           << "\n";
    else
        os << "intermediate_state_lhs=" << fmt17(audit.corollary_lhs) << "\n"
           << "intermediate_state_rhs=" << fmt17(audit.corollary_rhs) << "\n";
    std::cout << "audit: " << (audit.pass ? "PASS" : "FAIL") << " (lhs=" << audit.lhs
              << ", rhs=" << audit.rhs << ")\n";
    if (!audit.pass && audit.asserted)
        throw SolverError("stability audit failed on an unforced run");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"POD reduced-order models of incompressible flow with projection-based "
                 "post-processing stabilization"};
    app.require_subcommand(1);

    Overrides ov;
    std::string snapshots_path, basis_path, study_kind = "dt";

    auto* dns = app.add_subcommand("dns", "full-order solve; writes snapshots + trajectory");
    add_common(dns, ov);
    auto* pod = app.add_subcommand("pod", "POD basis from snapshots; writes basis + spectrum");
    add_common(pod, ov);
    pod->add_option("--snapshots", snapshots_path, "snapshot file (default <out>/snapshots.vps)");
    auto* rom = app.add_subcommand("rom", "reduced-order evolution; writes trajectory + ledger");
    add_common(rom, ov);
    rom->add_option("--basis", basis_path, "basis file (default: rebuilt from the config)");
    auto* study = app.add_subcommand("study", "rate table for a dt or R sweep");
    add_common(study, ov);
    study->add_option("--kind", study_kind, "dt or R")->required();
    auto* audit = app.add_subcommand("audit", "energy-inequality audit of a configured run");
    add_common(audit, ov);
    audit->add_option("--basis", basis_path, "basis file (default: rebuilt from the config)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (dns->parsed()) return cmd_dns(ov);
        if (pod->parsed()) return cmd_pod(ov, snapshots_path);
        if (rom->parsed()) return cmd_rom(ov, basis_path);
        if (study->parsed()) return cmd_study(ov, study_kind);
        if (audit->parsed()) return cmd_audit(ov, basis_path);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const CompatibilityError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const SolverError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
