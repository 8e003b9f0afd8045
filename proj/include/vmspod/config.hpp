#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "vmspod/dns.hpp"
#include "vmspod/errors.hpp"
#include "vmspod/problems.hpp"

namespace vmspod {

/// One run of the pipeline, as read from a JSON config document. Defaults
/// give a small but meaningful Taylor-Green run.
struct RunConfig {
    std::string problem = "taylor_green";  // taylor_green | forced_vortex | lid_cavity | swirl
    int nx = 8, ny = 8;
    Rect bounds{0.0, 0.0, 1.0, 1.0};
    double nu = 0.01;
    double dt = 0.05;
    double T = 1.0;
    std::string scheme = "bdf2";  // backward-euler | bdf2
    int r = 6;
    int R = 2;
    double nu_t = 0.0;
    int snapshot_stride = 1;
    int warmup_skip = 0;
    double amp = 1.0;   // problem-specific amplitude
    double freq = 1.0;  // problem-specific frequency
    std::string out_dir = ".";
    unsigned seed = 0;
    bool center = false;

    void validate() const {
        if (nu <= 0.0) throw ValidationError("config: nu must be positive");
        if (dt <= 0.0) throw ValidationError("config: dt must be positive");
        if (T < dt) throw ValidationError("config: T must cover at least one step");
        if (r < 1) throw ValidationError("config: r must be at least 1");
        if (R < 0 || R > r) throw ValidationError("config: R must lie in [0, r]");
        if (nu_t < 0.0) throw ValidationError("config: nu_T must be non-negative");
        if (nx < 2 || ny < 2) throw ValidationError("config: mesh must be at least 2x2");
        if (snapshot_stride < 1) throw ValidationError("config: snapshot stride must be >= 1");
        if (warmup_skip < 0) throw ValidationError("config: warmup_skip must be >= 0");
        if (scheme != "backward-euler" && scheme != "bdf2")
            throw ValidationError("config: scheme must be backward-euler or bdf2");
        if (problem != "taylor_green" && problem != "forced_vortex" &&
            problem != "lid_cavity" && problem != "swirl")
            throw ValidationError("config: unknown problem '" + problem + "'");
    }

    TimeScheme time_scheme() const {
        return scheme == "bdf2" ? TimeScheme::Bdf2 : TimeScheme::BackwardEuler;
    }

    NSEProblem make_problem() const {
        if (problem == "taylor_green") return problems::taylor_green(nu, T, dt);
        if (problem == "forced_vortex")
            return problems::ForcedVortex{nu, amp, freq}.problem(T, dt);
        if (problem == "lid_cavity") return problems::lid_cavity(nu, T, dt, amp);
        return problems::swirl(nu, T, dt, amp, freq);
    }

    /// Canonical key=value serialization; the hash is FNV-1a over this text.
    std::string canonical() const {
        std::ostringstream os;
        os.precision(17);
        os << "problem=" << problem << ";nx=" << nx << ";ny=" << ny << ";x0=" << bounds.x0
           << ";y0=" << bounds.y0 << ";x1=" << bounds.x1 << ";y1=" << bounds.y1
           << ";nu=" << nu << ";dt=" << dt << ";T=" << T << ";scheme=" << scheme
           << ";r=" << r << ";R=" << R << ";nu_t=" << nu_t
           << ";stride=" << snapshot_stride << ";warmup=" << warmup_skip << ";amp=" << amp
           << ";freq=" << freq << ";seed=" << seed << ";center=" << center;
        return os.str();
    }

    std::uint64_t hash() const {
        const std::string s = canonical();
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        return h;
    }
};

inline RunConfig parse_config(const nlohmann::json& j) {
    RunConfig cfg;
    try {
        if (j.contains("problem")) cfg.problem = j.at("problem").get<std::string>();
        if (j.contains("nx")) cfg.nx = j.at("nx").get<int>();
        if (j.contains("ny")) cfg.ny = j.at("ny").get<int>();
        if (j.contains("bounds")) {
            const auto& b = j.at("bounds");
            cfg.bounds = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                          b.at(3).get<double>()};
        }
        if (j.contains("nu")) cfg.nu = j.at("nu").get<double>();
        if (j.contains("dt")) cfg.dt = j.at("dt").get<double>();
        if (j.contains("T")) cfg.T = j.at("T").get<double>();
        if (j.contains("scheme")) cfg.scheme = j.at("scheme").get<std::string>();
        if (j.contains("r")) cfg.r = j.at("r").get<int>();
        if (j.contains("R")) cfg.R = j.at("R").get<int>();
        if (j.contains("nu_t")) cfg.nu_t = j.at("nu_t").get<double>();
        if (j.contains("snapshot_stride"))
            cfg.snapshot_stride = j.at("snapshot_stride").get<int>();
        if (j.contains("warmup_skip")) cfg.warmup_skip = j.at("warmup_skip").get<int>();
        if (j.contains("amp")) cfg.amp = j.at("amp").get<double>();
        if (j.contains("freq")) cfg.freq = j.at("freq").get<double>();
        if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<unsigned>();
        if (j.contains("center")) cfg.center = j.at("center").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: malformed field: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("config: cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: invalid JSON in ") + path + ": " + e.what());
    }
    return parse_config(j);
}

}  // namespace vmspod
