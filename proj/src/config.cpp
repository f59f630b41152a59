#include "coneflow/config.hpp"

#include <fstream>
#include <set>

#include "coneflow/errors.hpp"
#include "coneflow/io.hpp"

namespace coneflow {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ValidationError(where + "." + it.key(), "unknown key");
        }
    }
}

template <typename T>
void get_if(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

Spectrum RunConfig::build_spectrum() const {
    if (!explicit_mu.empty()) return Spectrum::explicit_list(explicit_mu);
    return Spectrum::torus(aspect, wavevectors);
}

ModelParams RunConfig::build_params(const Spectrum& s) const {
    ModelParams p;
    p.a = a;
    p.delta = delta.empty() ? std::vector<double>(s.n(), 0.0) : delta;
    p.kappa = kappa;
    p.eps = eps;
    p.validate(s);
    return p;
}

SimConfig RunConfig::effective_sim_config() const {
    SimConfig c = sim;
    c.h = eff_h;
    c.t_end = eff_t_end;
    c.burn_in = eff_burn_in;
    return c;
}

std::vector<int> RunConfig::ell0_list(const Spectrum& s) const {
    if (!ell0.empty()) return ell0;
    std::vector<int> all;
    for (int l = 3; l <= s.N(); ++l) all.push_back(l);
    return all;
}

std::string RunConfig::config_hash() const { return sha256_hex(emit_config(*this).dump()); }

RunConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ParseError("config document must be a JSON object");
    reject_unknown(doc, {"spectrum", "params", "sim", "experiment", "output"}, "config");
    RunConfig cfg;

    if (doc.contains("spectrum")) {
        const auto& sp = doc.at("spectrum");
        reject_unknown(sp, {"aspect", "wavevectors", "mu"}, "spectrum");
        if (sp.contains("mu")) {
            cfg.explicit_mu = sp.at("mu").get<std::vector<double>>();
        }
        get_if(sp, "aspect", cfg.aspect);
        if (sp.contains("wavevectors")) {
            cfg.wavevectors.clear();
            for (const auto& kv : sp.at("wavevectors")) {
                if (!kv.is_array() || kv.size() != 2) {
                    throw ValidationError("spectrum.wavevectors", "each entry must be [kx, ky]");
                }
                cfg.wavevectors.push_back({kv[0].get<int>(), kv[1].get<int>()});
            }
        }
    }

    if (doc.contains("params")) {
        const auto& pr = doc.at("params");
        reject_unknown(pr, {"a", "delta", "kappa", "eps"}, "params");
        get_if(pr, "a", cfg.a);
        if (pr.contains("delta")) {
            if (pr.at("delta").is_number()) {
                cfg.delta.assign(1, pr.at("delta").get<double>());  // expanded after n is known
            } else {
                cfg.delta = pr.at("delta").get<std::vector<double>>();
            }
        }
        get_if(pr, "kappa", cfg.kappa);
        get_if(pr, "eps", cfg.eps);
    }

    if (doc.contains("sim")) {
        const auto& sm = doc.at("sim");
        reject_unknown(sm,
                       {"h", "fast_substep_factor", "t_end", "burn_in", "seed", "record_stride",
                        "midpoint_tol", "midpoint_max_iter", "state_stride"},
                       "sim");
        get_if(sm, "h", cfg.sim.h);
        get_if(sm, "fast_substep_factor", cfg.sim.fast_substep_factor);
        get_if(sm, "t_end", cfg.sim.t_end);
        get_if(sm, "burn_in", cfg.sim.burn_in);
        get_if(sm, "seed", cfg.sim.seed);
        get_if(sm, "record_stride", cfg.sim.record_stride);
        get_if(sm, "midpoint_tol", cfg.sim.midpoint_tol);
        get_if(sm, "midpoint_max_iter", cfg.sim.midpoint_max_iter);
        get_if(sm, "state_stride", cfg.sim.state_stride);
    }

    if (doc.contains("experiment")) {
        const auto& ex = doc.at("experiment");
        reject_unknown(ex,
                       {"eps_grid", "eta", "u_min", "u_max", "z_scale", "ell0", "q_grid",
                        "ensemble", "t_grid", "equil_u", "equil_v", "kappa_probe", "eff_h",
                        "eff_t_end", "eff_burn_in", "max_points", "sweep_replicates"},
                       "experiment");
        get_if(ex, "eps_grid", cfg.eps_grid);
        get_if(ex, "eta", cfg.eta);
        get_if(ex, "u_min", cfg.u_min);
        get_if(ex, "u_max", cfg.u_max);
        get_if(ex, "z_scale", cfg.z_scale);
        get_if(ex, "ell0", cfg.ell0);
        get_if(ex, "q_grid", cfg.q_grid);
        get_if(ex, "ensemble", cfg.ensemble);
        get_if(ex, "t_grid", cfg.t_grid);
        get_if(ex, "equil_u", cfg.equil_u);
        get_if(ex, "equil_v", cfg.equil_v);
        get_if(ex, "kappa_probe", cfg.kappa_probe);
        get_if(ex, "eff_h", cfg.eff_h);
        get_if(ex, "eff_t_end", cfg.eff_t_end);
        get_if(ex, "eff_burn_in", cfg.eff_burn_in);
        get_if(ex, "max_points", cfg.max_points);
        get_if(ex, "sweep_replicates", cfg.sweep_replicates);
    }

    if (doc.contains("output")) {
        const auto& out = doc.at("output");
        reject_unknown(out, {"dir", "threads"}, "output");
        get_if(out, "dir", cfg.out_dir);
        get_if(out, "threads", cfg.threads);
    }

    // materialize everything once so that every invariant is checked at parse
    // time and error messages carry the offending field
    const Spectrum s = cfg.build_spectrum();
    if (cfg.delta.size() == 1 && s.n() > 1) cfg.delta.assign(s.n(), cfg.delta[0]);
    cfg.build_params(s);
    cfg.sim.eta = cfg.eta;
    cfg.sim.u_min = cfg.u_min;
    cfg.sim.u_max = cfg.u_max;
    cfg.sim.validate();
    if (cfg.q_grid < 2) throw ValidationError("experiment.q_grid", "need at least 2 grid points");
    if (cfg.ensemble < 2) throw ValidationError("experiment.ensemble", "need at least 2 members");
    if (cfg.threads < 1) throw ValidationError("output.threads", "need at least 1 thread");
    for (int l : cfg.ell0) {
        if (l < 3 || l > s.N()) {
            throw ValidationError("experiment.ell0",
                                  "indices must lie in {3..N}, got " + std::to_string(l));
        }
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file " + path);
    json doc;
    try {
        f >> doc;
    } catch (const json::parse_error& e) {
        throw ParseError("config is not valid JSON: " + std::string(e.what()));
    }
    return parse_config(doc);
}

nlohmann::json emit_config(const RunConfig& cfg) {
    json doc;
    json sp;
    if (!cfg.explicit_mu.empty()) {
        sp["mu"] = cfg.explicit_mu;
    } else {
        sp["aspect"] = cfg.aspect;
        json kvs = json::array();
        for (const auto& k : cfg.wavevectors) kvs.push_back({k[0], k[1]});
        sp["wavevectors"] = kvs;
    }
    doc["spectrum"] = sp;
    doc["params"] = {{"a", cfg.a},
                     {"delta", cfg.delta},
                     {"kappa", cfg.kappa},
                     {"eps", cfg.eps}};
    doc["sim"] = {{"h", cfg.sim.h},
                  {"fast_substep_factor", cfg.sim.fast_substep_factor},
                  {"t_end", cfg.sim.t_end},
                  {"burn_in", cfg.sim.burn_in},
                  {"seed", cfg.sim.seed},
                  {"record_stride", cfg.sim.record_stride},
                  {"midpoint_tol", cfg.sim.midpoint_tol},
                  {"midpoint_max_iter", cfg.sim.midpoint_max_iter},
                  {"state_stride", cfg.sim.state_stride}};
    doc["experiment"] = {{"eps_grid", cfg.eps_grid},
                         {"eta", cfg.eta},
                         {"u_min", cfg.u_min},
                         {"u_max", cfg.u_max},
                         {"z_scale", cfg.z_scale},
                         {"ell0", cfg.ell0},
                         {"q_grid", cfg.q_grid},
                         {"ensemble", cfg.ensemble},
                         {"t_grid", cfg.t_grid},
                         {"equil_u", cfg.equil_u},
                         {"equil_v", cfg.equil_v},
                         {"kappa_probe", cfg.kappa_probe},
                         {"eff_h", cfg.eff_h},
                         {"eff_t_end", cfg.eff_t_end},
                         {"eff_burn_in", cfg.eff_burn_in},
                         {"max_points", cfg.max_points},
                         {"sweep_replicates", cfg.sweep_replicates}};
    doc["output"] = {{"dir", cfg.out_dir}, {"threads", cfg.threads}};
    return doc;
}

}  // namespace coneflow
