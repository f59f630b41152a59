#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "coneflow/commands.hpp"
#include "coneflow/config.hpp"
#include "coneflow/errors.hpp"
#include "coneflow/io.hpp"

using namespace coneflow;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("coneflow_test_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config: defaults, validation, unknown keys") {
    const RunConfig cfg = parse_config(nlohmann::json::object());
    CHECK(cfg.aspect == 0.7);
    CHECK(cfg.wavevectors.size() == 4);
    CHECK(cfg.sim.seed == 12345);
    CHECK(cfg.build_spectrum().N() == 8);

    CHECK_THROWS_AS(parse_config({{"params", {{"delta", 0.1}}}}), ValidationError);
    CHECK_THROWS_AS(parse_config({{"params", {{"kappa", 0.0}}}}), ValidationError);
    CHECK_THROWS_AS(parse_config({{"params", {{"eps", -1.0}}}}), ValidationError);
    CHECK_THROWS_AS(parse_config({{"bogus", 1}}), ValidationError);
    CHECK_THROWS_AS(parse_config({{"sim", {{"stride", 1}}}}), ValidationError);
    CHECK_THROWS_AS(parse_config({{"experiment", {{"ell0", {2}}}}}), ValidationError);

    // scalar damping expands pairwise
    const RunConfig expanded = parse_config({{"params", {{"delta", -0.25}}}});
    CHECK(expanded.delta.size() == 4);
    CHECK(expanded.delta[3] == -0.25);
}

TEST_CASE("config round-trip is the identity on validated documents") {
    nlohmann::json doc = {
        {"params", {{"a", 0.8}, {"delta", {-0.1, -0.2, -0.3, -0.4}}, {"kappa", 0.7}, {"eps", 0.3}}},
        {"sim", {{"h", 0.02}, {"t_end", 123.0}, {"burn_in", 7.0}, {"seed", 777}}},
        {"experiment", {{"eps_grid", {0.5, 0.25, 0.1}}, {"eta", 0.15}}},
        {"output", {{"dir", "artifacts"}, {"threads", 3}}}};
    const RunConfig a = parse_config(doc);
    const nlohmann::json emitted = emit_config(a);
    const RunConfig b = parse_config(emitted);
    CHECK(emit_config(b) == emitted);
    CHECK(a.config_hash() == b.config_hash());
}

TEST_CASE("float formatting survives a text round-trip") {
    for (double v : {3.141592653589793, 1e-300, -2.718281828459045, 1.0 / 3.0}) {
        const std::string s = format_float(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("sha256 known answer") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("empty artifact set still yields a valid manifest") {
    TempDir tmp("empty_manifest");
    ArtifactWriter w(tmp.path.string());
    const nlohmann::json manifest = w.finalize("noop", "deadbeef", 1, 0.0, true);
    CHECK(manifest["artifacts"].is_array());
    CHECK(manifest["artifacts"].empty());
    const auto reread = nlohmann::json::parse(slurp(tmp.path / "manifest.json"));
    CHECK(reread["command"] == "noop");
    CHECK(reread["pass"] == true);
}

TEST_CASE("sweep rejects undersized eps grids at the command layer") {
    TempDir tmp("sweep_reject");
    RunConfig cfg = parse_config(nlohmann::json::object());
    cfg.eps_grid = {0.1};
    CHECK_THROWS_AS(run_inviscid_cmd(cfg, tmp.path.string()), ValidationError);
}

TEST_CASE("spectrum, drift-table and qtable artifacts") {
    TempDir tmp("artifacts");
    const RunConfig cfg = parse_config(nlohmann::json::object());

    const CommandOutcome sp = run_spectrum_cmd(cfg, (tmp.path / "sp").string());
    CHECK(sp.exit_code == 0);
    CHECK(fs::exists(tmp.path / "sp" / "spectrum.json"));
    CHECK(fs::exists(tmp.path / "sp" / "manifest.json"));
    const auto spec_doc = nlohmann::json::parse(slurp(tmp.path / "sp" / "spectrum.json"));
    CHECK(spec_doc["n"] == 4);
    CHECK(spec_doc["mu"][0] == 1.0);

    const CommandOutcome dt = run_drift_table_cmd(cfg, (tmp.path / "dt").string());
    CHECK(dt.exit_code == 0);
    const auto drift_doc = nlohmann::json::parse(slurp(tmp.path / "dt" / "drift_table.json"));
    REQUIRE(drift_doc.contains("entries"));
    for (const auto& e : drift_doc["entries"]) {
        CHECK(e["a"].get<int>() < e["b"].get<int>());
        CHECK(e["b"].get<int>() < e["c"].get<int>());
    }

    const CommandOutcome qt = run_qtable_cmd(cfg, (tmp.path / "qt").string(), 33, 0);
    CHECK(qt.exit_code == 0);
    const std::string csv = slurp(tmp.path / "qt" / "qtable.csv");
    CHECK(csv.rfind("ratio,sector,q_1", 0) == 0);
    // 33 rows + header
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 34);

    // manifest hashes match the artifact bytes
    const auto manifest = nlohmann::json::parse(slurp(tmp.path / "qt" / "manifest.json"));
    for (const auto& art : manifest["artifacts"]) {
        const std::string body = slurp(tmp.path / "qt" / art["name"].get<std::string>());
        CHECK(sha256_hex(body) == art["sha256"].get<std::string>());
    }
}

TEST_CASE("simulate artifacts are byte-identical across reruns") {
    TempDir tmp("determinism");
    RunConfig cfg = parse_config(nlohmann::json::object());
    cfg.sim.t_end = 20.0;
    cfg.sim.burn_in = 2.0;
    cfg.sim.state_stride = 5;

    for (const std::string mode : {"full", "fast", "effective", "reference"}) {
        const auto d1 = (tmp.path / (mode + "_1")).string();
        const auto d2 = (tmp.path / (mode + "_2")).string();
        RunConfig c = cfg;
        if (mode == "effective") {
            c.eff_t_end = 20.0;
            c.eff_burn_in = 2.0;
        }
        CHECK(run_simulate_cmd(c, d1, mode).exit_code == 0);
        CHECK(run_simulate_cmd(c, d2, mode).exit_code == 0);
        CHECK(slurp(fs::path(d1) / "observables.csv") == slurp(fs::path(d2) / "observables.csv"));
    }

    // a different seed changes the full-mode artifact
    RunConfig other = cfg;
    other.sim.seed = 54321;
    const auto d3 = (tmp.path / "full_3").string();
    run_simulate_cmd(other, d3, "full");
    CHECK(slurp(fs::path(d3) / "observables.csv") !=
          slurp(tmp.path / "full_1" / "observables.csv"));
}

TEST_CASE("observable csv carries the documented layout") {
    TempDir tmp("layout");
    RunConfig cfg = parse_config(nlohmann::json::object());
    cfg.sim.t_end = 5.0;
    cfg.sim.burn_in = 1.0;
    cfg.eff_t_end = 5.0;
    cfg.eff_burn_in = 1.0;
    run_simulate_cmd(cfg, tmp.path.string(), "full");
    const std::string csv = slurp(tmp.path / "observables.csv");
    CHECK(csv.rfind("t,U,V,T,ratio,good_flag", 0) == 0);
    CHECK(csv.back() == '\n');

    run_simulate_cmd(cfg, (tmp.path / "eff").string(), "effective");
    const std::string eff = slurp(tmp.path / "eff" / "observables.csv");
    CHECK(eff.rfind("t,U,V,T,ratio,reflected_flag", 0) == 0);
}

TEST_CASE("states blob has a JSON header and the right byte count") {
    TempDir tmp("states");
    RunConfig cfg = parse_config(nlohmann::json::object());
    cfg.sim.t_end = 5.0;
    cfg.sim.burn_in = 1.0;
    cfg.sim.state_stride = 2;
    run_simulate_cmd(cfg, tmp.path.string(), "full");
    const std::string blob = slurp(tmp.path / "states.bin");
    const auto nl = blob.find('\n');
    REQUIRE(nl != std::string::npos);
    const auto header = nlohmann::json::parse(blob.substr(0, nl));
    CHECK(header["n_modes"] == 8);
    const std::size_t count = header["count"].get<std::size_t>();
    CHECK(blob.size() - nl - 1 == count * 9 * sizeof(double));  // t + 8 modes per row
}
