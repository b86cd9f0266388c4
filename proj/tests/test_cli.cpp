#include "doctest.h"

#include "qcurv/config.hpp"
#include "qcurv/experiments.hpp"
#include "qcurv/snapshot.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace qcurv;
namespace fs = std::filesystem;

namespace {

std::string binary() {
    const char* b = std::getenv("QCURV_BIN");
    return b ? b : "qcurv";
}

struct Run {
    int status = -1;
    std::string output;
};

Run run_cli(const std::string& args) {
    fs::path log = fs::temp_directory_path() / "qcurv_cli_test.log";
    std::string cmd = "'" + binary() + "' " + args + " > '" + log.string() + "' 2>&1";
    int raw = std::system(cmd.c_str());
    Run r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream is(log);
    std::stringstream ss;
    ss << is.rdbuf();
    r.output = ss.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    fs::path d = fs::temp_directory_path() / ("qcurv_cli_" + name);
    fs::remove_all(d);
    return d;
}

}  // namespace

TEST_CASE("key-value parsing") {
    auto kv = parse_key_values("# comment\nseed = 3\n[grid]\nn = 8  # trailing\n\n[model]\nq0=-2\n");
    CHECK(kv.at("seed") == "3");
    CHECK(kv.at("grid.n") == "8");
    CHECK(kv.at("model.q0") == "-2");
    CHECK_THROWS_AS(parse_key_values("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_key_values("no equals sign\n"), ConfigError);
}

TEST_CASE("config validation lists every problem") {
    auto c = config_from_text("grid.n = 8\nmodel.alphas = 0.1, 0.2, 0.3, 0.4\nappendix.lambdas = 1e-4, 1e-2\n");
    CHECK(c.grid_n == 8);
    CHECK(c.alphas[3] == 0.4);
    CHECK(c.appendix_lambdas.size() == 2);
    try {
        config_from_text("model.q0 = 1\ncutoff.A0 = 3\nbranch.lambdas = 0.1, 0.3\n").validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.problems().size() >= 3);
    }
    CHECK_THROWS_AS(config_from_text("nonsense.key = 1\n"), ConfigError);
    CHECK_THROWS_AS(config_from_text("grid.n = eight\n"), ConfigError);
    // the echo parses back to the same configuration
    ExperimentConfig d;
    CHECK(config_from_text(d.echo()).echo() == d.echo());
}

TEST_CASE("lambda grids") {
    auto l = linspace(0.1, 0.2, 3);
    CHECK(l[1] == doctest::Approx(0.15));
    auto g = geomspace(1e-4, 1e-2, 3);
    CHECK(g[1] == doctest::Approx(1e-3));
    CHECK(parse_list("1, 2.5,3") == std::vector<double>{1, 2.5, 3});
}

TEST_CASE("parallel_for covers every index once") {
    std::vector<int> hits(37, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS(parallel_for(5, 2, [](std::size_t i) {
        if (i == 3) throw std::runtime_error("boom");
    }));
}

TEST_CASE("selftest exits 0 and prints the invariant table") {
    auto out = scratch("selftest");
    Run r = run_cli("selftest --out '" + out.string() + "'");
    CHECK(r.status == 0);
    CHECK(r.output.find("invariant") != std::string::npos);
    CHECK(r.output.find("FAIL") == std::string::npos);
    CHECK(fs::exists(out / "selftest.csv"));
    CHECK(fs::exists(out / "manifest.json"));
}

TEST_CASE("appendix-oracle prints the closed-form match and is deterministic") {
    auto a = scratch("appendix_a"), b = scratch("appendix_b");
    std::string lam = "--lambda-min 4.5399929762484854e-05 --lambda-max 4.5399929762484854e-05 --lambda-count 1";
    Run r = run_cli("appendix-oracle " + lam + " --out '" + a.string() + "'");
    CHECK(r.status == 0);
    CHECK(r.output.find("closed form") != std::string::npos);
    Run r2 = run_cli("appendix-oracle " + lam + " --out '" + b.string() + "'");
    CHECK(r2.status == 0);
    CHECK(slurp(a / "appendix.csv") == slurp(b / "appendix.csv"));

    auto m = nlohmann::json::parse(slurp(a / "manifest.json"));
    CHECK(m["subcommand"] == "appendix-oracle");
    REQUIRE(m["files"].size() == 1);
    CHECK(m["files"][0]["path"] == "appendix.csv");
    CHECK(m["files"][0]["sha256"] == sha256_file((a / "appendix.csv").string()));
    CHECK(m["config"].contains("cutoff.A0"));
    CHECK(m["versions"].contains("fftw"));
}

TEST_CASE("sha256 of a known string") {
    fs::path p = fs::temp_directory_path() / "qcurv_sha_test.txt";
    std::ofstream(p) << "abc";
    CHECK(sha256_file(p.string()) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    fs::remove(p);
}

TEST_CASE("solve-min with constant f writes a zero field") {
    auto out = scratch("solve");
    fs::create_directories(out);
    fs::path cfg = out / "run.cfg";
    std::ofstream(cfg) << "[grid]\nn = 8\n[model]\nq0 = -1\nfamily = constant\nf_constant = -1\n";
    Run r = run_cli("solve-min --config '" + cfg.string() + "' --out '" + (out / "o").string() + "'");
    CHECK(r.status == 0);
    Snapshot s = read_snapshot((out / "o" / "solution.qc4f").string());
    CHECK(s.field.spec.n == 8);
    CHECK(max_abs(s.field) <= 1e-12);
}

TEST_CASE("exit codes for configuration errors") {
    auto out = scratch("bad");
    fs::create_directories(out);
    fs::path cfg = out / "bad.cfg";
    std::ofstream(cfg) << "model.q0 = 2\ncutoff.A0 = 0.5\n";
    Run r = run_cli("selftest --config '" + cfg.string() + "' --out '" + (out / "o").string() + "'");
    CHECK(r.status == 2);
    CHECK(r.output.find("q0") != std::string::npos);
    CHECK(r.output.find("A0") != std::string::npos);
    CHECK(run_cli("selftest --no-such-flag").status == 2);
    CHECK(run_cli("no-such-command").status == 2);
    CHECK(run_cli("appendix-oracle --lambda-min 1e-3").status == 2);
    CHECK(run_cli("appendix-oracle --config /nonexistent/file.cfg").status == 2);
}

TEST_CASE("blowup-analyze on the synthetic fixture") {
    auto out = scratch("blowup");
    Run r = run_cli("blowup-analyze --out '" + out.string() + "'");
    CHECK(r.status == 0);
    CHECK(fs::exists(out / "peaks.csv"));
    CHECK(fs::exists(out / "fixture.qc4f"));
    Run again = run_cli("blowup-analyze '" + (out / "fixture.qc4f").string() + "' --out '" + (out / "re").string() + "'");
    CHECK(again.status == 0);
    CHECK(fs::exists(out / "re" / "peaks.csv"));
}
