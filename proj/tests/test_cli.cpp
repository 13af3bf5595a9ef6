#include "support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace fluxcav;
namespace fs = std::filesystem;

namespace {

// Writes `config` (with the device path filled in) and runs one subcommand.
// Returns the process exit code.
int run_cli(const std::string& cmd, json config, const fs::path& out, const std::string& extra = "") {
    fs::create_directories(out);
    if (!config.contains("device"))
        config["device"] = std::string(FLUXCAV_DATA_DIR) + "/device_a.json";
    const fs::path cfg = out / "config.json";
    std::ofstream(cfg) << config.dump(2);
    const std::string line = std::string(FLUXCAV_CLI) + " --config " + cfg.string() + " --out " + out.string() + " " +
                             extra + " " + cmd + " > " + (out / "stdout.txt").string() + " 2>&1";
    const int status = std::system(line.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("fluxcav_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Data rows of a CSV (comment and header lines dropped).
std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
    std::ifstream is(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST(Cli, EmptyGridIsConfigError) {
    const auto out = scratch("empty");
    EXPECT_EQ(run_cli("spectrum", {{"spectrum", {{"points", 0}}}}, out), 2);
}

TEST(Cli, UnknownKeyIsConfigError) {
    const auto out = scratch("unknown");
    EXPECT_EQ(run_cli("spectrum", {{"spectrum", {{"pionts", 3}}}}, out), 2);
}

TEST(Cli, HalfFluxSpectrum) {
    const auto out = scratch("spectrum");
    ASSERT_EQ(run_cli("spectrum", {{"spectrum", {{"flux_min", 0.5}, {"flux_max", 0.5}, {"points", 1}}}}, out), 0);
    const auto rows = csv_rows(out / "spectrum.csv");
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_NEAR(std::stod(rows[0][1]) / 424.88, 1.0, 0.01);
}

TEST(Cli, RerunIsByteIdentical) {
    const json cfg = {{"seed", 11}, {"spectrum", {{"flux_min", 0.3}, {"flux_max", 0.5}, {"points", 5}}}};
    const auto a = scratch("rerun_a"), b = scratch("rerun_b");
    ASSERT_EQ(run_cli("spectrum", cfg, a, "--jobs 1"), 0);
    ASSERT_EQ(run_cli("spectrum", cfg, b, "--jobs 2"), 0);
    EXPECT_EQ(slurp(a / "spectrum.csv"), slurp(b / "spectrum.csv"));
    EXPECT_NE(slurp(a / "spectrum.csv").find("# config_hash"), std::string::npos);
}

TEST(Cli, BoundCommand) {
    const auto out = scratch("bound");
    ASSERT_EQ(run_cli("bound", {{"bound", json::object()}}, out), 0);
    const json j = json::parse(slurp(out / "bound.json"));
    EXPECT_EQ(j["pass"], 19);
    EXPECT_EQ(j["total"], 19);
    EXPECT_NEAR(j["bound_at_1mhz_khz"].get<double>(), 0.4717, 1e-4);
}

TEST(Cli, VacuumWignerPeak) {
    const auto out = scratch("wigner");
    const json cfg = {{"wigner", {{"state", {{"kind", "vacuum"}, {"fock_dim", 8}}},
                                  {"grid", {{"re_min", -1}, {"re_max", 1}, {"im_min", -1}, {"im_max", 1}, {"resolution", 5}}}}}};
    ASSERT_EQ(run_cli("wigner", cfg, out), 0);
    const json j = json::parse(slurp(out / "wigner.json"));
    EXPECT_NEAR(j["max"].get<double>(), 2.0 / kPi, 1e-9);
}

TEST(Cli, VerifyReportsFailureCode) {
    // The shipped device A chi is outside its 10% band, so verify exits with 4.
    const auto out = scratch("verify");
    EXPECT_EQ(run_cli("verify", json::object(), out), 4);
    const json j = json::parse(slurp(out / "verify.json"));
    EXPECT_FALSE(j["pass"].get<bool>());
}
