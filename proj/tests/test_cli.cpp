#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(DOMKIT_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string spec(const std::string& name) { return std::string(DOMKIT_SPECS) + "/" + name + ".json"; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "domkit_cli_tests";
    fs::create_directories(dir);
    return dir / name;
}

/// Structural equality with a relative tolerance on numbers.
void expect_json_near(const json& got, const json& want, const std::string& path = "$") {
    if (want.is_number() && got.is_number()) {
        const double a = got.get<double>(), b = want.get<double>();
        EXPECT_LE(std::abs(a - b), 1e-8 * (1.0 + std::abs(b))) << path;
        return;
    }
    ASSERT_EQ(got.type(), want.type()) << path;
    if (want.is_object()) {
        ASSERT_EQ(got.size(), want.size()) << path;
        for (auto it = want.begin(); it != want.end(); ++it) {
            ASSERT_TRUE(got.contains(it.key())) << path << "." << it.key();
            expect_json_near(got.at(it.key()), it.value(), path + "." + it.key());
        }
    } else if (want.is_array()) {
        ASSERT_EQ(got.size(), want.size()) << path;
        for (std::size_t i = 0; i < want.size(); ++i)
            expect_json_near(got[i], want[i], path + "[" + std::to_string(i) + "]");
    } else {
        EXPECT_EQ(got, want) << path;
    }
}

}  // namespace

TEST(CliAnalyze, ThirdOrderExample) {
    const auto r = run("analyze " + spec("third_order"));
    ASSERT_EQ(r.code, 0);
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["verdict"]["status"], "certified");
    EXPECT_EQ(j["verdict"]["p"], 2);
    EXPECT_EQ(j["pole_zero_split"]["p"], 2);
    EXPECT_NEAR(j["pole_zero_split"]["shifted_poles"][0][0].get<double>(), 1.5, 1e-8);
    EXPECT_EQ(j["passivity_candidates"]["p"], json::array({1, 2}));
}

TEST(CliAnalyze, Goldens) {
    for (const char* name : {"third_order", "chua", "kalman", "controller", "passive1"}) {
        SCOPED_TRACE(name);
        const auto r = run(std::string("analyze ") + spec(name));
        ASSERT_EQ(r.code, 0);
        expect_json_near(json::parse(r.out), json::parse(slurp(fs::path(DOMKIT_GOLDEN) / (std::string(name) + ".analyze.json"))));
    }
}

TEST(CliAnalyze, DeterministicOutput) {
    const auto a = run("analyze " + spec("chua"));
    const auto b = run("analyze " + spec("chua"));
    EXPECT_EQ(a.out, b.out);
    EXPECT_FALSE(a.out.empty());
}

TEST(CliAnalyze, ControllerLoop) {
    const auto j = json::parse(run("analyze " + spec("controller")).out);
    EXPECT_EQ(j["circle"]["q"], 3);
    EXPECT_EQ(j["circle"]["encirclements_clockwise"], -2);
    EXPECT_EQ(j["verdict"]["p"], 1);
}

TEST(CliExitCodes, BoundaryPoleIsInconclusive) {
    const auto r = run("analyze " + spec("boundary"));
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(json::parse(r.out)["verdict"]["status"], "inconclusive");
    EXPECT_EQ(run("nyquist " + spec("boundary") + " --out " + scratch("b.csv").string()).code, 2);
    EXPECT_EQ(run("nyquist " + spec("boundary") + " --indent-radius 1e-4 --out " + scratch("b.csv").string()).code, 0);
}

TEST(CliExitCodes, InputErrors) {
    EXPECT_EQ(run("analyze /nonexistent/spec.json").code, 1);
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("frobnicate " + spec("third_order")).code, 1);
    EXPECT_EQ(run("simulate " + spec("third_order")).code, 1);
    const auto bad = scratch("bad.json");
    std::ofstream(bad) << "{\"transfer_function\": {\"num\": [1], \"den\": [1, 1]}, \"lambda\": -1}";
    EXPECT_EQ(run("analyze " + bad.string()).code, 1);
    std::ofstream(bad) << "{ not json";
    EXPECT_EQ(run("analyze " + bad.string()).code, 1);
    std::ofstream(bad) << "{\"transfer_function\": {\"num\": [1], \"den\": [1, 1]}, \"sector\": {\"k1\": 2, \"k2\": 1}}";
    EXPECT_EQ(run("analyze " + bad.string()).code, 1);
}

TEST(CliNyquist, CsvAndSidecar) {
    const auto out = scratch("chua.csv");
    fs::remove(out.string() + ".disk.json");
    ASSERT_EQ(run("nyquist " + spec("chua") + " --out " + out.string()).code, 0);
    const std::string csv = slurp(out);
    EXPECT_EQ(csv.rfind("omega,re,im,closure\n", 0), 0u);
    EXPECT_NE(csv.find("\ninf,"), std::string::npos);
    const auto side = json::parse(slurp(out.string() + ".disk.json"));
    EXPECT_NEAR(side["disk"]["center"].get<double>(), -0.9643, 1e-4);
    EXPECT_NEAR(side["disk"]["radius"].get<double>(), 0.4643, 1e-4);
}

TEST(CliNyquist, GridPointsOption) {
    const auto out = scratch("g.csv");
    ASSERT_EQ(run("nyquist " + spec("third_order") + " --grid-points 300 --out " + out.string()).code, 0);
    const auto side = json::parse(slurp(out.string() + ".disk.json"));
    EXPECT_EQ(side["provenance"]["grid"]["points"], 300);
}

TEST(CliSimulate, Labels) {
    const auto bi = run("simulate " + spec("bistable") + " --out " + scratch("bi.csv").string());
    ASSERT_EQ(bi.code, 0);
    const auto jb = json::parse(bi.out);
    EXPECT_EQ(jb["label"]["kind"], "fixed_point");
    EXPECT_EQ(jb["equilibria"]["inputs"].size(), 3u);
    EXPECT_EQ(slurp(scratch("bi.csv")).rfind("t,x1,x2,x3,y,u\n", 0), 0u);
    const auto lc = json::parse(run("simulate " + spec("limit_cycle") + " --out " + scratch("lc.csv").string()).out);
    EXPECT_EQ(lc["label"]["kind"], "periodic");
}

TEST(CliRateScan, PassivityWindows) {
    for (const char* name : {"passive1", "passive2"}) {
        SCOPED_TRACE(name);
        const auto r = run(std::string("rate-scan ") + spec(name));
        ASSERT_EQ(r.code, 0);
        const auto w = json::parse(r.out)["windows"];
        ASSERT_EQ(w.size(), 1u);
        EXPECT_NEAR(w[0]["lambda_min"].get<double>(), 2.0, 0.05);
        EXPECT_NEAR(w[0]["lambda_max"].get<double>(), 3.0, 0.05);
        EXPECT_GE(w[0]["lambda_min"].get<double>(), 2.0);
        EXPECT_LE(w[0]["lambda_max"].get<double>(), 3.0);
    }
}

TEST(CliRateScan, RangeOverride) {
    const auto r = run(std::string("rate-scan ") + spec("passive1") + " --from 2.2 --to 2.8 --steps 7");
    ASSERT_EQ(r.code, 0);
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["rows"].size(), 7u);
    EXPECT_TRUE(j["windows"][0]["clipped_below"].get<bool>());
}
