#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "../vendor/json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out, err;
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override
    {
        dir = fs::temp_directory_path() /
              ("vortex_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    Result run(const std::string& args, const std::string& out = "out")
    {
        fs::path o = dir / "stdout.txt", e = dir / "stderr.txt";
        std::string cmd = std::string(VORTEX_CLI_PATH) + " " + args + " --out " + (dir / out).string() + " >" +
                          o.string() + " 2>" + e.string();
        int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(o), slurp(e)};
    }

    fs::path write(const std::string& name, const std::string& text)
    {
        fs::path p = dir / name;
        std::ofstream(p) << text;
        return p;
    }

    json manifest(const std::string& sub, const std::string& out = "out")
    {
        return json::parse(slurp(dir / out / (sub + "_manifest.json")));
    }
};

} // namespace

TEST_F(Cli, Version)
{
    Result r = run("--version");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "1.0.0\n");
}

TEST_F(Cli, MissingFieldNamesPath)
{
    Result r = run("evolve --curve circle:R=1,N=64 --gamma 1 --t1 0.01");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("$.nu"), std::string::npos) << r.err;
}

TEST_F(Cli, SchemaErrors)
{
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("bogus").code, 2);
    auto bad_type = write("t.json", R"({"nu": "x"})");
    Result r = run("ring --config " + bad_type.string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("$.nu"), std::string::npos);
    auto broken = write("b.json", "{");
    EXPECT_EQ(run("ring --config " + broken.string()).code, 2);
    EXPECT_EQ(run("ring --config " + (dir / "absent.json").string()).code, 2);
    EXPECT_EQ(run("correction --kappa 1 --gamma 1 --nu 2").code, 2);
    auto grid = write("g.json", R"({"curve":{"type":"circle","R":1,"N":64},"gamma":1,"nu":1,"t":1e-4,
                                   "grid":{"kind":"sphere"}})");
    r = run("field --config " + grid.string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("$.grid.kind"), std::string::npos) << r.err;
}

TEST_F(Cli, DomainErrorExitCode)
{
    auto cfg = write("f.json", R"({"curve":{"type":"circle","R":1,"N":64},"gamma":1,"nu":1,"t":2,
                                  "grid":{"kind":"tube","ns":8,"nrho":41,"ntheta":8}})");
    Result r = run("field --config " + cfg.string());
    EXPECT_EQ(r.code, 3);
    EXPECT_EQ(manifest("field")["status"], "error");
}

TEST_F(Cli, EvolveCheckpointsAndManifest)
{
    Result r = run("evolve --curve circle:R=1,N=64 --gamma 1 --nu 1 --t1 0.01 --steps 20 --checkpoint-every 10");
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* name : {"checkpoint_0000.csv", "checkpoint_0001.csv", "checkpoint_0002.csv"}) {
        std::ifstream in(dir / "out" / name);
        std::string first, header;
        std::getline(in, first);
        std::getline(in, header);
        EXPECT_EQ(first.rfind("# t=", 0), 0u);
        EXPECT_EQ(header, "s,x,y,z,kappa,tau");
    }
    json m = manifest("evolve");
    EXPECT_EQ(m["status"], "ok");
    EXPECT_EQ(m["subcommand"], "evolve");
    EXPECT_EQ(m["config"]["law"], "LIA");
    EXPECT_EQ(m["outputs"].size(), 3u);
    for (const auto& o : m["outputs"]) EXPECT_EQ(o["sha256"].get<std::string>().size(), 64u);
}

TEST_F(Cli, OutputsAreDeterministic)
{
    const std::string args = "tables --rho-max 3 --step 0.25 --quiet";
    ASSERT_EQ(run(args, "a").code, 0);
    ASSERT_EQ(run(args, "b").code, 0);
    std::string a = slurp(dir / "a" / "tables.csv");
    EXPECT_EQ(a, slurp(dir / "b" / "tables.csv"));
    EXPECT_NE(a.find("rho,F,G,H,Omega0,V0\n"), std::string::npos);
    EXPECT_EQ(manifest("tables", "a")["outputs"][0]["sha256"], manifest("tables", "b")["outputs"][0]["sha256"]);

    auto cfg = write("f.json", R"({"curve":{"type":"ellipse","a":1.5,"b":1,"N":128},"gamma":1,"nu":1,"t":1e-4,
                                  "grid":{"kind":"box","nx":12,"ny":12,"nz":12}})");
    ASSERT_EQ(run("field --quiet --config " + cfg.string(), "c").code, 0);
    ASSERT_EQ(run("field --quiet --config " + cfg.string(), "d").code, 0);
    EXPECT_EQ(slurp(dir / "c" / "field.vtk"), slurp(dir / "d" / "field.vtk"));
}

TEST_F(Cli, TubeFieldCsv)
{
    auto cfg = write("f.json", R"({"curve":{"type":"circle","R":1,"N":64},"gamma":1,"nu":1,"t":1e-4,
                                  "grid":{"kind":"tube","ns":8,"nrho":41,"ntheta":8}})");
    ASSERT_EQ(run("field --quiet --config " + cfg.string()).code, 0);
    std::ifstream in(dir / "out" / "field_tube.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "s,rho,theta,wx,wy,wz");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 8 * 41 * 8);
}

TEST_F(Cli, CorrectionOutputs)
{
    ASSERT_EQ(run("correction --kappa 1 --vstar-b 0.11 --gamma 1 --nu 10 --quiet").code, 0);
    json side = json::parse(slurp(dir / "out" / "correction.json"));
    EXPECT_LT(side["contraction_estimate"].get<double>(), 0.5);
    EXPECT_GE(side["iterations"].get<int>(), 1);
    EXPECT_EQ(manifest("correction")["outputs"].size(), 2u);
}

TEST_F(Cli, RingReport)
{
    Result r = run("ring --nu 10 --t 1e-5");
    ASSERT_EQ(r.code, 0) << r.err;
    json ring = json::parse(slurp(dir / "out" / "ring.json"));
    EXPECT_LT(ring["relative_gap"].get<double>(), 0.02);
    EXPECT_NE(r.out.find("relative gap"), std::string::npos);
}

TEST_F(Cli, DesingCsv)
{
    ASSERT_EQ(run("desing --curve ellipse:a=2,b=1,N=512 --samples 4 --quiet").code, 0);
    std::ifstream in(dir / "out" / "desing.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "s,vx,vy,vz,diag");
}

TEST_F(Cli, VerifyReport)
{
    Result r = run("verify");
    json report = json::parse(slurp(dir / "out" / "verify_report.json"));
    ASSERT_EQ(report["checks"].size(), 13u);
    int passed = 0;
    for (const auto& c : report["checks"]) passed += c["pass"].get<bool>();
    EXPECT_EQ(passed, report["passed"].get<int>());
    EXPECT_GE(passed, 12);
    EXPECT_EQ(r.code, passed == 13 ? 0 : 1);
    EXPECT_EQ(manifest("verify")["status"], passed == 13 ? "ok" : "checks failed");
    std::istringstream lines(r.out);
    std::string line;
    int printed = 0;
    while (std::getline(lines, line)) printed += line.rfind("PASS", 0) == 0 || line.rfind("FAIL", 0) == 0;
    EXPECT_EQ(printed, 13);
}
