#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(METARULE_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("subcommands and exit codes") {
    const auto dir = fs::temp_directory_path() / "metarule_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto log = dir / "log.txt";
    const auto data = dir / "syn";

    REQUIRE(run("synth --n 150 --m 40 --groups 4 --min-active 3 --max-active 8 --seed 2 -o " + data.string(), log) == 0);
    CHECK(fs::exists(data / "data.libsvm"));
    CHECK(fs::exists(data / "data.libsvm.names"));
    CHECK(fs::exists(data / "domain_map.tsv"));

    const std::string common = " --data " + (data / "data.libsvm").string() + " --C-grid 0.1 1 --B 3 ";
    CHECK(run("train" + common + "-o " + (dir / "train").string(), log) == 0);
    CHECK(fs::exists(dir / "train" / "model.txt"));
    CHECK(slurp(log).find("selected C=") != std::string::npos);

    CHECK(run("explain" + common + "--rep DomainMF --depth 2 --domain-map " + (data / "domain_map.tsv").string() +
                  " -o " + (dir / "explain").string(),
              log) == 0);
    CHECK(slurp(log).find("IF group") != std::string::npos);
    CHECK(fs::exists(dir / "explain" / "rules_domainmf.txt"));

    CHECK(run("stability" + common + "--rep FG --depth 2", log) == 0);
    CHECK(slurp(log).find("stability=") != std::string::npos);

    // flat key=value config file
    std::ofstream(dir / "sweep.ini") << "reps=FG DDMF-NMF\nk-grid=3 5\nmax-depth=3\nnmf-iters=30\n";
    CHECK(run("sweep" + common + "--config " + (dir / "sweep.ini").string() + " -o " + (dir / "sweep").string(),
              log) == 0);
    CHECK(fs::exists(dir / "sweep" / "report.json"));
    CHECK(slurp(dir / "sweep" / "table.md").find("DDMF-NMF") != std::string::npos);

    const auto report = (dir / "sweep" / "report.json").string();
    const std::string five = report + " " + report + " " + report + " " + report + " " + report;
    CHECK(run("compare --a FG --b FG " + five, log) == 2);  // FG vs itself: every difference is zero
    CHECK(slurp(log).find("too few nonzero differences") != std::string::npos);
    CHECK(run("compare " + five, log) == 0);

    CHECK(run("compare --diffs 2.86 3.39 0.26 6.65 3.09 0.67 -0.27 17.34 20.46", log) == 0);
    const auto out = slurp(log);
    CHECK(out.find("T=2.0") != std::string::npos);
    CHECK(out.find("significant at 1%") != std::string::npos);
    CHECK(out.find("mean=6.05 sd=7.18") != std::string::npos);

    CHECK(run("sweep --data " + (dir / "missing.libsvm").string(), log) == 2);
    CHECK(run("sweep" + common + "--max-depth 9", log) == 1);
    CHECK(run("sweep" + common + "--reps PCA", log) == 1);
    CHECK(run("--no-such-flag", log) == 1);
    fs::remove_all(dir);
  }
}
