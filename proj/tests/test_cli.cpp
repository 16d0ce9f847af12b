#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "levy/cli.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = LEVY_CLI_PATH;
const std::string kConfigs = LEVY_CONFIG_DIR;

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("levy_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string cfg(const std::string& name) { return kConfigs + "/" + name; }

}  // namespace

TEST_CASE("bounds on the Brownian config succeeds") {
  Scratch s;
  CHECK(run("bounds --config " + cfg("pure_bm.cfg") + " --seed 1 --out " + (s / "b.csv")) == 0);
  const auto rows = lines(slurp(s / "b.csv"));
  REQUIRE(rows.size() > 3);
  CHECK(rows[0] == "check,value,bound,std_error,cases,violations,passed");
  CHECK(fs::exists(s / "b.csv.manifest.json"));
}

TEST_CASE("density curve has one row per requested time") {
  Scratch s;
  CHECK(run("density --config " + cfg("jump.cfg") + " --t-grid 0.1:5:50 --n 2000 --out " + (s / "d.csv")) == 0);
  const auto rows = lines(slurp(s / "d.csv"));
  REQUIRE(rows.size() == 51);
  CHECK(rows[0] == "t,f,f_stderr,G,G_stderr");
  CHECK(rows[1].rfind("0.1,", 0) == 0);
  CHECK(rows[50].rfind("5,", 0) == 0);
}

TEST_CASE("density table and json output") {
  Scratch s;
  CHECK(run("density --config " + cfg("jump.cfg") + " --table --t-grid 1:3:11 --z-max 4 --z-count 11 --n 2000 --out " +
            (s / "t.csv")) == 0);
  const auto rows = lines(slurp(s / "t.csv"));
  REQUIRE(rows.size() == 122);
  CHECK(fs::exists(s / "t.csv.json"));
  // Too coarse a table is rejected rather than silently interpolated.
  CHECK(run("density --config " + cfg("jump.cfg") + " --table --t-grid 0:2:5 --z-count 4 --n 500 --out " +
            (s / "coarse.csv")) == 1);
  CHECK(rows[0] == "t,z,f_value,f_stderr,G_value,G_stderr");

  CHECK(run("density --config " + cfg("jump.cfg") + " --t-grid 0.5:1:2 --n 500 --format json --out " +
            (s / "d.json")) == 0);
  const auto j = nlohmann::json::parse(slurp(s / "d.json"));
  CHECK(j["rows"].size() == 2);
}

TEST_CASE("simulate writes passage samples and a path dump") {
  Scratch s;
  CHECK(run("simulate --config " + cfg("jump.cfg") + " --n 20 --out " + (s / "s.csv") + " --dump-path " +
            (s / "p.csv")) == 0);
  const auto rows = lines(slurp(s / "s.csv"));
  REQUIRE(rows.size() == 21);
  CHECK(rows[0] == "path,tau,crossed_at_jump");
  CHECK(lines(slurp(s / "p.csv"))[0] == "t,x_pre,x_post,is_jump");
}

TEST_CASE("filter writes its three tables") {
  Scratch s;
  CHECK(run("filter --config " + cfg("jump.cfg") + " --n 500 --dt 0.02 --horizon 0.5 --table-paths 1000 " +
            "--r-grid 1:2:3 --out " + (s / "f.csv")) == 0);
  const auto rows = lines(slurp(s / "f.csv"));
  REQUIRE(rows.size() == 26);
  CHECK(rows[0] == "t,ess,alive_frac,defect_est");
  CHECK(lines(slurp(s / "f.csv.obs.csv"))[0] == "t,q");
  const auto fbar = lines(slurp(s / "f.csv.fbar.csv"));
  CHECK(fbar[0] == "r,f_bar");
  CHECK(fbar.size() == 4);

  // The written observation can be read back.
  CHECK(run("filter --config " + cfg("jump.cfg") + " --n 500 --obs " + (s / "f.csv.obs.csv") +
            " --table-paths 1000 --out " + (s / "g.csv")) == 0);
  CHECK(lines(slurp(s / "g.csv")).size() == 26);
}

TEST_CASE("exit codes") {
  Scratch s;
  CHECK(run("") == 1);
  CHECK(run("simulate --config " + cfg("jump.cfg") + " --bogus") == 1);
  CHECK(run("simulate --config /nonexistent/levy.cfg") == 1);
  CHECK(run("simulate") == 1);
  CHECK(run("--version") == 0);
  CHECK(run("validate ks --config " + cfg("pure_bm.cfg") + " --analytic --n 2000 --out " + (s / "k.csv")) == 0);
  // A 200-path table is far too noisy for 2e4 samples: the test must reject.
  CHECK(run("validate ks --config " + cfg("jump.cfg") + " --n 20000 --table-paths 200 --out " + (s / "k2.csv")) ==
        2);
  std::ofstream(s / "bad.cfg") << "barrier = -1\n";
  CHECK(run("simulate --config " + (s / "bad.cfg")) == 1);
}

TEST_CASE("replay reproduces the output") {
  Scratch s;
  CHECK(run("density --config " + cfg("jump.cfg") + " --t-grid 0.5:2:4 --n 1000 --seed 9 --out " +
            (s / "d.csv")) == 0);
  const auto first = slurp(s / "d.csv");
  fs::remove(s / "d.csv");
  CHECK(run("replay " + (s / "d.csv.manifest.json")) == 0);
  CHECK(slurp(s / "d.csv") == first);
  const auto m = nlohmann::json::parse(slurp(s / "d.csv.manifest.json"));
  CHECK(m["seed"] == 9);
  CHECK(m["command"] == "density");
}

TEST_CASE("environment seed is the fallback") {
  Scratch s;
  const std::string args = "simulate --config " + cfg("jump.cfg") + " --n 50 --out ";
  CHECK(run(args + (s / "a.csv") + " --seed 42") == 0);
  CHECK(run("") == 1);
  ::setenv("LEVY_DEFAULT_SEED", "42", 1);
  CHECK(run(args + (s / "b.csv")) == 0);
  ::unsetenv("LEVY_DEFAULT_SEED");
  CHECK(slurp(s / "a.csv") == slurp(s / "b.csv"));
}

TEST_CASE("thread count does not change results") {
  Scratch s;
  const std::string args = "density --config " + cfg("jump.cfg") + " --t-grid 0.5:2:4 --n 3000 --out ";
  CHECK(run(args + (s / "one.csv") + " --threads 1") == 0);
  CHECK(run(args + (s / "many.csv") + " --threads 8") == 0);
  CHECK(slurp(s / "one.csv") == slurp(s / "many.csv"));
}

TEST_CASE("in-process entry point") {
  CHECK(levy::cli_main({"levy", "--version"}) == 0);
  CHECK(levy::cli_main({"levy", "nonsense"}) == 1);
}
