#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Runs the command-line binary with output silenced and returns its exit
// status, or -1 when the child did not exit normally.
int run_cli(const std::string& args) {
  const std::string cmd = std::string(DPG_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) parts.push_back(part);
  return parts;
}

// Fresh scratch directory under the system temp root.
fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dpg_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("exit codes separate usage errors from clean runs") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("") == 1);
  CHECK(run_cli("--no-such-flag") == 1);
  CHECK(run_cli("sweep --no-such-flag 1") == 1);
  CHECK(run_cli("sweep --config /nonexistent/cfg.json") == 1);
  CHECK(run_cli("flow --dt 0") == 1);
  CHECK(run_cli("mdp-run") == 1);
  CHECK(run_cli("verify --suite nonsense") == 1);
}

TEST_CASE("sweep emits the stable csv schema") {
  const fs::path dir = fresh_dir("sweep");
  REQUIRE(run_cli("sweep --gaps 0.5 --methods eg --out " + dir.string()) == 0);
  const auto lines = split_on(read_file(dir / "sweep.csv"), '\n');
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "method,gap,inv_gap,escape_time,escaped");
  const auto fields = split_on(lines[1], ',');
  REQUIRE(fields.size() == 5);
  CHECK(fields[0] == "eg");
  CHECK(fields[1] == "0.5");
  CHECK(fields[2] == "2");
  CHECK(std::stod(fields[3]) >= 454.0);
  CHECK(std::stod(fields[3]) <= 458.0);
  CHECK(fields[4] == "true");
  const json summary = json::parse(read_file(dir / "sweep_summary.json"));
  CHECK(summary.at("command") == "sweep");
  CHECK(summary.at("errors").empty());
  CHECK(summary.at("methods").at("eg").at("escaped_rows") == 1);
  fs::remove_all(dir);
}

TEST_CASE("sweep marks censored rows without failing") {
  const fs::path dir = fresh_dir("sweep_censor");
  REQUIRE(run_cli("sweep --gaps 0.3 --methods eg --max-time 5 --out " + dir.string()) == 0);
  const auto lines = split_on(read_file(dir / "sweep.csv"), '\n');
  REQUIRE(lines.size() == 2);
  const auto fields = split_on(lines[1], ',');
  REQUIRE(fields.size() == 5);
  CHECK(fields[3] == "nan");
  CHECK(fields[4] == "false");
  fs::remove_all(dir);
}

TEST_CASE("flow writes a trajectory table and a report") {
  const fs::path dir = fresh_dir("flow");
  REQUIRE(run_cli("flow --gate eg --dt 1 --max-time 50 --record-every 10 --out " +
                  dir.string()) == 0);
  const auto lines = split_on(read_file(dir / "flow.csv"), '\n');
  REQUIRE(lines.size() == 7);
  CHECK(lines[0] == "t,theta_0,theta_1,theta_2,pi_0,pi_1,pi_2,value");
  CHECK(split_on(lines[1], ',')[0] == "0");
  CHECK(split_on(lines[6], ',')[0] == "50");
  const json report = json::parse(read_file(dir / "flow_report.json"));
  CHECK(report.at("command") == "flow");
  CHECK(report.at("config").at("gate") == "eg");
  CHECK(report.at("config").at("escape_opt") == 0);
  CHECK(report.at("config").at("escape_corner") == 2);
  CHECK(report.at("steps") == 50);
  CHECK(report.at("escaped") == false);
  CHECK(report.at("final_value").get<double>() > 0.0);
  fs::remove_all(dir);
}

TEST_CASE("counterexample runs are byte-identical") {
  const fs::path dir1 = fresh_dir("counter1");
  const fs::path dir2 = fresh_dir("counter2");
  const std::string flags = "counterexample --grid-n 101 --etas 0.5,1 ";
  REQUIRE(run_cli(flags + "--out " + dir1.string()) == 0);
  REQUIRE(run_cli(flags + "--out " + dir2.string()) == 0);
  CHECK(read_file(dir1 / "counterexample.csv") == read_file(dir2 / "counterexample.csv"));
  CHECK(read_file(dir1 / "counterexample_report.json") ==
        read_file(dir2 / "counterexample_report.json"));
  const auto lines = split_on(read_file(dir1 / "counterexample.csv"), '\n');
  REQUIRE(lines.size() == 102);
  CHECK(lines[0] == "p,f_pg,f_eg,f_dg_eta_0.5,f_dg_eta_1");
  const json report = json::parse(read_file(dir1 / "counterexample_report.json"));
  CHECK(report.at("pg").at("negative_on_grid") == true);
  CHECK(report.at("pg").at("roots").empty());
  REQUIRE(report.at("eg").at("roots").size() == 1);
  CHECK(report.at("eg").at("roots")[0].at("p").get<double>() ==
        doctest::Approx(1.0 / 11.0).epsilon(1e-6));
  REQUIRE(report.at("dg").at("1").at("roots").size() == 1);
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("mdp-run on a random instance reports convergence data") {
  const fs::path dir = fresh_dir("mdp");
  REQUIRE(run_cli("mdp-run --random 3,2 --seed 7 --gamma 0.5 --max-iters 50000 --out " +
                  dir.string()) == 0);
  const json report = json::parse(read_file(dir / "mdp_report.json"));
  CHECK(report.at("command") == "mdp-run");
  CHECK(report.at("seed") == 7);
  CHECK(report.at("iterations").get<long>() >= 1);
  CHECK(report.at("final_tv").get<double>() >= 0.0);
  CHECK(report.at("min_visitation").get<double>() > 0.0);
  const auto lines = split_on(read_file(dir / "mdp_run.csv"), '\n');
  REQUIRE(lines.size() >= 3);
  CHECK(lines[0] == "t,delta");
  fs::remove_all(dir);
}

TEST_CASE("mdp-run rejects malformed instance files") {
  const fs::path dir = fresh_dir("badmdp");
  const fs::path bad = dir / "bad.json";
  {
    std::ofstream out(bad);
    out << "{\"n_states\": 2}";
  }
  CHECK(run_cli("mdp-run --mdp " + bad.string() + " --out " + dir.string()) == 1);
  CHECK(run_cli("mdp-run --mdp " + (dir / "missing.json").string() + " --out " +
                dir.string()) == 1);
  fs::remove_all(dir);
}

TEST_CASE("verify counterexample suite passes deterministically") {
  const fs::path dir = fresh_dir("verify_counter");
  REQUIRE(run_cli("verify --suite counterexample --out " + dir.string()) == 0);
  const json report = json::parse(read_file(dir / "verify_report.json"));
  CHECK(report.at("passed") == true);
  CHECK(report.at("violations") == 0);
  CHECK(report.at("counterexample").at("consistent") == true);
  fs::remove_all(dir);
}

TEST_CASE("verify bandit suite passes at reduced sampling") {
  const fs::path dir = fresh_dir("verify_bandit");
  REQUIRE(run_cli("verify --suite bandit --samples-scale 0.25 --seed 1 --out " +
                  dir.string()) == 0);
  const json report = json::parse(read_file(dir / "verify_report.json"));
  CHECK(report.at("passed") == true);
  CHECK(report.at("suppression").at("violations") == 0);
  CHECK(report.at("suppression").at("product_violations") == 0);
  REQUIRE(report.at("sector_bounds").size() == 4);
  for (const auto& entry : report.at("sector_bounds")) {
    CHECK(entry.at("bracket_found") == true);
    CHECK(entry.at("violations_inside") == 0);
  }
  fs::remove_all(dir);
}

TEST_CASE("config file fills defaults and explicit flags win") {
  const fs::path dir = fresh_dir("config");
  const fs::path cfg = dir / "cfg.json";
  {
    std::ofstream out(cfg);
    out << "{\"gaps\": \"0.5\", \"methods\": \"pg,eg\", \"dt\": 0.5}";
  }
  REQUIRE(run_cli("sweep --config " + cfg.string() + " --methods eg --out " + dir.string()) == 0);
  const json summary = json::parse(read_file(dir / "sweep_summary.json"));
  CHECK(summary.at("config").at("methods") == "eg");
  CHECK(summary.at("config").at("dt") == 0.5);
  CHECK(summary.at("config").at("gaps") == json::array({0.5}));
  fs::remove_all(dir);
}
