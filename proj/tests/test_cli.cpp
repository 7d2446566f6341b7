// Copyright 2026 the hmskm authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// End-to-end checks of the installed command-line binary, driven as a
// subprocess. The binary's path is injected by the build as HMSKM_CLI_PATH.

#include <doctest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "hmskm_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

CmdResult run_cli(const std::string& args) {
  const fs::path so = work_dir() / "stdout.txt";
  const fs::path se = work_dir() / "stderr.txt";
  const std::string cmd = std::string(HMSKM_CLI_PATH) + " " + args + " > " +
                          so.string() + " 2> " + se.string();
  const int status = std::system(cmd.c_str());
  CmdResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(so);
  r.err = slurp(se);
  return r;
}

std::string write_model(const std::string& name, const std::string& text) {
  const fs::path p = work_dir() / name;
  std::ofstream out(p);
  out << text;
  return p.string();
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate, exact filter, and sequential filter chain together") {
  const std::string model = write_model(
      "model.json", R"({"preset": "sis", "overrides": {"T": 40}})");
  const fs::path path_csv = work_dir() / "path.csv";
  const fs::path traj_csv = work_dir() / "traj.csv";

  const CmdResult sim = run_cli("simulate --model " + model + " --out " +
                                path_csv.string() + " --trajectory " +
                                traj_csv.string() + " --seed 5");
  CAPTURE(sim.err);
  REQUIRE(sim.code == 0);
  CHECK(sim.out.find("simulated") != std::string::npos);
  REQUIRE(fs::exists(path_csv));
  CHECK(first_line(path_csv) == "time,kind,value");
  CHECK(first_line(traj_csv) == "time,x1,regime");
  CHECK(count_lines(path_csv) > 100);
  // The trajectory has one row per transition plus the initial row; the
  // path file additionally carries the initial regime row.
  CHECK(count_lines(traj_csv) == count_lines(path_csv));

  // Hide the regime to filter as an observer would.
  const fs::path hidden_csv = work_dir() / "hidden.csv";
  const CmdResult sim2 = run_cli("simulate --model " + model + " --out " +
                                 hidden_csv.string() +
                                 " --seed 5 --no-regime");
  REQUIRE(sim2.code == 0);

  const fs::path exact_csv = work_dir() / "exact.csv";
  const CmdResult fex =
      run_cli("filter-exact --model " + model + " --path " +
              hidden_csv.string() + " --out " + exact_csv.string() +
              " --grid 2");
  CAPTURE(fex.err);
  REQUIRE(fex.code == 0);
  CHECK(first_line(exact_csv) == "time,at_event,pi1,pi2");
  CHECK(count_lines(exact_csv) > 20);
  // Posterior rows are probability vectors.
  {
    std::ifstream in(exact_csv);
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line) && rows < 50) {
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ss(line);
      double t, at_event, p1, p2;
      REQUIRE((ss >> t >> at_event >> p1 >> p2));
      CHECK(p1 >= 0.0);
      CHECK(p2 >= 0.0);
      CHECK(p1 + p2 == doctest::Approx(1.0).epsilon(1e-9));
      ++rows;
    }
    CHECK(rows > 0);
  }

  const fs::path post_csv = work_dir() / "post.csv";
  const fs::path reg_csv = work_dir() / "reg.csv";
  const CmdResult fpl = run_cli(
      "filter-pl --model " + model + " --path " + hidden_csv.string() +
      " --out " + post_csv.string() + " --regime-out " + reg_csv.string() +
      " --particles 200 --seed 3 --capture-every 10");
  CAPTURE(fpl.err);
  REQUIRE(fpl.code == 0);
  CHECK(first_line(post_csv) == "time,param,mean,median,q025,q975");
  CHECK(first_line(reg_csv) == "time,pi1,pi2");
  CHECK(slurp(post_csv).find("theta1") != std::string::npos);
  CHECK(slurp(post_csv).find("theta2") != std::string::npos);
  CHECK(fpl.out.find("theta1") != std::string::npos);

  // Alternative algorithms parse and run on the same inputs.
  const CmdResult storvik = run_cli(
      "filter-pl --model " + model + " --path " + hidden_csv.string() +
      " --out " + (work_dir() / "storvik.csv").string() +
      " --algorithm storvik --particles 100 --seed 3 --capture-every 20");
  CHECK(storvik.code == 0);
  const CmdResult lw = run_cli(
      "filter-pl --model " + model + " --path " + hidden_csv.string() +
      " --out " + (work_dir() / "lw.csv").string() +
      " --algorithm liu-west --particles 100 --seed 3 --capture-every 20 "
      "--trigger ess --ess-fraction 0.6");
  CHECK(lw.code == 0);
}

TEST_CASE("usage errors exit nonzero with a diagnostic") {
  const CmdResult none = run_cli("");
  CHECK(none.code != 0);

  const CmdResult unknown = run_cli("frobnicate --fast");
  CHECK(unknown.code != 0);

  const CmdResult missing_opt = run_cli("simulate");
  CHECK(missing_opt.code != 0);
  CHECK_FALSE(missing_opt.err.empty());

  const CmdResult no_file =
      run_cli("simulate --model /nonexistent/model.json --out /tmp/x.csv");
  CHECK(no_file.code != 0);

  const std::string bad_model = write_model("bad.json", R"({"preset": "x"})");
  const CmdResult bad = run_cli("simulate --model " + bad_model +
                                " --out " + (work_dir() / "y.csv").string());
  CHECK(bad.code == 1);
  CHECK(bad.err.find("error:") != std::string::npos);

  const CmdResult bad_rule = run_cli(
      "policy-eval --single-rule nonsense --scenarios 1 --out " +
      (work_dir() / "z.csv").string());
  CHECK(bad_rule.code == 1);
  CHECK(bad_rule.err.find("available:") != std::string::npos);
}

TEST_CASE("single-scenario policy runs write a trajectory") {
  const fs::path tr = work_dir() / "policy_traj.csv";
  const CmdResult r = run_cli(
      "policy-eval --single-rule baseline --trajectory-out " + tr.string());
  CAPTURE(r.err);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("baseline") != std::string::npos);
  CHECK(r.out.find("ave infecteds") != std::string::npos);
  CHECK(first_line(tr) == "time,infecteds,regime,policy,pi2hat");
  CHECK(count_lines(tr) > 100);
}

TEST_CASE("study suites report their checks and gate the exit code") {
  const fs::path okdir = work_dir() / "repro_ok";
  const CmdResult ok =
      run_cli("reproduce --suite fig2 --out " + okdir.string());
  CAPTURE(ok.err);
  REQUIRE(ok.code == 0);
  CHECK(ok.out.find("\"suite\": \"fig2\"") != std::string::npos);
  CHECK(ok.out.find("\"pass\": true") != std::string::npos);
  CHECK(fs::exists(okdir / "path.csv"));
  CHECK(fs::exists(okdir / "trajectory.csv"));
  CHECK(fs::exists(okdir / "manifest.json"));

  // A seed whose draw lands outside the 95% band: the suite must say so
  // and exit 2 (threshold failure, distinct from usage errors).
  const fs::path faildir = work_dir() / "repro_fail";
  const CmdResult fail = run_cli("reproduce --suite fig3 --seed 3 --out " +
                                 faildir.string());
  CAPTURE(fail.out);
  CHECK(fail.code == 2);
  CHECK(fail.err.find("FAIL") != std::string::npos);

  const CmdResult bad_suite = run_cli("reproduce --suite fig9");
  CHECK(bad_suite.code != 0);
  CHECK(bad_suite.code != 2);
}

}  // TEST_SUITE
