#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "koopest/estimator.hpp"
#include "koopest/sde_models.hpp"

using namespace koopest;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

class Workspace {
 public:
  Workspace() : dir_(fs::temp_directory_path() / ("koopest_cli_" + std::to_string(std::random_device{}()))) {
    fs::create_directories(dir_);
  }
  ~Workspace() { fs::remove_all(dir_); }
  fs::path operator/(const std::string& name) const { return dir_ / name; }

  /// Runs the installed executable through the shell.
  Run exec(const std::string& args) const {
    const auto o = dir_ / "stdout.txt";
    const auto e = dir_ / "stderr.txt";
    const std::string cmd =
        std::string(KOOPEST_CLI_PATH) + " " + args + " > " + o.string() + " 2> " + e.string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
  }

 private:
  fs::path dir_;
};

Run call(std::vector<std::string> args) {
  args.insert(args.begin(), "koopest");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = cli::parse_and_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

const std::string kSim = "simulate --model ou --theta 0.2,0.08,0.03 --T 501 --dt 0.0833333 --paths 2 --seed 7";

}  // namespace

TEST_CASE("simulate is deterministic") {
  Workspace w;
  const auto a = w.exec(kSim + " --format csv --out " + (w / "a.csv").string());
  const auto b = w.exec(kSim + " --format csv --out " + (w / "b.csv").string());
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(slurp(w / "a.csv") == slurp(w / "b.csv"));
  CHECK(slurp(w / "a.meta.json") == slurp(w / "b.meta.json"));
  CHECK(slurp(w / "a.csv").rfind("path_id,index,x,y\n", 0) == 0);
  const auto c = w.exec(kSim + " --format csv");
  CHECK(c.out == slurp(w / "a.csv"));
  const auto other = w.exec("simulate --seed 8 --paths 2 --format csv");
  CHECK(other.out != c.out);
}

TEST_CASE("estimate") {
  Workspace w;
  const auto csv = (w / "d.csv").string();
  REQUIRE(w.exec(kSim + " --format csv --out " + csv).code == 0);
  SUBCASE("happy path writes an estimate result") {
    const auto r = w.exec("estimate --data " + csv +
                          " --basis rbf --n 3 --objective frobenius --init 0.2,0.08,0.03 --out " +
                          (w / "r.json").string());
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    const auto j = nlohmann::json::parse(slurp(w / "r.json"));
    for (const char* key : {"theta_hat", "objective_value", "iterations", "converged", "failed", "gradient_norm",
                            "wall_time"})
      CHECK(j.contains(key));
    CHECK(j.at("theta_hat").size() == 3);
    CHECK(j.at("objective_value").get<double>() >= 0.0);
  }
  SUBCASE("round trip through the CSV is exact") {
    SimConfig c;
    c.theta = Vector{{0.2, 0.08, 0.03}};
    c.t_step = 0.0833333;
    c.n_points = 500;
    c.n_paths = 2;
    c.x0 = 0.08;
    c.seed = 7;
    c.scheme = Scheme::ExactOU;
    const auto model = SdeModel::ornstein_uhlenbeck();
    const auto data = simulate_snapshots(model, c);
    ObjectiveSpec spec;
    spec.problem = std::make_shared<Problem>(
        make_problem(model, BasisSet::gaussian_rbf(make_rbf_centers(data.x, 3)), data));
    OptimizerConfig opt;
    opt.theta_init = c.theta;
    const auto mem = estimate(spec, opt);

    const auto r = call({"estimate", "--data", csv, "--init", "0.2,0.08,0.03"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    const auto th = j.at("theta_hat").get<std::vector<double>>();
    REQUIRE(th.size() == 3);
    for (int k = 0; k < 3; ++k) CHECK(th[static_cast<std::size_t>(k)] == mem.theta_hat[k]);
    CHECK(j.at("objective_value").get<double>() == mem.objective_value);
    CHECK(j.at("iterations").get<int>() == mem.iterations);
  }
  SUBCASE("missing init is a usage error") {
    const auto r = w.exec("estimate --data " + csv + " --basis rbf --n 3");
    CHECK(r.code == 2);
    CHECK(r.err.find("--init") != std::string::npos);
    CHECK(r.err.find("Usage") != std::string::npos);
    CHECK(r.out.empty());
  }
  SUBCASE("malformed CSV reports the line") {
    std::ifstream is(csv);
    std::ofstream os(w / "bad.csv");
    std::string line;
    for (int i = 0; i < 50 && std::getline(is, line); ++i) os << line << '\n';
    os << "0,49,abc,0.1\n";
    os.close();
    const auto r = w.exec("estimate --data " + (w / "bad.csv").string() + " --data-dt 0.1 --init 0.2,0.08,0.03");
    CHECK(r.code == 2);
    CHECK(r.err.find("line 51") != std::string::npos);
  }
  SUBCASE("runtime failures exit with 1") {
    const auto r = call({"estimate", "--data", csv, "--basis", "legendre", "--n", "14", "--init", "0.2,0.08,0.03"});
    CHECK(r.code == 1);
    CHECK(r.err.find("ill-conditioned") != std::string::npos);
  }
  SUBCASE("csv output") {
    const auto r = call({"estimate", "--data", csv, "--init", "0.2,0.08,0.03", "--format", "csv"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("path_id,theta_1,theta_2,theta_3,objective,converged,failed,iters,wall_time\n", 0) == 0);
  }
  SUBCASE("single path selection") {
    CHECK(call({"estimate", "--data", csv, "--init", "0.2,0.08,0.03", "--path", "1"}).code == 0);
    CHECK(call({"estimate", "--data", csv, "--init", "0.2,0.08,0.03", "--path", "2"}).code == 2);
  }
}

TEST_CASE("configuration") {
  Workspace w;
  const auto csv = (w / "d.csv").string();
  REQUIRE(w.exec(kSim + " --format csv --out " + csv).code == 0);
  SUBCASE("file values with flag overrides") {
    std::ofstream(w / "ok.cfg") << "# estimate settings\nbasis = rbf\nn=3\ninit=0.2,0.08,0.03\ndata=" << csv << "\n";
    const auto a = call({"estimate", "--config", (w / "ok.cfg").string()});
    const auto b = call({"estimate", "--data", csv, "--init", "0.2,0.08,0.03"});
    REQUIRE(a.code == 0);
    const auto history = [](const Run& r) { return nlohmann::json::parse(r.out).at("history"); };
    CHECK(history(a) == history(b));
    const auto c = call({"estimate", "--config", (w / "ok.cfg").string(), "--init", "0.3,0.1,0.04"});
    REQUIRE(c.code == 0);
    CHECK(history(c) != history(a));
  }
  SUBCASE("unknown keys are rejected") {
    std::ofstream(w / "bad.cfg") << "bogus=1\n";
    const auto r = call({"estimate", "--config", (w / "bad.cfg").string(), "--data", csv, "--init", "1,1,1"});
    CHECK(r.code == 2);
    CHECK(r.err.find("bogus") != std::string::npos);
  }
  SUBCASE("referenced files must exist") {
    std::ofstream(w / "missing.cfg") << "data=" << (w / "nope.csv").string() << "\n";
    CHECK(call({"estimate", "--config", (w / "missing.cfg").string(), "--init", "1,1,1"}).code == 2);
    CHECK(call({"estimate", "--config", (w / "none.cfg").string(), "--init", "1,1,1"}).code == 2);
  }
  SUBCASE("bad values") {
    CHECK(call({"estimate", "--data", csv, "--init", "0.2,0.08"}).code == 2);
    CHECK(call({"estimate", "--data", csv, "--init", "0.2,x,0.03"}).code == 2);
    CHECK(call({"estimate", "--data", csv, "--init", "0.2,0.08,0.03", "--objective", "likelihood"}).code == 2);
    CHECK(call({"simulate", "--format", "xml"}).code == 2);
    CHECK(call({"simulate", "--T", "1"}).code == 2);
    CHECK(call({"frobnicate"}).code == 2);
    CHECK(call({}).code == 2);
  }
  SUBCASE("help") {
    const auto r = call({"estimate", "--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("--objective") != std::string::npos);
  }
}

TEST_CASE("experiment subcommands") {
  Workspace w;
  SUBCASE("bench on ingested data") {
    const auto csv = (w / "d.csv").string();
    REQUIRE(w.exec(kSim + " --format csv --out " + csv).code == 0);
    const auto r = call({"bench", "--data", csv, "--paths-out", (w / "paths.csv").string()});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("stats").at("n_paths").get<int>() == 2);
    CHECK(j.contains("reference_eml"));
    CHECK(slurp(w / "paths.csv").rfind("path_id,theta_1", 0) == 0);
  }
  SUBCASE("bench threads do not change the result") {
    const auto a = call({"bench", "--paths", "6", "--threads", "1", "--format", "csv"});
    const auto b = call({"bench", "--paths", "6", "--threads", "3", "--format", "csv"});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
  }
  SUBCASE("converge with plot data") {
    const auto r = call({"converge", "--replicates", "4", "--j", "0:1", "--plot-data", (w / "p.csv").string()});
    REQUIRE(r.code == 0);
    CHECK(slurp(w / "p.csv").rfind("j,T,param,rmse,bias,n_fail\n", 0) == 0);
    CHECK(nlohmann::json::parse(r.out).is_object());
  }
  SUBCASE("compare") {
    const auto r = call({"compare", "--paths", "3", "--j", "0", "--variants", "a=frobenius,b=constrained:hager-zhang",
                         "--format", "csv"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("\na,0,500,theta_1,") != std::string::npos);
    CHECK(r.out.find("\nb,0,500,theta_3,") != std::string::npos);
    CHECK(call({"compare", "--variants", "nolabel"}).code == 2);
  }
  SUBCASE("eigscan") {
    const auto r = call({"eigscan", "--T", "20001", "--n-values", "2:3", "--format", "csv"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("n,j,param,estimate,in_band,error\n", 0) == 0);
    CHECK(r.out.find("\n2,3,") == std::string::npos);
    CHECK(r.out.find("\n3,2,theta_1,") != std::string::npos);
  }
}
