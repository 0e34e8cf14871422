#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "itedist/benchmark.hpp"
#include "itedist/cli.hpp"
#include "itedist/error.hpp"

using namespace itedist;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "itedist");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("itedist_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Benchmark sample with a fair-coin covariate column g.
fs::path benchmark_csv(std::size_t n) {
  const fs::path p = workdir() / ("dgp_" + std::to_string(n) + ".csv");
  if (!fs::exists(p)) {
    const auto r = run({"simulate", "--study", "dgp", "--n", std::to_string(n), "--seed", "3",
                        "--split-covariate", "--output", p.string()});
    REQUIRE(r.code == 0);
  }
  return p;
}

}  // namespace

TEST_CASE("resolve fills defaults and validates") {
  const auto a = cli::resolve("analyze", {{"input", "x.csv"}});
  CHECK(a.alpha == 0.05);
  CHECK(a.bootstrap == 500);
  CHECK(a.grid_size == 161);
  CHECK(a.tau_range == cli::Range{0.1, 0.9});
  CHECK(a.format == "json");
  CHECK(a.wants("prob-positive"));
  CHECK_FALSE(a.wants("cdf"));

  const auto t4 = cli::resolve("simulate", {{"study", "table4"}, {"tau-range", "0.2,0.8"}});
  CHECK(t4.grid_size == 61);
  CHECK(t4.n == 500);
  CHECK(t4.bootstrap == 200);
  const auto t2 = cli::resolve("simulate", {{"study", "table2"}});
  CHECK(t2.grid_size == 393);

  CHECK_THROWS_AS(cli::resolve("analyze", {{"input", "x"}, {"alpha", "1.5"}}), ConfigError);
  CHECK_THROWS_AS(cli::resolve("analyze", {{"input", "x"}, {"bootstrap", "1"}}), ConfigError);
  CHECK_THROWS_AS(cli::resolve("analyze", {{"input", "x"}, {"report", "tests"}}), ConfigError);
  CHECK_THROWS_AS(cli::resolve("analyze", {{"input", "x"}, {"band", "wide"}}), ConfigError);
  CHECK_THROWS_AS(cli::resolve("analyze", {{"input", "x"}, {"reps", "3"}}), ConfigError);
  CHECK_THROWS_AS(cli::resolve("analyze", {}), ConfigError);
  CHECK_THROWS_AS(cli::resolve("simulate", {{"study", "table1"}, {"reps", "0"}}), ConfigError);
  CHECK_THROWS_AS(cli::resolve("simulate", {{"study", "table9"}}), ConfigError);
  CHECK_THROWS_AS(cli::resolve("oracle", {}), ConfigError);
  CHECK_THROWS_AS(cli::resolve("oracle", {{"tau", "1.2"}}), ConfigError);
  CHECK_THROWS_AS(cli::resolve("oracle", {{"v", "4.5"}}), ConfigError);
  CHECK_THROWS_AS(cli::resolve("compare", {{"input", "x"}, {"group0", "g=0"}}), ConfigError);
}

TEST_CASE("config files") {
  const fs::path p = workdir() / "run.conf";
  {
    std::ofstream out(p);
    out << "# analysis settings\n--alpha = 0.1\nbootstrap=50\n\ninput = data.csv  # trailing\n";
  }
  const auto s = cli::load_config(p.string());
  CHECK(s.at("alpha") == "0.1");
  CHECK(s.at("bootstrap") == "50");
  CHECK(s.at("input") == "data.csv");

  const fs::path j = workdir() / "run.json";
  {
    std::ofstream out(j);
    out << R"({"reproducibility": {"command": "oracle", "tau": [0.5, 0.25], "format": "csv"}})";
  }
  const auto js = cli::load_config(j.string());
  CHECK(js.at("tau") == "0.5,0.25");
  CHECK_THROWS_AS(cli::resolve("analyze", js), ConfigError);  // written for another command
  CHECK_THROWS_AS(cli::load_config((workdir() / "absent.conf").string()), ConfigError);
}

TEST_CASE("oracle command") {
  const auto r = run({"oracle", "--tau", "0.5", "--v", "4", "--y", "2.25,6"});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["schema"] == kReportSchema);
  const auto& rows = doc["oracle"];
  CHECK(rows[0]["values"]["quantile"] == 1.125);
  CHECK(rows[0]["values"]["v1_tilde"] == 3.515625);
  CHECK(rows[1]["values"]["cdf"] == 1.0);
  CHECK(rows[2]["values"]["phi1"].get<double>() == doctest::Approx(3.375).epsilon(1e-15));
  CHECK(rows[3]["values"]["phi1"].is_null());

  const auto bad = run({"oracle", "--tau", "0"});
  CHECK(bad.code == cli::kExitConfig);
  const auto err = nlohmann::json::parse(bad.err.substr(0, bad.err.find('\n')));
  CHECK(err["status"] == "error");
  CHECK(err["error"]["kind"] == "config");
}

TEST_CASE("analyze on a benchmark export") {
  const fs::path data = benchmark_csv(1000);
  const fs::path out = workdir() / "analyze.json";
  const auto r = run({"analyze", "--input", data.string(), "--report", "prob-positive", "--bootstrap",
                      "200", "--output", out.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  const auto doc = nlohmann::json::parse(slurp(out));
  REQUIRE(doc["intervals"].size() == 1);
  const auto& pp = doc["intervals"][0];
  CHECK(pp["target"] == "prob_positive");
  CHECK(pp["lower"].get<double>() >= 0.85);
  CHECK(pp["upper"].get<double>() <= 1.0);
  CHECK(doc["metadata"]["n"]["group"] == 1000);
  CHECK_FALSE(doc["metadata"].contains("wall_seconds"));
}

TEST_CASE("reproducibility block regenerates the same bytes") {
  const fs::path data = benchmark_csv(300);
  const fs::path first = workdir() / "first.json";
  const fs::path second = workdir() / "second.json";
  REQUIRE(run({"analyze", "--input", data.string(), "--covariate-cols", "g", "--group", "g=1",
               "--report", "quantile,iqr,cdf,bands", "--tau", "0.25,0.5", "--v", "1,2",
               "--bootstrap", "50", "--seed", "17", "--band", "variable", "--grid-size", "21",
               "--output", first.string()})
              .code == 0);
  REQUIRE(run({"analyze", "--config", first.string(), "--output", second.string(), "--threads", "3"}).code == 0);
  CHECK(slurp(first) == slurp(second));

  // Flags override config values.
  const fs::path third = workdir() / "third.json";
  REQUIRE(run({"analyze", "--config", first.string(), "--seed", "18", "--output", third.string()}).code == 0);
  CHECK(slurp(first) != slurp(third));
  CHECK(nlohmann::json::parse(slurp(third))["reproducibility"]["seed"] == "18");
}

TEST_CASE("compare command") {
  const fs::path data = benchmark_csv(400);
  const auto same = run({"compare", "--input", data.string(), "--covariate-cols", "g", "--group0",
                         "g=0", "--group1", "g<1"});
  CHECK(same.code == cli::kExitConfig);

  const auto r = run({"compare", "--input", data.string(), "--covariate-cols", "g", "--group0", "g=0",
                      "--group1", "g=1", "--bootstrap", "60", "--tau", "0.25,0.75"});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["tests"].size() == 3);
  CHECK(doc["intervals"].size() == 3);
  CHECK(doc["bands"][0]["target"] == "quantile_difference");
  CHECK(doc["metadata"]["n"]["group0"].get<int>() + doc["metadata"]["n"]["group1"].get<int>() == 400);

  const auto csv = run({"compare", "--input", data.string(), "--covariate-cols", "g", "--group0",
                        "g=0", "--group1", "g=1", "--bootstrap", "20", "--format", "csv"});
  REQUIRE(csv.code == 0);
  CHECK(csv.out.rfind("section,target,kind,at,estimate,lower,upper,critical_value,reject\n", 0) == 0);
  CHECK(csv.out.find("\ntest,equality,") != std::string::npos);
}

TEST_CASE("exit codes name the failure") {
  const fs::path missing = workdir() / "missing.csv";
  CHECK(run({"analyze", "--input", missing.string()}).code == cli::kExitIngest);

  const fs::path bad = workdir() / "bad.csv";
  {
    std::ofstream out(bad);
    out << "y,d,z\n1,1,1\n2,3,0\n";
  }
  CHECK(run({"analyze", "--input", bad.string()}).code == cli::kExitIngest);

  const fs::path thin = workdir() / "thin.csv";
  {
    std::ofstream out(thin);
    out << "y,d,z\n1,1,1\n2,0,0\n3,1,1\n";
  }
  CHECK(run({"analyze", "--input", thin.string()}).code == cli::kExitEstimability);
  CHECK(run({"analyze", "--input", thin.string(), "--alpha", "1.5"}).code == cli::kExitConfig);
  CHECK(run({"analyze", "--bogus"}).code == cli::kExitConfig);
  CHECK(run({"simulate", "--study", "table1", "--reps", "0"}).code == cli::kExitConfig);
}

TEST_CASE("401(k)-style layout") {
  const fs::path p = workdir() / "k401.csv";
  {
    Stream stream(91);
    const auto g = bench::generate(600, stream);
    std::ofstream out(p);
    out << "net_tfa,p401,e401,inc_q,fsize,married\n";
    for (std::size_t i = 0; i < g.sample.size(); ++i) {
      out << g.sample.y(i) << ',' << g.sample.d(i) << ',' << g.sample.z(i) << ','
          << (i % 2 ? "low" : "high") << ',' << 1 + i % 3 << ',' << i % 2 << '\n';
    }
  }
  const fs::path out = workdir() / "k401.json";
  const auto r = run({"analyze", "--input", p.string(), "--outcome-col", "net_tfa", "--treatment-col",
                      "p401", "--iv-col", "e401", "--covariate-cols", "inc_q,fsize", "--bootstrap", "40",
                      "--min-per-group", "60", "--output", out.string()});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(slurp(out));
  std::vector<std::string> targets;
  for (const auto& i : doc["intervals"]) targets.push_back(i["target"]);
  CHECK(targets == std::vector<std::string>{"prob_positive", "quantile", "iqr"});
  CHECK(doc["metadata"]["cells"]["group"].size() == 6);
  CHECK(doc["metadata"]["labels"]["inc_q"]["high"] == 0);
  CHECK(fs::exists(out.string() + ".labels.json"));
  CHECK(r.err.find("warning") != std::string::npos);  // small cells are flagged

  const auto split = run({"compare", "--input", p.string(), "--outcome-col", "net_tfa", "--treatment-col",
                          "p401", "--iv-col", "e401", "--covariate-cols", "inc_q,fsize", "--group0",
                          "fsize<=2", "--group1", "fsize>2", "--bootstrap", "40"});
  CHECK(split.code == 0);
}

TEST_CASE("simulate writes table layouts") {
  const auto r = run({"simulate", "--study", "table1", "--v", "2", "--n", "150", "--levels", "0.95",
                      "--reps", "6", "-B", "20"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string header, bp, nai, extra;
  std::getline(lines, header);
  std::getline(lines, bp);
  std::getline(lines, nai);
  CHECK(header == "target,at,range_lower,range_upper,n,method,cp_0.95,length_0.95,mc_se_0.95,reps,failures,B,redraws");
  CHECK(bp.rfind("cdf,2,2,2,150,BP,", 0) == 0);
  CHECK(nai.rfind("cdf,2,2,2,150,NAI,", 0) == 0);
  CHECK_FALSE(std::getline(lines, extra));

  const auto fig = run({"simulate", "--study", "figure1", "--grid-size", "5"});
  REQUIRE(fig.code == 0);
  CHECK(fig.out.rfind("tau,v1_tilde,v2_tilde,v_q\n0.1,", 0) == 0);
}
