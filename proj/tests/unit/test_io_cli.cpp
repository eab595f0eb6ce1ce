#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "msgd_lab/io.hpp"
#include "msgd_lab/optimizer.hpp"

using namespace msgd_lab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("msgd_lab_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const char* kConfig = R"({
  "spectrum": [4, 3, 2, 1],
  "mu": 0.9,
  "eta": 5e-4,
  "init": [0, 1, 0, 0],
  "horizon": 0,
  "seed": 1
})";

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int invoke(std::vector<std::string> args, std::string* out_text = nullptr) {
  std::vector<const char*> argv{"msgd-lab"};
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int rc = msgd_lab::cli::run(int(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str() + err.str();
  return rc;
}

}  // namespace

TEST_CASE("config round trip") {
  RunConfig c{Spectrum({4, 3, 2, 1})};
  c.mu = 0.9;
  c.eta = 5e-4;
  c.init = {0, 1, 0, 0};
  c.horizon = 40000;
  c.schedule = AnnealAt{20000, 0.1};
  c.sampler = RotatedScaledRademacher{9};
  CHECK(run_config_from_json(to_json(c)) == c);

  c.sampler = TruncatedGaussian{3.5};
  CHECK(run_config_from_json(json::parse(to_json(c).dump())) == c);

  Thresholds th{0.02, 0.005, 3, 0.4};
  auto back = thresholds_from_json(to_json(th), Thresholds{});
  CHECK(back.delta_sq == 0.02);
  CHECK(back.saddle_index == 3u);

  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(5e-4) == "5e-04");
}

TEST_CASE("strict parsing") {
  auto j = json::parse(kConfig);
  j["learning_rate"] = 1;
  try {
    run_config_from_json(j);
    FAIL("unknown field accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigParse);
    CHECK(std::string(e.what()).find("learning_rate") != std::string::npos);
  }

  auto k = json::parse(kConfig);
  k["mu"] = "fast";
  CHECK_THROWS_WITH_AS(run_config_from_json(k), doctest::Contains("mu"), Error);

  TempDir tmp;
  write(tmp.path / "bad.json", "{\n  \"mu\": 0.9,\n  \"eta\": \n}\n");
  try {
    read_json_file(tmp.path / "bad.json");
    FAIL("syntax error accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigParse);
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
}

TEST_CASE("csv and svg") {
  auto c = run_config_from_json(json::parse(kConfig));
  auto traj = run_trajectory(c, 1);
  auto csv = trajectory_csv(traj);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(csv.rfind("k,eta,h_1,h_2,h_3,h_4", 0) == 0);

  auto svg = svg_line_chart({{"a", {0, 1, 2}, {1, 0.1, 0.01}}}, ChartOptions{"t", "x", "y"});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("href") == std::string::npos);
  CHECK(svg.find("<script") == std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("cli simulate") {
  TempDir tmp;
  write(tmp.path / "c.json", kConfig);
  auto out = (tmp.path / "out").string();
  CHECK(invoke({"simulate", (tmp.path / "c.json").string(), "-o", out}) == 0);
  auto csv = slurp(fs::path(out) / "trajectory.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);

  // refuses to overwrite
  CHECK(invoke({"simulate", (tmp.path / "c.json").string(), "-o", out}) == 1);
  CHECK(invoke({"simulate", (tmp.path / "c.json").string(), "-o", out, "--force"}) == 0);

  CHECK(invoke({"simulate", (tmp.path / "c.json").string(), "-o", out, "--force", "--eta", "0.5",
             "--horizon", "1000"}) == 2);
  CHECK(invoke({"simulate", (tmp.path / "missing.json").string()}) == 1);
}

TEST_CASE("cli predict") {
  TempDir tmp;
  auto j = json::parse(kConfig);
  json doc{{"run", j}, {"thresholds", {{"delta_sq", 0.5}}}};
  write(tmp.path / "p.json", doc.dump());
  std::string text;
  CHECK(invoke({"predict", (tmp.path / "p.json").string(), "--json"}, &text) == 0);
  auto start = text.find('{');
  REQUIRE(start != std::string::npos);
  auto parsed = json::parse(text.substr(start));
  CHECK(parsed["T2"] == 0.0);

  CHECK(invoke({"predict", (tmp.path / "p.json").string(), "--strict"}) == 3);
  CHECK(invoke({"predict", (tmp.path / "p.json").string(), "--strict", "--eta", "1e-6"}) == 0);
}

TEST_CASE("cli validate") {
  TempDir tmp;
  std::string text;
  CHECK(invoke({"validate", "nonsense", "-o", tmp.path.string()}, &text) == 1);
  CHECK(invoke({"validate", "ode", "-o", (tmp.path / "v").string()}, &text) == 0);
  CHECK(text.find("PASS") != std::string::npos);
  CHECK(fs::exists(tmp.path / "v" / "report.json"));
}
