#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "subkalman/cli.hpp"
#include "support.hpp"

using namespace subkalman;
using nlohmann::json;
namespace fs = std::filesystem;
using test::TempDir;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

json base_config(const fs::path& out) {
  return json{{"version", 1},
              {"seed", 3},
              {"trials", 1},
              {"horizon", 120},
              {"pulls_per_arm", 5},
              {"output", out.string()},
              {"env", {{"kind", "synthetic_linear"}, {"state_dim", 3}, {"num_actions", 3}}},
              {"agents", json::array({{{"kind", "linear_ts"}, {"label", "lts"}}})}};
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path save(const TempDir& dir, const json& cfg, const std::string& name = "config.json") {
  const fs::path p = dir.path() / name;
  write_text(p, cfg.dump(2));
  return p;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    rows.push_back(fields);
  }
  return rows;
}

}  // namespace

TEST_CASE("run writes a summary row per trial and a trace per seed") {
  TempDir dir("cli_run");
  const auto cfg = save(dir, base_config(dir.path() / "out"));
  const auto r = run({"run", "--config", cfg.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("lts: cum_reward") != std::string::npos);
  const auto rows = read_csv(dir.path() / "out" / "summary.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].size() == 9);
  CHECK(rows[1][0] == "lts");
  CHECK(rows[1][2] == "3");
  CHECK(fs::exists(dir.path() / "out" / "traces" / "lts_seed3.jsonl"));

  const auto first = slurp(dir.path() / "out" / "summary.csv");
  const auto trace = slurp(dir.path() / "out" / "traces" / "lts_seed3.jsonl");
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 120);
  REQUIRE(run({"run", "--config", cfg.string()}).code == 0);
  CHECK(slurp(dir.path() / "out" / "summary.csv") == first);
  CHECK(slurp(dir.path() / "out" / "traces" / "lts_seed3.jsonl") == trace);
}

TEST_CASE("command-line overrides") {
  TempDir dir("cli_override");
  const auto cfg = save(dir, base_config(dir.path() / "out"));
  const auto other = dir.path() / "elsewhere";
  const auto r = run({"run", "--config", cfg.string(), "--seed", "10", "--trials", "3", "--out", other.string()});
  REQUIRE(r.code == 0);
  const auto rows = read_csv(other / "summary.csv");
  REQUIRE(rows.size() == 4);
  CHECK(rows[1][2] == "10");
  CHECK(rows[3][2] == "12");
  CHECK(r.out.find("over 3 trials") != std::string::npos);
  CHECK_FALSE(fs::exists(dir.path() / "out"));

  const auto timed = run({"run", "--config", cfg.string(), "--timing", "--out", other.string()});
  REQUIRE(timed.code == 0);
  CHECK(read_csv(other / "summary.csv").size() == 2);
}

TEST_CASE("compare shares states across agents") {
  TempDir dir("cli_compare");
  auto doc = base_config(dir.path() / "out");
  doc["horizon"] = 400;
  doc["trials"] = 2;
  doc["env"] = {{"kind", "synthetic_classification"}, {"rows", 400}};
  doc["agents"] = json::array({{{"kind", "oracle"}}, {{"kind", "random"}}});
  const auto r = run({"compare", "--config", save(dir, doc).string()});
  REQUIRE(r.code == 0);

  const auto rows = read_csv(dir.path() / "out" / "summary.csv");
  REQUIRE(rows.size() == 5);
  std::map<std::string, std::vector<double>> reward, post_warmup;
  std::map<std::string, std::string> hash;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    reward[rows[i][0]].push_back(std::stod(rows[i][3]));
    post_warmup[rows[i][0]].push_back(std::stod(rows[i][7]));
    const std::string key = rows[i][2];
    if (hash.count(key)) {
      CHECK(hash[key] == rows[i][8]);
    } else {
      hash[key] = rows[i][8];
    }
  }
  CHECK(hash.size() == 2);
  // 7 arms x 5 warmup pulls leave 365 decisions.
  for (double v : post_warmup["oracle"]) CHECK(v == 365.0);
  for (double v : reward["random"]) CHECK(std::abs(v - 400.0 / 7.0) < 35.0);

  const std::string svg = slurp(dir.path() / "out" / "compare.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  const std::regex group(R"re(<g class="bar-group" data-label="([^"]+)">)re");
  std::vector<std::string> labels;
  for (std::sregex_iterator it(svg.begin(), svg.end(), group), end; it != end; ++it) labels.push_back((*it)[1]);
  CHECK(labels == std::vector<std::string>{"oracle", "random"});
  const std::regex whisker(R"(<line class="whisker")");
  CHECK(std::distance(std::sregex_iterator(svg.begin(), svg.end(), whisker), std::sregex_iterator()) == 2);

  doc["agents"] = json::array({{{"kind", "random"}}});
  CHECK(run({"compare", "--config", save(dir, doc).string()}).code == 2);
}

TEST_CASE("sweep-dim runs both subspace kinds") {
  TempDir dir("cli_sweep");
  auto doc = base_config(dir.path() / "out");
  doc["horizon"] = 80;
  doc["pulls_per_arm"] = 3;
  doc["env"] = {{"kind", "synthetic_nonlinear"}, {"state_dim", 3}, {"num_actions", 2}};
  doc["agents"] = json::array({{{"kind", "ekf_ts"}, {"hidden", {6}}, {"epochs", 3}}});
  const auto cfg = save(dir, doc);
  const auto r = run({"sweep-dim", "--config", cfg.string(), "--dims", "4"});
  REQUIRE(r.code == 0);
  const auto rows = read_csv(dir.path() / "out" / "sweep.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"d", "kind", "mean", "std"});
  CHECK(rows[1][0] == "4");
  CHECK(rows[1][1] == "svd");
  CHECK(rows[2][1] == "random");
  const std::string svg = slurp(dir.path() / "out" / "sweep.svg");
  CHECK(svg.find(R"(<polyline class="series" data-label="svd")") != std::string::npos);
  CHECK(svg.find(R"(<polyline class="series" data-label="random")") != std::string::npos);

  // 3 inputs, 6 hidden units and 2 heads give 38 weights.
  const auto big = run({"sweep-dim", "--config", cfg.string(), "--dims", "4,39"});
  CHECK(big.code == 2);
  CHECK(big.err.find("DimensionError") != std::string::npos);
  CHECK(run({"sweep-dim", "--config", cfg.string(), "--dims", "4,x"}).code == 2);
  CHECK(run({"sweep-dim", "--config", cfg.string()}).code == 2);
}

TEST_CASE("configuration errors name the field") {
  TempDir dir("cli_config");
  auto expect_field = [&](json doc, const std::string& field) {
    CAPTURE(field);
    const auto r = run({"run", "--config", save(dir, doc).string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("ConfigError: " + field) != std::string::npos);
  };
  const auto base = base_config(dir.path() / "out");

  auto doc = base;
  doc.erase("horizon");
  expect_field(doc, "horizon");
  doc = base;
  doc["version"] = 2;
  expect_field(doc, "version");
  doc = base;
  doc["horizon"] = 15;  // equal to the warmup length
  expect_field(doc, "horizon");
  doc = base;
  doc["env"]["kind"] = "mystery";
  expect_field(doc, "env.kind");
  doc = base;
  doc["env"]["noise_std"] = "loud";
  expect_field(doc, "env.noise_std");
  doc = base;
  doc["agents"][0]["kind"] = "bogus";
  expect_field(doc, "agents[0].kind");
  doc = base;
  doc["agents"][0]["learning_rate"] = 0.1;
  expect_field(doc, "agents[0].learning_rate");
  doc = base;
  doc["agents"] = json::array({{{"kind", "ekf_ts"}, {"mode", "sideways"}}});
  expect_field(doc, "agents[0].mode");
  doc = base;
  doc["agents"] = json::array({{{"kind", "neural_ts"}, {"head", "multi_head"}}});
  expect_field(doc, "agents[0].head");
  doc = base;
  doc["agents"] = json::array({{{"kind", "random"}}, {{"kind", "random"}}});
  expect_field(doc, "agents[1].label");
  doc = base;
  doc["surprise"] = true;
  expect_field(doc, "surprise");

  const auto missing = run({"run", "--config", (dir.path() / "absent.json").string()});
  CHECK(missing.code == 2);
  write_text(dir.path() / "broken.json", "{\"version\": 1,");
  CHECK(run({"run", "--config", (dir.path() / "broken.json").string()}).code == 2);
  CHECK(run({"run"}).code == 2);
  CHECK(run({"launch"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("data errors exit with code 3") {
  TempDir dir("cli_data");
  auto doc = base_config(dir.path() / "out");
  const auto csv = dir.path() / "missing.csv";
  doc["env"] = {{"kind", "csv"}, {"path", csv.string()}};
  const auto r = run({"run", "--config", save(dir, doc).string()});
  CHECK(r.code == 3);
  CHECK(r.err.find(csv.string()) != std::string::npos);

  write_text(csv, "a,b,label\n1,2,0\n1,oops,1\n");
  const auto bad = run({"run", "--config", save(dir, doc).string()});
  CHECK(bad.code == 3);
  CHECK(bad.err.find("SchemaError") != std::string::npos);

  // A relative data path resolves against the config's directory.
  std::string rows = "a,b,label\n";
  for (int i = 0; i < 200; ++i) rows += std::to_string(i % 7) + "," + std::to_string(i % 3) + "," + std::to_string(i % 2) + "\n";
  write_text(dir.path() / "good.csv", rows);
  doc["env"] = {{"kind", "csv"}, {"path", "good.csv"}};
  CHECK(run({"run", "--config", save(dir, doc).string()}).code == 0);
}

TEST_CASE("ingest reports dataset sizes") {
  TempDir dir("cli_ingest");
  write_text(dir.path() / "toy.csv", "x,y,label\n0,1,0\n1,0,1\n2,2,4\n");
  const auto r = run({"ingest", (dir.path() / "toy.csv").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("3 rows, 2 feature columns, 5 classes") != std::string::npos);

  write_text(dir.path() / "bad.data", "1\t2\t3\t4\nnot a line\n");
  const auto bad = run({"ingest", "--kind", "movielens", (dir.path() / "bad.data").string()});
  CHECK(bad.code == 3);
  CHECK(bad.err.find("bad.data:2") != std::string::npos);
  CHECK(run({"ingest", "--kind", "parquet", "x"}).code == 2);
}

TEST_CASE("MovieLens through the tool" * doctest::skip(!fs::exists(SUBKALMAN_MOVIELENS))) {
  const auto ml = run({"ingest", "--kind", "movielens", SUBKALMAN_MOVIELENS});
  CHECK(ml.code == 0);
  CHECK(ml.out.find("100000 ratings, 943 users, 1682 items") != std::string::npos);

  TempDir dir("cli_movielens");
  auto doc = base_config(dir.path() / "out");
  doc["pulls_per_arm"] = 2;
  doc["env"] = {{"kind", "movielens"}, {"path", SUBKALMAN_MOVIELENS}, {"rank", 50}};
  CHECK(run({"run", "--config", save(dir, doc).string()}).code == 3);
  doc["env"]["rank"] = 10;
  CHECK(run({"run", "--config", save(dir, doc).string()}).code == 0);
}

TEST_CASE("SVG charts are well formed") {
  const auto bars = cli::svg_bar_chart("A & B", "reward", {{"x<1>", 3.0, 1.0}, {"y", 5.0, 0.0}});
  CHECK(bars.find("viewBox=\"0 0 800 500\"") != std::string::npos);
  CHECK(bars.find("A &amp; B") != std::string::npos);
  CHECK(bars.find("data-label=\"x&lt;1&gt;\"") != std::string::npos);
  CHECK(bars.find("<g class=\"bar-group\"") != std::string::npos);
  CHECK(bars.substr(bars.size() - 7) == "</svg>\n");

  const auto lines = cli::svg_line_chart("t", "d", "r", {{"svd", {1, 2}, {3, 4}}, {"random", {1, 2}, {2, 5}}});
  std::size_t opened = 0, closed = 0;
  for (std::size_t p = lines.find('<'); p != std::string::npos; p = lines.find('<', p + 1)) {
    if (lines.compare(p, 2, "</") == 0) {
      ++closed;
    } else if (lines.compare(p, 5, "<?xml") != 0) {
      const auto end = lines.find('>', p);
      if (lines[end - 1] != '/') ++opened;
    }
  }
  CHECK(opened == closed);
  CHECK(lines.find("points=") != std::string::npos);
}

TEST_CASE("the installed tool reports exit codes") {
  TempDir dir("cli_tool");
  const auto cfg = save(dir, base_config(dir.path() / "out"));
  auto status = [&](const std::string& args) {
    const std::string cmd = std::string(SUBKALMAN_TOOL) + " " + args + " > " +
                            (dir.path() / "stdout.txt").string() + " 2> " + (dir.path() / "stderr.txt").string();
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status("run --config " + cfg.string()) == 0);
  CHECK(fs::exists(dir.path() / "out" / "summary.csv"));
  CHECK(status("run --config " + (dir.path() / "nope.json").string()) == 2);
  CHECK(slurp(dir.path() / "stderr.txt").find("nope.json") != std::string::npos);
  CHECK(status("ingest " + (dir.path() / "nope.csv").string()) == 3);
  CHECK(status("--help") == 0);
  CHECK(slurp(dir.path() / "stdout.txt").find("sweep-dim") != std::string::npos);
}
