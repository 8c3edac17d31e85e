#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mos/cli.hpp"
#include "mos/config.hpp"

using namespace mos;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "mosctl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "mos_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const std::string& name, const Json& doc) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << doc.dump(2);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json reference(int nu0, int max_order, double snr) {
  return {{"reference",
           {{"n_samples", 64}, {"true_order", nu0}, {"max_order", max_order}, {"snr_db", snr}}}};
}

// quoted cells may contain commas and doubled quotes
std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c != '"') {
        cells.back() += c;
      } else if (i + 1 < line.size() && line[i + 1] == '"') {
        cells.back() += '"';
        ++i;
      } else {
        quoted = false;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back();
    } else {
      cells.back() += c;
    }
  }
  return cells;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("consistency ranges for equal SNRs") {
  const auto path = write_config("consistency.json", {{"scenario", reference(3, 5, 0.0)}});
  const Run r = run({"consistency", "--config", path});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("kappa_IR < 1\n") != std::string::npos);
  CHECK(r.out.find("kappa_I > 8.827\n") != std::string::npos);
  CHECK(r.out.find("# config_hash=") != std::string::npos);
}

TEST_CASE("mc at true order two with three candidates: p_e equals p_a") {
  const Json doc = {{"scenario", reference(2, 3, 0.0)},
                    {"criteria",
                     {{{"type", "gic"}}, {{"type", "pmep_ir"}, {"kappa", 0.25}},
                      {{"type", "pmep_i"}, {"kappa", 3}}, {{"type", "eef"}}}},
                    {"snr_grid_db", {-6, -2, 2}},
                    {"trials", 2000},
                    {"master_seed", 5}};
  const Run r = run({"mc", "--config", write_config("mc.json", doc)});
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 2 + 12);
  const auto header = split(rows[1]);
  REQUIRE(header.size() == 12);
  CHECK(header[5] == "p_e");
  CHECK(header[8] == "p_a");
  for (std::size_t i = 2; i < rows.size(); ++i) {
    const auto cells = split(rows[i]);
    REQUIRE(cells.size() == header.size());
    CHECK(cells[5] == cells[8]);
    CHECK(cells[6] == cells[9]);
    CHECK(cells[7] == cells[10]);
  }
}

TEST_CASE("synth is byte-for-byte reproducible") {
  const auto path = write_config("synth.json", {{"scenario", reference(3, 5, 0.0)},
                                                {"master_seed", 99}});
  const std::string a = (scratch_dir() / "synth_a.csv").string();
  const std::string b = (scratch_dir() / "synth_b.csv").string();
  REQUIRE(run({"synth", "--config", path, "--out", a}).code == 0);
  REQUIRE(run({"synth", "--config", path, "--out", b}).code == 0);
  const std::string ta = slurp(a);
  CHECK(ta == slurp(b));
  CHECK(lines(ta).size() == 2 + 64);
  REQUIRE(run({"synth", "--config", path, "--out", b, "--seed", "100"}).code == 0);
  CHECK(ta != slurp(b));
}

TEST_CASE("theory output matches the golden file") {
  const std::string data = MOS_TEST_DATA_DIR;
  const Run r = run({"theory", "--config", data + "/pinned_theory.json"});
  REQUIRE(r.code == 0);
  const auto got = lines(r.out);
  const auto want = lines(slurp(data + "/pinned_theory.csv"));
  REQUIRE(got.size() == want.size());
  CHECK(got[0] == want[0]);  // hash and seed
  CHECK(got[1] == want[1]);  // column names and order
  CHECK(got[1] == "snr_db,criterion,mode,p_a,error_estimate");
  for (std::size_t i = 2; i < got.size(); ++i) {
    const auto g = split(got[i]);
    const auto w = split(want[i]);
    REQUIRE(g.size() == w.size());
    CHECK(g[0] == w[0]);
    CHECK(g[1] == w[1]);
    CHECK(g[2] == w[2]);
    CHECK(std::stod(g[3]) == doctest::Approx(std::stod(w[3])).epsilon(1e-9));
  }
}

TEST_CASE("embedded config hash survives a round trip") {
  const Json doc = {{"scenario", reference(3, 5, 0.0)},
                    {"criteria", {{{"type", "pmep_ir"}, {"kappa", 0.25}}}},
                    {"snr_grid_db", {0, 4}},
                    {"master_seed", 11}};
  const Run r = run({"theory", "--config", write_config("hash.json", doc), "--format", "json"});
  REQUIRE(r.code == 0);
  const Json report = Json::parse(r.out);
  CHECK(report["seed"] == 11);
  CHECK(report["rows"].size() == 2);
  const Json embedded = report["config"];
  CHECK(hex64(config_hash(embedded)) == report["config_hash"].get<std::string>());
  CHECK(to_json(parse_config(embedded)) == embedded);

  // the reserialized config reproduces the report exactly
  const Run again = run({"theory", "--config", write_config("hash2.json", embedded), "--format",
                         "json"});
  REQUIRE(again.code == 0);
  CHECK(again.out == r.out);
}

TEST_CASE("config errors name the offending field") {
  Json doc = {{"scenario",
               {{"n_samples", 64},
                {"noise_level", 1.0},
                {"max_order", 2},
                {"components",
                 {{{"amplitude", 1.0}, {"frequency", 0.5}, {"phase", 0.0}, {"band", {0.4, 0.6}}},
                  {{"amplitude", 1.0}, {"frequency", 9.0}, {"phase", 0.0}, {"band", {1.0, 1.2}}}}}}}};
  const Run r = run({"theory", "--config", write_config("bad.json", doc)});
  CHECK(r.code == 2);
  CHECK(r.err.find("scenario.components[1].frequency") != std::string::npos);

  const Run missing = run({"theory", "--config", (scratch_dir() / "absent.json").string()});
  CHECK(missing.code == 2);
  const Run usage = run({"nonsense"});
  CHECK(usage.code == 1);
  CHECK(run({"theory"}).code == 1);  // --config is required
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("numeric failures carry a module tag") {
  // two tones a quarter bin apart violate the ML orthogonality assumption
  const Json doc = {
      {"scenario",
       {{"n_samples", 64},
        {"noise_level", 1.0},
        {"max_order", 2},
        {"components",
         {{{"amplitude", 1.0}, {"frequency", 1.0}, {"phase", 0.0}, {"band", {0.95, 1.01}}},
          {{"amplitude", 1.0}, {"frequency", 1.025}, {"phase", 0.3}, {"band", {1.01, 1.08}}}}}}},
      {"criteria", {{{"type", "gic"}}}},
      {"approach", {{"type", "ml"}}}};
  const Run r = run({"theory", "--config", write_config("ml.json", doc)});
  CHECK(r.code == 3);
  CHECK(r.err.find("error [theory]") != std::string::npos);
}
