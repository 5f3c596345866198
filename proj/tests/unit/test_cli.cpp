#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "anie/anie.hpp"
#include "anie/cli/commands.hpp"
#include "anie/cli/config.hpp"

namespace fs = std::filesystem;
using namespace anie;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "anie_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const fs::path& dir, const std::string& name, const std::string& body) {
  const auto path = dir / name;
  write_file_atomic(path, body);
  return path.string();
}

std::vector<std::string> lines(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("simulate is deterministic") {
  const auto dir = scratch("simulate");
  const auto a = run({"simulate", "--model", "er_blocks", "--nodes", "100", "--seed", "1",
                      "--out", (dir / "a").string()});
  const auto b = run({"simulate", "--model", "er_blocks", "--nodes", "100", "--seed", "1",
                      "--out", (dir / "b").string()});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  for (const char* f : {"events.csv", "events.json", "truth.json"}) {
    CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));
  }
  const auto c = run({"simulate", "--model", "er_blocks", "--nodes", "100", "--seed", "2",
                      "--out", (dir / "c").string()});
  CHECK(read_file(dir / "a" / "events.csv") != read_file(dir / "c" / "events.csv"));
}

TEST_CASE("simulate with zero rates writes an empty stream") {
  const auto dir = scratch("zero");
  const auto cfg = write_config(
      dir, "sim.json",
      R"({"model":"dsbm","n_nodes":4,"seed":3,"params":{"lambda_intra":0,"lambda_inter":0}})");
  REQUIRE(run({"simulate", "--config", cfg, "--out", dir.string()}).code == 0);
  CHECK(lines(dir / "events.csv") == std::vector<std::string>{"u,v,t"});
}

TEST_CASE("usage errors") {
  CHECK(run({"simulate", "--out", scratch("usage").string()}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"fit", "--no-such-flag"}).code == 2);
  const auto dir = scratch("usage2");
  const auto bad = write_config(dir, "bad.json", R"({"model":"dsbm","n_nodes":4,"colour":1})");
  CHECK(run({"simulate", "--config", bad}).code == 2);
  const auto broken = write_config(dir, "broken.json", "{not json");
  CHECK(run({"simulate", "--config", broken}).code == 2);
  CHECK(run({"fit", "--input", "x.csv", "--rank", "2", "--alpha", "1.5"}).code == 2);
}

TEST_CASE("config validation") {
  const auto& fit = cli::schema_for("fit");
  CHECK_NOTHROW(cli::validate(nlohmann::json{{"input", "a.csv"}, {"rank", 2}}, fit));
  CHECK_THROWS_AS(cli::validate(nlohmann::json{{"rank", 2}}, fit), ParameterError);
  CHECK_THROWS_AS(cli::validate(nlohmann::json{{"input", "a"}, {"rank", "two"}}, fit),
                  ParameterError);
  CHECK_THROWS_AS(cli::validate(nlohmann::json{{"input", "a"}, {"rank", 0}}, fit), ParameterError);
  CHECK_THROWS_AS(cli::validate(nlohmann::json{{"input", "a"}, {"rank", 1}, {"alpha", -0.1}}, fit),
                  ParameterError);
  CHECK_THROWS_AS(
      cli::validate(nlohmann::json{{"input", "a"}, {"rank", 1}, {"dataset", "lfr"}}, fit),
      ParameterError);
  CHECK_THROWS_AS(cli::schema_for("plot"), ParameterError);
  for (const auto& name : cli::schema_commands()) {
    const auto r = run({"schema", name});
    CHECK(r.code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc.at("additionalProperties") == false);
    CHECK(doc.at("properties").size() == cli::schema_for(name).fields.size());
  }
}

TEST_CASE("fit artifacts are byte-identical across runs") {
  const auto dir = scratch("determinism");
  REQUIRE(run({"simulate", "--model", "dsbm", "--nodes", "60", "--seed", "5", "--out",
               dir.string()})
              .code == 0);
  const auto events = (dir / "events.csv").string();
  for (const char* out : {"a", "b"}) {
    REQUIRE(run({"fit", "--input", events, "--rank", "2", "--levels", "5", "--seed", "9",
                 "--out", (dir / out).string()})
                .code == 0);
  }
  for (const char* f : {"subspace.csv", "scree.csv", "affinity.json", "mask.json", "manifest.json"}) {
    CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));
  }
  const auto manifest = nlohmann::json::parse(read_file(dir / "a" / "manifest.json"));
  CHECK(manifest.at("config").at("seed") == 9);
  CHECK(manifest.at("basis").at("J") == 5);
}

TEST_CASE("fit on an empty stream") {
  const auto dir = scratch("empty");
  write_file_atomic(dir / "events.csv", "u,v,t\n");
  write_file_atomic(dir / "events.json", R"({"n_nodes":5,"horizon":1.0,"directed":true})");
  REQUIRE(run({"fit", "--input", (dir / "events.csv").string(), "--rank", "1", "--levels", "3",
               "--out", (dir / "fit").string()})
              .code == 0);
  const auto mask = nlohmann::json::parse(read_file(dir / "fit" / "mask.json"));
  CHECK(mask.at("significant") == 0);
  const auto model = cli::load_bundle(dir / "fit");
  for (const auto& S : model.affinity().S_hat) CHECK(S.isZero(0.0));

  REQUIRE(run({"anomaly", "--model", (dir / "fit").string(), "--out", (dir / "an").string()})
              .code == 0);
  const auto rows = lines(dir / "an" / "anomaly.csv");
  CHECK(rows.size() == 1 + 1 + 2 + 4);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].substr(rows[i].rfind(',') + 1) == "0");
  }
}

TEST_CASE("DSBM fit: merge coefficients are significant and alpha = 0 is constant") {
  const auto dir = scratch("dsbm");
  int hits = 0;
  for (int seed = 1; seed <= 3; ++seed) {
    const auto sim = dir / ("sim" + std::to_string(seed));
    REQUIRE(run({"simulate", "--model", "dsbm", "--nodes", "100", "--seed", std::to_string(seed),
                 "--out", sim.string()})
                .code == 0);
    const auto out = dir / ("fit" + std::to_string(seed));
    REQUIRE(run({"fit", "--input", (sim / "events.csv").string(), "--rank", "2", "--levels", "6",
                 "--alpha", "0.05", "--seed", std::to_string(seed), "--out", out.string()})
                .code == 0);
    const auto model = cli::load_bundle(out);
    const auto& mask = model.affinity().mask;
    // psi_{1,1} splits [0.5, 1) at 0.75: exactly the merge window against the rest.
    if (mask[static_cast<std::size_t>(haar_index(1, 1))].sum() > 0) ++hits;

    const auto raw = run({"anomaly", "--model", out.string(), "--source", "raw", "--out",
                          (dir / ("raw" + std::to_string(seed))).string()});
    const auto thr = run({"anomaly", "--model", out.string(), "--out",
                          (dir / ("thr" + std::to_string(seed))).string()});
    REQUIRE(raw.code == 0);
    REQUIRE(thr.code == 0);
    const auto r = multiscale_score(model.affinity(), model.basis(), ScoreSource::raw);
    const auto t = multiscale_score(model.affinity(), model.basis(), ScoreSource::thresholded);
    for (int j = 0; j < r.levels(); ++j) {
      for (std::size_t k = 0; k < r.scores[j].size(); ++k) CHECK(r.scores[j][k] >= t.scores[j][k]);
    }
    // Coarsest level with cells of width 0.25 inside the score: level 1 halves.
    const auto& level1 = t.scores[1];
    CHECK(level1[1] > level1[0]);

    if (seed == 1) {
      const auto zero = dir / "alpha0";
      REQUIRE(run({"fit", "--input", (sim / "events.csv").string(), "--rank", "2", "--levels",
                   "6", "--alpha", "0", "--out", zero.string()})
                  .code == 0);
      const auto flat = cli::load_bundle(zero);
      std::int64_t significant = 0;
      for (std::size_t b = 1; b < flat.affinity().mask.size(); ++b) {
        significant += flat.affinity().mask[b].sum();
      }
      CHECK(significant == 0);
      CHECK(nlohmann::json::parse(read_file(zero / "mask.json")).at("significant") == 0);
      std::vector<double> grid;
      for (int i = 0; i < 256; ++i) grid.push_back(i / 255.0);
      const auto values = flat.evaluate_grid(pair_patch(100, 10), grid);
      for (Eigen::Index p = 0; p < values.rows(); ++p) {
        CHECK(values.row(p).maxCoeff() - values.row(p).minCoeff() < 1e-12);
      }
    }
  }
  CHECK(hits >= 2);
}

TEST_CASE("eval") {
  const auto dir = scratch("eval");
  REQUIRE(run({"simulate", "--model", "dsbm", "--nodes", "40", "--seed", "2", "--out",
               dir.string()})
              .code == 0);
  REQUIRE(run({"fit", "--input", (dir / "events.csv").string(), "--rank", "2", "--levels", "4",
               "--out", (dir / "fit").string()})
              .code == 0);
  const auto r = run({"eval", "--truth", (dir / "truth.json").string(), "--model",
                      (dir / "fit").string(), "--out", (dir / "ev").string()});
  REQUIRE(r.code == 0);
  const auto metrics = nlohmann::json::parse(read_file(dir / "ev" / "metrics.json"));
  CHECK(metrics.at("mise").get<double>() > 0.0);
  CHECK(metrics.at("subspace_error").get<double>() >= 0.0);
  CHECK(metrics.at("baselines").at("hist").at("bins") == 64);
  CHECK(metrics.at("baselines").at("kde").at("bandwidth") == 0.05);
  CHECK(nlohmann::json::parse(r.out) == metrics);

  const auto truth = truth_from_json(read_file(dir / "truth.json"));
  const auto patch = pair_patch(truth.n_nodes);
  CHECK(mise(evaluator(truth), evaluator(truth), patch, 256) == 0.0);

  write_file_atomic(dir / "bad_truth.json", R"({"model":"dsbm","n_nodes":"many"})");
  CHECK(run({"eval", "--truth", (dir / "bad_truth.json").string(), "--model",
             (dir / "fit").string(), "--out", (dir / "ev2").string()})
            .code == 3);
  CHECK(run({"eval", "--model", (dir / "fit").string()}).code == 2);
}

TEST_CASE("numeric failures map to exit code 4") {
  const auto dir = scratch("numeric");
  write_file_atomic(dir / "events.csv", "u,v,t\n0,1,0.5\n");
  const auto cfg = write_config(
      dir, "fit.json",
      R"({"input":")" + (dir / "events.csv").generic_string() +
          R"(","rank":1,"basis":{"kind":"custom","grid":[0,1],"values":[[1,1],[2,2]]}})");
  CHECK(run({"fit", "--config", cfg, "--out", (dir / "fit").string()}).code == 4);
}
