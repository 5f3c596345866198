#include "anie/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "anie/anie.hpp"
#include "anie/cli/config.hpp"

#ifndef ANIE_VERSION
#define ANIE_VERSION "0.0.0"
#endif

namespace anie::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename T>
T get_or(const json& config, const char* key, T fallback) {
  return config.contains(key) ? config.at(key).get<T>() : fallback;
}

fs::path output_dir(const json& config) {
  fs::path dir = get_or<std::string>(config, "out", ".");
  fs::create_directories(dir);
  return dir;
}

std::string dump(const ordered_json& doc) { return doc.dump(2) + "\n"; }

int default_levels(const std::string& dataset) { return dataset == "er_blocks" ? 8 : 6; }

LoadOptions load_options(const json& config) {
  LoadOptions opts;
  if (config.contains("n_nodes")) opts.n_nodes = config.at("n_nodes").get<NodeId>();
  if (config.contains("horizon")) opts.horizon = config.at("horizon").get<double>();
  if (config.contains("directed")) {
    opts.directedness =
        config.at("directed").get<bool>() ? Directedness::directed : Directedness::undirected;
  }
  return opts;
}

EventStream load_normalized(const fs::path& path, const LoadOptions& opts, std::ostream& log) {
  auto loaded = load_events(path, opts);
  for (const auto& note : loaded.notices) log << "note: " << note << "\n";
  if (loaded.stream.horizon() != 1.0) {
    log << "note: rescaling timestamps by horizon " << format_double(loaded.stream.horizon())
        << "\n";
  }
  return rescale(loaded.stream);
}

BasisSet basis_from_config(const json& config) {
  if (config.contains("basis")) return basis_from_descriptor(config.at("basis").dump());
  const int J = get_or<int>(config, "levels",
                            default_levels(get_or<std::string>(config, "dataset", "")));
  return haar_basis(J);
}

std::int64_t significant(const AffinityResult& r);

ordered_json mask_document(const AffinityResult& r) {
  ordered_json doc;
  doc["alpha"] = r.alpha;
  doc["rank"] = r.rank;
  doc["basis_size"] = r.basis_size;
  doc["tested"] = r.tested;
  ordered_json masks = ordered_json::array();
  for (const auto& M : r.mask) {
    ordered_json flat = ordered_json::array();
    for (Eigen::Index p = 0; p < M.rows(); ++p) {
      for (Eigen::Index q = 0; q < M.cols(); ++q) flat.push_back(M(p, q));
    }
    masks.push_back(std::move(flat));
  }
  // Untested functions are retained with mask 1 but are not discoveries.
  doc["significant"] = significant(r);
  doc["mask"] = std::move(masks);
  return doc;
}

std::int64_t significant(const AffinityResult& r) {
  std::int64_t n = 0;
  for (std::size_t b = 0; b < r.mask.size(); ++b) {
    if (b < r.tested.size() && r.tested[b]) n += r.mask[b].sum();
  }
  return n;
}

std::string eigen_version() {
  return std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION);
}

}  // namespace

void cmd_simulate(const json& config, std::ostream& log) {
  json gen = config;
  gen.erase("out");
  const auto cfg = generator_config_from_json(gen.dump());
  const auto truth = make_ground_truth(cfg);
  const auto stream = generate_network(truth, cfg.seed);
  const auto dir = output_dir(config);
  save_events(stream, dir / "events.csv");
  write_file_atomic(dir / "truth.json", truth_to_json(truth));
  log << "simulated " << stream.size() << " events on " << stream.n_nodes() << " nodes\n";
}

void cmd_fit(const json& config, std::ostream& log) {
  const fs::path input = config.at("input").get<std::string>();
  const auto opts_load = load_options(config);
  const auto stream = load_normalized(input, opts_load, log);
  const auto basis = basis_from_config(config);

  FitOptions opts;
  opts.rank = config.at("rank").get<int>();
  opts.alpha = get_or<double>(config, "alpha", 0.05);
  opts.seed = get_or<std::uint64_t>(config, "seed", 0);
  opts.scree_count = get_or<int>(config, "scree_count",
                                 std::min<int>(stream.n_nodes(), std::max(opts.rank, 10)));
  opts.scree_count = std::min<int>(opts.scree_count, stream.n_nodes());
  opts.project.include_self_loops = get_or<bool>(config, "self_loops", false);

  const auto result = fit(stream, basis, opts);
  if (result.sub.deficient > 0) {
    log << "note: " << result.sub.deficient << " of " << opts.rank
        << " singular values are zero; the subspace is padded\n";
  }

  const auto dir = output_dir(config);
  save_subspace_csv(result.sub, dir / "subspace.csv");
  save_scree_csv(result.sub, dir / "scree.csv");
  write_file_atomic(dir / "affinity.json", affinity_to_json(result.affinity));
  write_file_atomic(dir / "mask.json", dump(mask_document(result.affinity)));

  json resolved = config;
  resolved.erase("out");
  resolved["alpha"] = opts.alpha;
  resolved["seed"] = opts.seed;
  resolved["scree_count"] = opts.scree_count;
  resolved["self_loops"] = opts.project.include_self_loops;

  ordered_json manifest;
  manifest["tool"] = "anie";
  manifest["version"] = ANIE_VERSION;
  manifest["eigen"] = eigen_version();
  manifest["command"] = "fit";
  manifest["config"] = resolved;
  manifest["basis"] = ordered_json::parse(basis.descriptor());
  manifest["input"] = {{"path", input.generic_string()},
                       {"events", stream.size()},
                       {"n_nodes", stream.n_nodes()},
                       {"directed", stream.directedness() == Directedness::directed}};
  manifest["svd"] = {{"iterations", result.sub.iterations},
                     {"residual", result.sub.residual},
                     {"deficient", result.sub.deficient}};
  manifest["artifacts"] = {"subspace.csv", "scree.csv", "affinity.json", "mask.json"};
  write_file_atomic(dir / "manifest.json", dump(manifest));

  log << "fit D=" << opts.rank << " B=" << basis.size() << " on " << stream.size()
      << " events; " << significant(result.affinity) << " significant coefficients\n";
}

IntensityModel load_bundle(const fs::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw ValidationError("manifest " + (dir / "manifest.json").string() + ": " + e.what());
  }
  if (!manifest.contains("basis")) throw ValidationError("manifest lacks a basis descriptor");
  auto basis = basis_from_descriptor(manifest.at("basis").dump());
  auto affinity = affinity_from_json(read_file(dir / "affinity.json"));
  SubspaceEstimate sub;
  sub.U_hat = load_matrix_csv(dir / "subspace.csv");
  sub.rank = static_cast<int>(sub.U_hat.cols());
  return IntensityModel(std::move(sub), std::move(affinity), std::move(basis));
}

ordered_json cmd_eval(const json& config, std::ostream& log) {
  GroundTruth truth;
  truth = truth_from_json(read_file(config.at("truth").get<std::string>()));
  const fs::path model_dir = config.at("model").get<std::string>();
  const auto model = load_bundle(model_dir);
  if (model.n_nodes() != truth.n_nodes) {
    throw ValidationError("model has " + std::to_string(model.n_nodes()) +
                          " nodes but the truth has " + std::to_string(truth.n_nodes));
  }
  const auto pairs = pair_patch(truth.n_nodes, get_or<NodeId>(config, "patch", 100));
  const int quad = get_or<int>(config, "quad_points", 1 << 12);
  const auto truth_eval = evaluator(truth);

  ordered_json metrics;
  metrics["mise"] = mise(truth_eval, evaluator(model), pairs, quad);
  if (truth.U_true.cols() == model.rank()) {
    metrics["subspace_error"] = subspace_error(model.subspace().U_hat, truth.U_true);
  } else {
    metrics["subspace_error"] = nullptr;
    log << "note: rank " << model.rank() << " differs from the true rank "
        << truth.U_true.cols() << "; subspace error skipped\n";
  }

  std::vector<std::string> kinds{"hist", "kde"};
  if (config.contains("baselines")) kinds = config.at("baselines").get<std::vector<std::string>>();
  ordered_json table = ordered_json::object();
  if (!kinds.empty()) {
    const auto manifest = json::parse(read_file(model_dir / "manifest.json"));
    const json& fit_config = manifest.at("config");
    const std::string events =
        config.contains("events") ? config.at("events").get<std::string>()
                                  : manifest.at("input").at("path").get<std::string>();
    const auto stream = load_normalized(events, load_options(fit_config), log);
    for (const auto& kind_name : kinds) {
      BaselineConfig bc;
      if (kind_name == "hist") {
        bc = default_baseline(BaselineKind::hist, truth.model);
      } else if (kind_name == "kde") {
        bc = default_baseline(BaselineKind::kde, truth.model);
      } else {
        throw ParameterError("unknown baseline '" + kind_name + "'");
      }
      bc.bins = get_or<int>(config, "bins", bc.bins);
      bc.bandwidth = get_or<double>(config, "bandwidth", bc.bandwidth);
      SubspaceEstimate sub = model.subspace();
      if (get_or<std::string>(config, "baseline_subspace", "anie") == "hist") {
        SvdOptions so;
        so.rank = model.rank();
        so.seed = get_or<std::uint64_t>(config, "seed", 0);
        sub = histogram_subspace(stream, bc.bins, so);
      }
      const auto baseline = fit_baseline(stream, bc, std::move(sub));
      ordered_json entry;
      if (bc.kind == BaselineKind::hist) {
        entry["bins"] = bc.bins;
      } else {
        entry["bandwidth"] = bc.bandwidth;
      }
      entry["mise"] = mise(truth_eval, evaluator(baseline), pairs, quad);
      table[kind_name] = std::move(entry);
    }
  }
  metrics["baselines"] = std::move(table);

  const auto dir = output_dir(config);
  write_file_atomic(dir / "metrics.json", dump(metrics));
  log << "mise " << format_double(metrics["mise"].get<double>()) << "\n";
  return metrics;
}

void cmd_anomaly(const json& config, std::ostream& log) {
  const auto model = load_bundle(config.at("model").get<std::string>());
  const auto source = get_or<std::string>(config, "source", "thresholded") == "raw"
                          ? ScoreSource::raw
                          : ScoreSource::thresholded;
  const auto profile = multiscale_score(model.affinity(), model.basis(), source);
  const auto dir = output_dir(config);
  save_anomaly_csv(profile, dir / "anomaly.csv");

  std::ostringstream summed;
  summed << "cell_index,t_start,t_end,score\n";
  const int finest = std::max(profile.levels() - 1, 0);
  const std::int64_t cells = std::int64_t{1} << finest;
  for (std::int64_t k = 0; k < cells; ++k) {
    const double lo = std::ldexp(static_cast<double>(k), -finest);
    const double hi = std::ldexp(static_cast<double>(k + 1), -finest);
    summed << k << ',' << format_double(lo) << ',' << format_double(hi) << ','
           << format_double(profile.levels() > 0 ? profile.summed(0.5 * (lo + hi)) : 0.0) << '\n';
  }
  write_file_atomic(dir / "anomaly_summed.csv", summed.str());

  double best = -1.0;
  int best_j = 0;
  std::size_t best_k = 0;
  for (int j = 0; j < profile.levels(); ++j) {
    for (std::size_t k = 0; k < profile.scores[j].size(); ++k) {
      if (profile.scores[j][k] > best) {
        best = profile.scores[j][k];
        best_j = j;
        best_k = k;
      }
    }
  }
  if (best > 0.0) {
    log << "peak score " << format_double(best) << " at scale " << best_j << " cell " << best_k
        << "\n";
  } else {
    log << "all anomaly scores are zero\n";
  }
}

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> alpha;
  std::optional<int> rank;
  std::optional<int> levels;
  std::optional<int> bins;
  std::optional<double> bandwidth;
  std::optional<std::string> input;
  std::optional<std::string> truth;
  std::optional<std::string> model;
  std::optional<std::string> source;
  std::optional<std::string> generator;
  std::optional<int> nodes;
  std::string config_path;
};

json assemble(const Overrides& o) {
  json config = json::object();
  if (!o.config_path.empty()) {
    try {
      config = json::parse(read_file(o.config_path));
    } catch (const json::exception& e) {
      throw ParameterError("config " + o.config_path + ": " + e.what());
    }
  }
  const auto set = [&](const char* key, const auto& value) {
    if (value) config[key] = *value;
  };
  set("seed", o.seed);
  set("out", o.out);
  set("alpha", o.alpha);
  set("rank", o.rank);
  set("levels", o.levels);
  set("bins", o.bins);
  set("bandwidth", o.bandwidth);
  set("input", o.input);
  set("truth", o.truth);
  set("model", o.model);
  set("source", o.source);
  set("model", o.generator);
  set("n_nodes", o.nodes);
  return config;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return 2;
    case ErrorKind::data: return 3;
    case ErrorKind::numeric: return 4;
  }
  return 3;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive network intensity estimation", "anie"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ANIE_VERSION);
  Overrides o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON config file");
    sub->add_option("--seed", o.seed, "base seed");
    sub->add_option("--out", o.out, "output directory");
  };

  auto* simulate = app.add_subcommand("simulate", "sample a synthetic network");
  common(simulate);
  simulate->add_option("--model", o.generator, "er_blocks or dsbm");
  simulate->add_option("--nodes", o.nodes, "number of nodes");

  auto* fit_cmd = app.add_subcommand("fit", "estimate subspace and affinity coefficients");
  common(fit_cmd);
  fit_cmd->add_option("--input", o.input, "events CSV");
  fit_cmd->add_option("--alpha", o.alpha, "FDR level in [0, 1]");
  fit_cmd->add_option("--rank", o.rank, "subspace rank D");
  fit_cmd->add_option("--levels", o.levels, "Haar levels J");

  auto* eval = app.add_subcommand("eval", "MISE and subspace error against a ground truth");
  common(eval);
  eval->add_option("--truth", o.truth, "truth JSON");
  eval->add_option("--model", o.model, "fit output directory");
  eval->add_option("--bins", o.bins, "histogram bins");
  eval->add_option("--bandwidth", o.bandwidth, "kernel bandwidth");

  auto* anomaly = app.add_subcommand("anomaly", "multiscale anomaly scores");
  anomaly->add_option("--config", o.config_path, "JSON config file");
  anomaly->add_option("--out", o.out, "output directory");
  anomaly->add_option("--model", o.model, "fit output directory");
  anomaly->add_option("--source", o.source, "raw or thresholded");

  std::string schema_name;
  auto* schema = app.add_subcommand("schema", "print the config schema of a command");
  schema->add_option("command", schema_name, "simulate, fit, eval or anomaly")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << ANIE_VERSION << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (schema->parsed()) {
      out << schema_document(schema_for(schema_name)).dump(2) << "\n";
      return 0;
    }
    const CLI::App* chosen = app.get_subcommands().front();
    const json config = assemble(o);
    validate(config, schema_for(chosen->get_name()));
    if (chosen == simulate) {
      cmd_simulate(config, err);
    } else if (chosen == fit_cmd) {
      cmd_fit(config, err);
    } else if (chosen == eval) {
      out << dump(cmd_eval(config, err));
    } else {
      cmd_anomaly(config, err);
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return 4;
  }
}

}  // namespace anie::cli
