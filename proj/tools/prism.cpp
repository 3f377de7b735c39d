#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "prism/eval/dataset.hpp"
#include "prism/eval/experiment.hpp"
#include "prism/eval/severity.hpp"
#include "prism/eval/synthetic.hpp"
#include "prism/profile_json.hpp"
#include "prism/service.hpp"
#include "prism/store.hpp"

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

struct Common {
  std::string data_dir = PRISM_DEFAULT_DATA_DIR;
  std::string store;
  std::string mode;
  std::string fixture;
  std::string prior;
  std::string lexicon;
  std::string calibration;
  std::string corpus;
  bool fixed_clock = false;
};

std::string data_file(const Common& c, const std::string& name) { return c.data_dir + "/" + name; }

prism::ServiceConfig service_config(const Common& c) {
  prism::ServiceConfig base;
  base.lexicon_path = data_file(c, "lexicon.json");
  base.calibration_path = data_file(c, "calibration.json");
  base.prior_path = data_file(c, "prior.json");
  prism::ServiceConfig config = prism::ServiceConfig::from_env(base);
  if (!c.store.empty()) config.store_path = c.store;
  if (!c.mode.empty()) {
    const auto mode = prism::parse_mode(c.mode);
    if (!mode) throw prism::ConfigError("--mode must be live, record, replay or mock");
    config.gateway.mode = *mode;
  }
  if (!c.fixture.empty()) config.gateway.fixture_path = c.fixture;
  if (!c.prior.empty()) config.prior_path = c.prior;
  if (!c.lexicon.empty()) config.lexicon_path = c.lexicon;
  if (!c.calibration.empty()) config.calibration_path = c.calibration;
  if (!c.corpus.empty()) config.corpus_path = c.corpus;
  if (c.fixed_clock) config.fixed_clock = true;
  return config;
}

/// Prints the body; a non-2xx status becomes a runtime error.
int emit(const prism::ServiceResponse& r) {
  if (r.status >= 400) {
    std::cerr << r.body << '\n';
    return kRuntimeError;
  }
  const auto parsed = nlohmann::ordered_json::parse(r.body);
  std::cout << parsed.dump(2) << '\n';
  return 0;
}

struct DatasetArgs {
  std::string path;
  std::string column_map;
  bool synthetic = false;
  std::uint64_t synthetic_seed = 2024;
};

struct LoadedDataset {
  std::vector<prism::eval::AnnotationRecord> records;
  std::shared_ptr<const prism::Lexicon> lexicon;
  std::vector<std::string> synthetic_ids;
};

LoadedDataset load_dataset(const Common& c, const DatasetArgs& args) {
  LoadedDataset out;
  if (args.synthetic) {
    prism::eval::SyntheticConfig sc;
    sc.seed = args.synthetic_seed;
    auto pop = prism::eval::make_synthetic_population(sc);
    out.records = std::move(pop.records);
    out.synthetic_ids = std::move(pop.annotator_ids);
    out.lexicon = std::make_shared<prism::Lexicon>(std::move(pop.lexicon));
    return out;
  }
  const std::string map_path =
      args.column_map.empty() ? data_file(c, "column_map_mhs.json") : args.column_map;
  const std::string path = args.path.empty() ? data_file(c, "mhs_sample.csv") : args.path;
  auto dataset = prism::eval::ingest_dataset(path, prism::eval::ColumnMap::load(map_path));
  if (dataset.report.rejected > 0) {
    std::cerr << "ingest: " << dataset.report.rejected << " of " << dataset.report.rows
              << " rows rejected\n";
    for (const auto& issue : dataset.report.issues) std::cerr << "  " << issue << '\n';
  }
  out.records = std::move(dataset.records);
  out.lexicon = std::make_shared<prism::Lexicon>(
      prism::Lexicon::load(c.lexicon.empty() ? data_file(c, "lexicon.json") : c.lexicon));
  return out;
}

void add_dataset_options(CLI::App* cmd, DatasetArgs& args) {
  cmd->add_option("--dataset", args.path, "Annotation CSV (default: bundled sample)");
  cmd->add_option("--column-map", args.column_map, "Column map JSON");
  cmd->add_flag("--synthetic", args.synthetic, "Use the generated synthetic population");
  cmd->add_option("--synthetic-seed", args.synthetic_seed, "Seed of the synthetic population");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personalised content moderation engine"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--data-dir", common.data_dir, "Directory with lexicon, calibration and prior");
  app.add_option("--store", common.store, "Store path (:memory: or a SQLite file)");
  app.add_option("--mode", common.mode, "Gateway mode: live, record, replay or mock");
  app.add_option("--fixture", common.fixture, "Replay fixture (JSON lines)");
  app.add_option("--prior", common.prior, "Population prior JSON");
  app.add_option("--lexicon", common.lexicon, "Lexicon JSON");
  app.add_option("--calibration", common.calibration, "Calibration table JSON");
  app.add_option("--corpus", common.corpus, "Content source for the review queue");
  app.add_flag("--fixed-clock", common.fixed_clock, "Stamp records with the epoch");

  std::string host;
  int port = -1;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Bind port (0 picks a free one)");

  std::string user, text, content_id, label, severities_json;
  bool init = false;
  auto* filter = app.add_subcommand("filter", "Moderate one piece of text for a user");
  filter->add_option("--user", user)->required();
  filter->add_option("--text", text)->required();
  filter->add_option("--content-id", content_id, "Defaults to cli-<hash of text>");

  auto* feedback = app.add_subcommand("feedback", "Record a flag/keep judgement");
  feedback->add_option("--user", user)->required();
  feedback->add_option("--content-id", content_id)->required();
  feedback->add_option("--label", label)->required()->check(CLI::IsMember({"flag", "keep"}));
  feedback->add_option("--severities", severities_json, "Severity JSON object");

  auto* profile = app.add_subcommand("profile", "Inspect profiles");
  profile->require_subcommand(1);
  auto* profile_show = profile->add_subcommand("show", "Print a profile with descriptors");
  profile_show->add_option("--user", user)->required();
  profile_show->add_flag("--init", init, "Create from the prior when absent");

  DatasetArgs dataset_args;
  std::size_t n_profiles = 100;
  std::uint64_t seed = 7;
  auto* profiles = app.add_subcommand("profiles", "Annotator profile selection");
  profiles->require_subcommand(1);
  auto* select = profiles->add_subcommand("select", "Stratified selection by annotator severity");
  add_dataset_options(select, dataset_args);
  select->add_option("--n", n_profiles, "Number of profiles");
  select->add_option("--seed", seed, "Sampling seed");

  auto* eval = app.add_subcommand("eval", "Run experiments");
  eval->require_subcommand(1);
  std::string condition = "multi_agent";
  double train_fraction = 0.5;
  bool json_out = false;
  std::size_t k_min = 2, k_max = 22;
  auto* exp1 = eval->add_subcommand("exp1", "Personalised vs universal filtering");
  add_dataset_options(exp1, dataset_args);
  exp1->add_option("--condition", condition)
      ->check(CLI::IsMember({"universal", "single_agent", "multi_agent"}));
  exp1->add_option("--seed", seed, "Profile selection seed");
  exp1->add_option("--n", n_profiles, "Number of profiles");
  auto* fraction_opt = exp1->add_option("--train-fraction", train_fraction,
                                        "Share of each sequence used for training");
  exp1->add_flag("--json", json_out, "Print the full JSON report");
  auto* curve = eval->add_subcommand("curve", "Learning curve over k");
  add_dataset_options(curve, dataset_args);
  curve->add_option("--k-min", k_min);
  curve->add_option("--k-max", k_max);
  curve->add_option("--seed", seed, "Profile selection seed");
  curve->add_option("--n", n_profiles, "Number of profiles");
  curve->add_option("--condition", condition)
      ->check(CLI::IsMember({"universal", "single_agent", "multi_agent"}));

  std::string dir;
  auto* exporter = app.add_subcommand("export", "Write profiles.json and feedback.jsonl");
  exporter->add_option("--out", dir)->required();
  auto* importer = app.add_subcommand("import", "Load profiles.json and feedback.jsonl");
  importer->add_option("--in", dir)->required();

  std::string prior_out;
  auto* prior_cmd = app.add_subcommand("prior", "Compute the population prior of a dataset");
  add_dataset_options(prior_cmd, dataset_args);
  prior_cmd->add_option("--out", prior_out, "Write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    const auto config = service_config(common);

    if (*serve) {
      auto cfg = config;
      if (!host.empty()) cfg.host = host;
      if (port >= 0) cfg.port = port;
      prism::HttpServer server(prism::PrismService::from_config(cfg));
      const int bound = server.bind(cfg.host, cfg.port);
      std::cerr << "listening on " << cfg.host << ":" << bound << '\n';
      server.listen();
      return 0;
    }
    if (*filter) {
      auto service = prism::PrismService::from_config(config);
      if (content_id.empty()) {
        content_id = "cli-" + prism::compute_request_tag("", "", text, 0.0).substr(0, 12);
      }
      nlohmann::json body{{"user_id", user}, {"content_id", content_id}, {"text", text}};
      return emit(service->handle_filter(body.dump()));
    }
    if (*feedback) {
      auto service = prism::PrismService::from_config(config);
      nlohmann::json body{{"user_id", user}, {"content_id", content_id}, {"label", label}};
      if (!severities_json.empty()) body["severities"] = nlohmann::json::parse(severities_json);
      return emit(service->handle_feedback(body.dump()));
    }
    if (*profile_show) {
      auto service = prism::PrismService::from_config(config);
      return emit(service->handle_get_profile(user, init));
    }
    if (*select) {
      const auto data = load_dataset(common, dataset_args);
      const auto selection = prism::eval::select_from_dataset(data.records, n_profiles, seed);
      for (const auto& w : selection.warnings) std::cerr << "warning: " << w << '\n';
      for (const auto& [category, count] : selection.per_category) {
        std::cout << "# " << prism::eval::category_name(category) << ' ' << count << '\n';
      }
      for (const auto& id : selection.annotators) std::cout << id << '\n';
      return 0;
    }
    if (*exp1 || *curve) {
      const auto data = load_dataset(common, dataset_args);
      prism::eval::ExperimentConfig ec;
      ec.condition = *prism::eval::parse_condition(condition);
      ec.seed = seed;
      ec.n_profiles = n_profiles;
      ec.train_fraction = train_fraction;
      if (dataset_args.synthetic && fraction_opt->count() == 0) ec.train_fraction = 0.6;
      ec.k_min = k_min;
      ec.k_max = k_max;
      std::vector<std::string> annotators;
      if (dataset_args.synthetic) {
        annotators = data.synthetic_ids;
      } else {
        const auto selection = prism::eval::select_from_dataset(
            data.records, ec.n_profiles, ec.seed, ec.min_annotations, ec.max_annotations);
        for (const auto& w : selection.warnings) std::cerr << "warning: " << w << '\n';
        annotators = selection.annotators;
      }
      const auto deps = prism::eval::mock_eval_deps(data.lexicon);
      if (*curve) {
        const auto rows = prism::eval::run_learning_curve(ec, data.records, annotators, deps);
        std::cout << prism::eval::format_curve_csv(rows);
        return 0;
      }
      const auto result = prism::eval::run_experiment(ec, data.records, annotators, deps);
      if (json_out) {
        nlohmann::ordered_json j;
        j["condition"] = prism::eval::condition_name(result.condition);
        j["pooled"] = prism::eval::to_json(result.pooled);
        j["profiles"] = nlohmann::ordered_json::array();
        for (const auto& p : result.profiles) {
          nlohmann::ordered_json row;
          row["annotator_id"] = p.annotator_id;
          row["n_train"] = p.n_train;
          row["n_test"] = p.n_test;
          if (p.metrics) row["macro_f1"] = p.metrics->macro_f1;
          if (!p.error.empty()) row["error"] = p.error;
          j["profiles"].push_back(std::move(row));
        }
        std::cout << j.dump(2) << '\n';
      } else {
        std::cout << "condition " << prism::eval::condition_name(result.condition) << ", "
                  << annotators.size() << " profiles\n"
                  << prism::eval::format_report(result.pooled);
      }
      return 0;
    }
    if (*exporter || *importer) {
      const std::string path = common.store.empty() ? config.store_path : common.store;
      if (path.empty() || path == ":memory:") {
        throw prism::ConfigError("export/import need a file store (--store)");
      }
      auto store = prism::open_sqlite_store(path);
      if (*exporter) {
        prism::export_store(*store, dir);
        std::cout << "exported to " << dir << '\n';
      } else {
        std::cout << "imported " << prism::import_store(*store, dir) << " users\n";
      }
      return 0;
    }
    if (*prior_cmd) {
      const auto data = load_dataset(common, dataset_args);
      const std::string body = prism::to_json(prism::eval::population_prior(data.records)).dump(2);
      if (prior_out.empty()) {
        std::cout << body << '\n';
      } else {
        std::ofstream(prior_out) << body << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}
