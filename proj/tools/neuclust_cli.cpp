// neuclust: run bandit experiments, ingest MovieLens dumps, sweep WCSS, selfcheck.

#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "neuclust/config.hpp"
#include "neuclust/harness.hpp"
#include "neuclust/ingest.hpp"
#include "neuclust/selfcheck.hpp"

namespace {

using namespace neuclust;

int cmd_run(const std::string& config_path, const std::string& out) {
  auto cfg = config::load_config(config_path);
  if (!out.empty()) cfg.out_dir = out;
  harness::run_experiment(cfg, &std::cout);
  std::cout << "outputs in " << cfg.out_dir.string() << '\n';
  return 0;
}

int cmd_ingest(const std::string& ratings, const std::string& movies, const std::string& out,
               std::size_t min_ratings, std::int64_t min_epoch) {
  const auto catalog = ingest::parse_movies(movies);
  const auto table = ingest::parse_ratings(ratings, min_epoch);
  for (const auto* r : {&catalog.report, &table.report})
    if (r->malformed > 0) {
      std::cerr << "skipped " << r->malformed << " malformed rows\n";
      for (const auto& s : r->samples) std::cerr << "  " << s << '\n';
    }
  try {
    const auto built = ingest::filter_and_build(table, catalog, min_ratings, min_epoch);
    ingest::export_env_inputs(built.inputs, out, &built.stats);
    std::cout << ingest::format_stats(built.stats);
  } catch (const ingest::EmptyResult& e) {
    std::cerr << "error: " << e.what() << '\n' << ingest::format_stats(e.stats());
    return 1;
  }
  return 0;
}

int cmd_wcss(const std::string& config_path, const std::string& clusters, const std::string& out) {
  auto cfg = config::load_config(config_path);
  if (!out.empty()) cfg.out_dir = out;
  std::vector<std::size_t> ks;
  for (auto k : config::parse_uint_list(clusters)) ks.push_back(static_cast<std::size_t>(k));
  for (const auto& [k, w] : harness::emit_wcss(cfg, ks)) std::cout << k << ',' << w << '\n';
  return 0;
}

int cmd_selfcheck(bool corrupt) {
  selfcheck::Options o;
  o.corrupt_confidence = corrupt;
  const auto results = selfcheck::run(o);
  std::cout << selfcheck::format_report(results);
  return selfcheck::all_passed(results) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NeUClust contextual combinatorial bandit lab"};
  app.require_subcommand(1);

  std::string config_path, out;
  auto* run = app.add_subcommand("run", "Run every (policy, seed) pair in a config");
  run->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory (overrides run.out)");

  std::string ratings, movies, ingest_out;
  std::size_t min_ratings = ingest::kDefaultMinRatings;
  std::int64_t min_epoch = ingest::kDefaultMinEpoch;
  auto* ing = app.add_subcommand("ingest", "Build contexts and items from MovieLens CSVs");
  ing->add_option("--ratings", ratings, "ratings.csv")->required()->check(CLI::ExistingFile);
  ing->add_option("--movies", movies, "movies.csv")->required()->check(CLI::ExistingFile);
  ing->add_option("--out", ingest_out, "Output directory")->required();
  ing->add_option("--min-ratings", min_ratings, "Minimum ratings per kept user")->capture_default_str();
  ing->add_option("--min-epoch", min_epoch, "Drop ratings before this unix time")->capture_default_str();

  std::string clusters;
  auto* wcss = app.add_subcommand("wcss", "Within-cluster sum of squares per cluster count");
  wcss->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  wcss->add_option("--clusters", clusters, "Cluster counts, e.g. 2,5,10 or 1..20")->required();
  wcss->add_option("--out", out, "Output directory (overrides run.out)");

  bool corrupt = false;
  auto* self = app.add_subcommand("selfcheck", "Run the built-in property suite");
  self->add_flag("--inject-fault", corrupt, "Corrupt the confidence matrix (negative control)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path, out);
    if (*ing) return cmd_ingest(ratings, movies, ingest_out, min_ratings, min_epoch);
    if (*wcss) return cmd_wcss(config_path, clusters, out);
    if (*self) return cmd_selfcheck(corrupt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
