#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "symptomrank/symptomrank.hpp"

namespace {

// Exit codes: 0 ok, 1 data/validation error, 2 usage, 3 configuration, 4 oracle transport/format.
enum Exit { kOk = 0, kDataError = 1, kUsage = 2, kConfig = 3, kOracle = 4 };

}  // namespace

int main(int argc, char** argv) {
  using namespace symptomrank;

  CLI::App app{"Rank sentences by relevance to BDI-II depression symptoms."};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> k;
  std::string setting;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config,-c", config_path, "pipeline config file")->required()->check(CLI::ExistingFile);
  };
  auto* prepare = app.add_subcommand("prepare", "deduplicate the corpus, reconcile labels, split train/val");
  add_common(prepare);
  prepare->add_option("--seed", seed, "split seed (overrides split.seed)");
  auto* score = app.add_subcommand("score", "maxcos scores, thresholds and positives");
  add_common(score);
  auto* annotate = app.add_subcommand("annotate", "grade sentences with the k-shot oracle");
  add_common(annotate);
  annotate->add_option("--k", k, "exemplars per label (overrides oracle.k)")->check(CLI::NonNegativeNumber);
  std::string target;
  annotate->add_option("--target", target, "which pairs to grade (overrides oracle.target)")
      ->check(CLI::IsMember({"unanimity", "val"}));
  auto* build = app.add_subcommand("build-runs", "write the five TREC run files");
  add_common(build);
  auto* evaluate = app.add_subcommand("evaluate", "classification and ranking reports");
  add_common(evaluate);
  evaluate->add_option("--setting", setting, "restrict to one annotation setting")
      ->check(CLI::IsMember({"majority", "unanimity"}));
  auto* synthesize = app.add_subcommand("synthesize", "generate synthetic positives with the configured generators");
  add_common(synthesize);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    auto cfg = load_config(config_path);
    if (seed) cfg.split_seed = *seed;
    if (!target.empty()) cfg.oracle.target = target == "val" ? AnnotateTarget::val : AnnotateTarget::unanimity;

    if (prepare->parsed()) pipeline::cmd_prepare(cfg, std::cout);
    else if (score->parsed()) pipeline::cmd_score(cfg, std::cout);
    else if (annotate->parsed()) pipeline::cmd_annotate(cfg, k, std::cout);
    else if (build->parsed()) pipeline::cmd_build_runs(cfg, std::cout);
    else if (synthesize->parsed()) pipeline::cmd_synthesize(cfg, std::cout);
    else if (evaluate->parsed()) {
      std::optional<Setting> only;
      if (setting == "majority") only = Setting::majority;
      if (setting == "unanimity") only = Setting::unanimity;
      pipeline::cmd_evaluate(cfg, only, std::cout);
    }
  } catch (const ConfigurationError& e) {
    std::cerr << "symptomrank: configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const OracleFormatError& e) {
    std::cerr << "symptomrank: oracle error: " << e.what() << "\n  raw response: " << e.raw() << '\n';
    return kOracle;
  } catch (const TransportError& e) {
    std::cerr << "symptomrank: oracle error: " << e.what() << '\n';
    return kOracle;
  } catch (const std::exception& e) {
    std::cerr << "symptomrank: error: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}
