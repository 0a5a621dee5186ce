#include <CLI11.hpp>
#include <cstdio>
#include <optional>
#include <string>

#include "stabclust/stages.hpp"

namespace {

// exit codes: 0 ok, 1 usage, 2 config, 3 data, 4 numeric
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CliState {
  std::string config_path;
  std::string out_override;
  std::optional<std::uint64_t> seed_override;
  int threads = 1;
  bool reproducible = false;
  std::string override_selection;
  bool self_check = false;
  bool self_test = false;
};

std::optional<std::pair<std::string, int>> parse_override(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const std::size_t colon = text.rfind(':');
  if (colon == std::string::npos || colon + 1 >= text.size()) {
    throw stabclust::ConfigError("--override expects <method>:<k>, got '" + text + "'");
  }
  const std::string method = text.substr(0, colon);
  int k = 0;
  try {
    k = std::stoi(text.substr(colon + 1));
  } catch (const std::exception&) {
    throw stabclust::ConfigError("--override expects an integer k in '" + text + "'");
  }
  return std::make_pair(method, k);
}

stabclust::StageOptions build_options(const CliState& state) {
  stabclust::StageOptions opts;
  opts.cfg = stabclust::load_config(state.config_path);
  if (state.seed_override.has_value()) opts.cfg.seed = *state.seed_override;
  if (!state.out_override.empty()) opts.cfg.out_dir = state.out_override;
  opts.threads = state.threads;
  opts.reproducible = state.reproducible;
  opts.override_selection = parse_override(state.override_selection);
  opts.self_check = state.self_check;
  opts.self_test = state.self_test;
  return opts;
}

void add_common_options(CLI::App* cmd, CliState& state) {
  cmd->add_option("--config", state.config_path, "run configuration JSON (or a manifest)")
      ->required();
  cmd->add_option("--out", state.out_override, "override the configured output directory");
  cmd->add_option("--seed", state.seed_override, "override the configured master seed");
  cmd->add_option("--threads", state.threads, "worker threads for grid-parallel stages")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--reproducible", state.reproducible,
                "suppress timestamps/timings for byte-identical reruns");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stability-driven clustering workflow for stellar abundance catalogs"};
  app.require_subcommand(1);
  CliState state;

  CLI::App* prepare = app.add_subcommand("prepare", "filter the catalog and split train/test");
  add_common_options(prepare, state);

  CLI::App* explore = app.add_subcommand(
      "explore", "dimension-reduction embeddings and neighborhood retention curves");
  add_common_options(explore, state);
  explore->add_flag("--self-test", state.self_test,
                    "include an identity embedding as a retention control");

  CLI::App* search =
      app.add_subcommand("search", "stability-driven model selection over the grid");
  add_common_options(search, state);
  search->add_option("--override", state.override_selection,
                     "record <method>:<k> instead of the stability argmax");

  CLI::App* validate = app.add_subcommand(
      "validate", "consensus, local stability, generalizability, sweeps, composition");
  add_common_options(validate, state);
  validate->add_option("--override", state.override_selection,
                       "validate <method>:<k> instead of the recorded selection");
  validate->add_flag("--self-check", state.self_check,
                     "use test = train with a memorizing classifier");

  std::string run_dir;
  CLI::App* report = app.add_subcommand("report", "collate artifacts into a static summary");
  report->add_option("run_dir", run_dir, "run directory holding stage outputs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (prepare->parsed()) stabclust::cmd_prepare(build_options(state));
    else if (explore->parsed()) stabclust::cmd_explore(build_options(state));
    else if (search->parsed()) stabclust::cmd_search(build_options(state));
    else if (validate->parsed()) stabclust::cmd_validate(build_options(state));
    else if (report->parsed()) stabclust::cmd_report(run_dir);
  } catch (const stabclust::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const stabclust::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const stabclust::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return 0;
}
