// stepwise: bound scans, Ising scaling sweeps, Bayesian runs and point reports.

#include "stepwise/cli.hpp"
#include "stepwise/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace cli = stepwise::cli;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

std::filesystem::path output_path(const Options& opt, const std::string& from_config) {
  return cli::resolve_output(opt.out.empty() ? from_config : opt.out);
}

int cmd_scan(const Options& opt) {
  const auto config = cli::load_config(opt.config);
  const auto spec = cli::parse_scan(config);
  const auto path = output_path(opt, spec.output);
  cli::write_file(path, cli::run_scan(spec, cli::resolve_threads(opt.threads), config.dump()));
  std::cerr << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_scaling(const Options& opt) {
  const auto config = cli::load_config(opt.config);
  const auto spec = cli::parse_scaling(config);
  const auto result = cli::compute_scaling(spec, cli::resolve_threads(opt.threads));
  const auto path = output_path(opt, spec.output);
  cli::write_file(path, cli::scaling_csv(result, config.dump()));
  std::cerr << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_bayes(const Options& opt) {
  const auto config = cli::load_config(opt.config);
  auto spec = cli::parse_bayes(config);
  if (opt.seed) spec.config.seed = *opt.seed;
  const auto trace = cli::run_bayes(spec);
  const auto path = output_path(opt, spec.output);
  cli::write_file(path, cli::bayes_csv(trace, config.dump()));
  if (trace.aborted) {
    std::cerr << "error: run aborted: " << trace.error << " (partial trace in " << path.string()
              << ")\n";
    return 2;
  }
  std::cerr << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_point(const Options& opt) {
  const auto config = cli::load_config(opt.config);
  const std::string text = cli::point_report(cli::parse_model(config));
  if (opt.out.empty()) {
    std::cout << text;
  } else {
    cli::write_file(cli::resolve_output(opt.out), text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stepwise versus joint estimation bounds for two-parameter pure-state probes"};
  app.require_subcommand(1);

  Options opt;
  auto add_common = [&opt](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON config file")->required();
    sub->add_option("--out", opt.out, "output path (overrides the config)");
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* scan = app.add_subcommand("scan", "bounds over a two-axis grid");
  auto* scaling = app.add_subcommand("scaling", "Ising bounds against chain length");
  auto* bayes = app.add_subcommand("bayes", "two-phase Bayesian estimation trace");
  auto* point = app.add_subcommand("point", "bounds at one parameter point");
  for (auto* sub : {scan, scaling, bayes, point}) add_common(sub);
  bayes->add_option("--seed", opt.seed, "RNG seed (overrides the config)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (scan->parsed()) return cmd_scan(opt);
    if (scaling->parsed()) return cmd_scaling(opt);
    if (bayes->parsed()) return cmd_bayes(opt);
    return cmd_point(opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
