#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "rank1/errors.hpp"
#include "rank1/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Rank-one flow experiments"};
  app.require_subcommand(1);
  std::string spec_path;
  std::string out_dir;
  bool timing = false;
  for (const auto& kind : rank1::experiment_kinds()) {
    auto* sub = app.add_subcommand(kind, "run a " + kind + " experiment");
    sub->add_option("--spec", spec_path, "experiment JSON document")->required();
    sub->add_option("--out", out_dir, "output directory (default: $RANK1_OUT_DIR or .)");
    sub->add_flag("--timing", timing, "record wall-clock time in the report");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string kind = app.get_subcommands().front()->get_name();
  if (out_dir.empty()) {
    if (const char* env = std::getenv("RANK1_OUT_DIR")) out_dir = env;
  }
  try {
    auto spec = rank1::ExperimentSpec::load(spec_path);
    if (spec.kind != kind) {
      std::cerr << "usage error: spec.experiment is '" << spec.kind << "' but the subcommand is '" << kind << "'\n";
      return 2;
    }
    std::string message;
    int code = rank1::run_to_files(spec, out_dir, timing, &message);
    (code == 2 ? std::cerr : std::cout) << message << "\n";
    return code;
  } catch (const rank1::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
