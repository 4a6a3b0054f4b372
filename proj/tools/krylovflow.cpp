// krylovflow <subcommand> --config <file> [--out <dir>] [--quiet]

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "krylovflow/pipeline.hpp"
#include "krylovflow/version.hpp"

namespace kf = krylovflow;

namespace {

int report(kf::ErrorKind kind, const std::string& message, const std::string& command) {
  std::cerr << kf::error_json(kind, message, command) << "\n";
  return kf::exit_code_for(kind);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Krylov complexity of dissipative spin chains"};
  app.set_version_flag("--version", std::string(kf::kVersion));
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  bool quiet = false;
  for (const std::string& name : kf::command_names()) {
    CLI::App* sub = app.add_subcommand(name, "run the '" + name + "' stage");
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_flag("--quiet", quiet, "suppress progress lines");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(kf::ErrorKind::kInvalidArgument, std::string("usage: ") + e.what(), "");
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const kf::RunConfig cfg = kf::load_config(config_path);
    kf::RunOptions opts;
    if (!out_dir.empty()) opts.out_dir = out_dir;
    opts.quiet = quiet;
    const kf::RunResult result = kf::run_pipeline(cfg, *kf::parse_command(command), opts);
    if (!quiet) {
      std::cout << result.artifacts.size() << " artifact(s) in " << result.output_dir << "\n";
    }
    return 0;
  } catch (const kf::Error& e) {
    return report(e.kind(), e.what(), command);
  } catch (const std::exception& e) {
    return report(kf::ErrorKind::kNumerical, e.what(), command);
  }
}
