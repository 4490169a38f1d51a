#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "common.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised multi-object tracking toolkit"};
  app.set_version_flag("--version", emtrack::cli::version_string());
  app.require_subcommand(1);
  emtrack::cli::setup_synth(app);
  emtrack::cli::setup_train(app);
  emtrack::cli::setup_track(app);
  emtrack::cli::setup_eval(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
