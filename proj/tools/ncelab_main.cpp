#include <cstdint>
#include <iostream>
#include <string>

#include <boost/program_options.hpp>

#include "ncelab/runner.hpp"

namespace po = boost::program_options;

namespace {

const char* const usage =
    "usage: ncelab <command> --config <path> [--out <dir>] [--seed <int>] [--tol <float>]\n"
    "\n"
    "commands:\n"
    "  check          validate the structural hypotheses and report the margins\n"
    "  solve-min      compute the local minimizer branch\n"
    "  solve-mp       compute the mountain pass branch\n"
    "  solve-both     compute both solutions and measure their separation\n"
    "  solve-general  bracketed solve of the general gradient-coupled equation\n"
    "  mms            manufactured-solution grid refinement study\n"
    "  props          run the nonlinearity and gradient property suites\n"
    "\n"
    "props runs without --config; every other command requires one.\n"
    "NCELAB_THREADS controls the worker count for nodal loops.\n";

bool known_command(const std::string& c) {
  return c == "check" || c == "solve-min" || c == "solve-mp" || c == "solve-both" ||
         c == "solve-general" || c == "mms" || c == "props";
}

}  // namespace

int main(int argc, char** argv) {
  std::string command;
  try {
    po::options_description desc("options");
    desc.add_options()
        ("help,h", "show this help")
        ("command", po::value<std::string>(), "subcommand")
        ("config", po::value<std::string>(), "experiment description (json)")
        ("out", po::value<std::string>()->default_value("out"), "output directory")
        ("seed", po::value<std::uint64_t>(), "override the seed from the config")
        ("tol", po::value<double>(), "override the acceptance tolerance");
    po::positional_options_description pos;
    pos.add("command", 1);
    po::variables_map vm;
    po::store(po::command_line_parser(argc, argv).options(desc).positional(pos).run(), vm);
    po::notify(vm);

    if (vm.count("help")) {
      std::cout << usage;
      return 0;
    }
    if (!vm.count("command")) {
      std::cerr << usage;
      return ncelab::exit_code(ncelab::ErrorClass::config);
    }
    command = vm["command"].as<std::string>();
    if (!known_command(command))
      throw ncelab::config_error("unknown command '" + command + "'");

    ncelab::ExperimentConfig cfg;
    if (vm.count("config")) {
      cfg = ncelab::load_config(vm["config"].as<std::string>());
    } else if (command != "props") {
      throw ncelab::config_error("command '" + command + "' requires --config <path>");
    } else {
      cfg.echo = nlohmann::json{{"mode", "props"}};
    }
    cfg.mode = command;
    if (vm.count("seed")) cfg.seed = vm["seed"].as<std::uint64_t>();
    if (vm.count("tol")) {
      cfg.tolerance = vm["tol"].as<double>();
      if (!(cfg.tolerance > 0.0)) throw ncelab::config_error("--tol must be positive");
    }
    ncelab::validate_mode_constraints(cfg);

    ncelab::run_experiment(cfg, vm["out"].as<std::string>());
    return 0;
  } catch (const po::error& e) {
    std::cerr << "error (arguments): " << e.what() << "\n" << usage;
    return ncelab::exit_code(ncelab::ErrorClass::config);
  } catch (const ncelab::Error& e) {
    std::cerr << "error (" << ncelab::class_name(e.cls()) << "): " << e.what() << "\n";
    return ncelab::exit_code(e.cls());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ncelab::exit_code(ncelab::ErrorClass::internal);
  }
}
