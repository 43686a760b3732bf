#include <cstring>
#include <iostream>
#include <string>

#include "beamlab/runner.hpp"
#include "beamlab/version.hpp"

namespace {

int usage(std::ostream& out, int code) {
  out << "usage:\n"
      << "  beamlab run <config.ini> [--assert] [--out DIR]\n"
      << "  beamlab export-matrices <config.ini> [--out DIR]\n"
      << "  beamlab --version\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) return usage(std::cerr, 1);
  const std::string verb = argv[1];

  if (verb == "--version" || verb == "version") {
    std::cout << "beamlab " << beamlab::version() << "\n";
    return 0;
  }
  if (verb == "--help" || verb == "-h" || verb == "help") return usage(std::cout, 0);

  if (verb == "run" || verb == "export-matrices") {
    std::string config;
    std::string out_dir;
    bool assert_mode = false;
    for (int i = 2; i < argc; ++i) {
      const std::string arg = argv[i];
      if (arg == "--assert") {
        assert_mode = true;
      } else if (arg == "--out") {
        if (i + 1 >= argc) {
          std::cerr << "--out requires a directory argument\n";
          return usage(std::cerr, 1);
        }
        out_dir = argv[++i];
      } else if (!arg.empty() && arg[0] == '-') {
        std::cerr << "unknown option '" << arg << "'\n";
        return usage(std::cerr, 1);
      } else if (config.empty()) {
        config = arg;
      } else {
        std::cerr << "unexpected argument '" << arg << "'\n";
        return usage(std::cerr, 1);
      }
    }
    if (config.empty()) {
      std::cerr << verb << " requires a config file\n";
      return usage(std::cerr, 1);
    }
    if (verb == "export-matrices") {
      if (assert_mode) {
        std::cerr << "--assert is only valid with 'run'\n";
        return usage(std::cerr, 1);
      }
      return beamlab::export_matrices(config, out_dir);
    }
    return beamlab::run_scenario(config, assert_mode, out_dir);
  }

  std::cerr << "unknown command '" << verb << "'\n";
  return usage(std::cerr, 1);
}
