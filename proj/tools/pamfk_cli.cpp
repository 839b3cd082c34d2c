// Command-line front end; talks to the engine exclusively through the C API.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "pamfk.h"

int main(int argc, char** argv) {
  CLI::App app{"Lattice Feynman-Kac studies for the parabolic Anderson model"};
  app.set_version_flag("--version", std::string(pamfk_version()));

  std::string config_path;
  app.add_option("--config", config_path, "JSON config describing the study")
      ->required()
      ->check(CLI::ExistingFile);
  std::uint64_t seed = 0;
  const auto seed_opt = app.add_option("--seed", seed, "override the config's seed");
  int threads = 0;
  const auto threads_opt =
      app.add_option("--threads", threads, "worker cap (results do not depend on it)");
  bool force = false;
  app.add_flag("--force", force, "overwrite existing output files");

  CLI11_PARSE(app, argc, argv);

  if (!*threads_opt) {
    threads = 1;
    if (const char* env = std::getenv("PAMFK_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end && *end == '\0' && v >= 1) threads = static_cast<int>(v);
    }
  }

  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << config_path << "\n";
    return 2;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string config = buf.str();

  char* summary = nullptr;
  const pamfk_status status = pamfk_run(config.c_str(), seed_opt->count() > 0 ? 1 : 0, seed,
                                        threads, force ? 1 : 0, &summary);
  if (status == PAMFK_OK) {
    if (summary) std::cout << summary << "\n";
    pamfk_string_free(summary);
    return 0;
  }
  std::cerr << "error: " << pamfk_last_error() << "\n";
  pamfk_string_free(summary);
  switch (status) {
    case PAMFK_ERR_CAPACITY: return 3;
    case PAMFK_ERR_NUMERICAL: return 4;
    default: return 2;  // validation and I/O
  }
}
