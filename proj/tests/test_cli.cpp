// End-to-end checks of the CLI binary: exit codes, determinism across
// reruns and thread counts, --force semantics.

#include <cstdlib>
#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PAMFK_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / "pamfk_cli_test") {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("cli runs a study and refuses silent overwrites") {
  TempDir dir;
  const fs::path cfg = dir.path / "rates.json";
  const fs::path out = dir.path / "rates.csv";
  write_file(cfg, std::string("{\"command\":\"rates\",\"output\":\"") + out.string() +
                      "\",\"seed\":7,\"params\":{\"hurst_time\":0.5,\"hurst_space\":0.5,"
                      "\"time_step\":1.0},\"ic\":\"flat\",\"method\":\"exact\","
                      "\"levels\":3,\"t\":1.0,\"x\":0.0}");

  CHECK(run_cli("--config " + cfg.string()) == 0);
  REQUIRE(fs::exists(out));
  const std::string first = slurp(out);
  CHECK(first.find("level,h,err2,method,se") == 0);
  CHECK(first.find("summary") != std::string::npos);

  // rerun without --force: refusal with exit 2
  CHECK(run_cli("--config " + cfg.string()) == 2);
  // rerun with --force and a different thread count: byte-identical output
  CHECK(run_cli("--config " + cfg.string() + " --force --threads 4") == 0);
  CHECK(slurp(out) == first);
}

TEST_CASE("cli validates the Hurst range with exit code 2") {
  TempDir dir;
  const fs::path cfg = dir.path / "bad.json";
  write_file(cfg, std::string("{\"command\":\"llt\",\"output\":\"") +
                      (dir.path / "o.csv").string() +
                      "\",\"params\":{\"hurst_time\":0.4,\"hurst_space\":0.5,"
                      "\"time_step\":0.25},\"m_min\":2,\"m_max\":4}");
  CHECK(run_cli("--config " + cfg.string()) == 2);
}

TEST_CASE("cli surfaces capacity errors with exit code 3") {
  TempDir dir;
  const fs::path cfg = dir.path / "big.json";
  write_file(cfg, std::string("{\"command\":\"solve\",\"output\":\"") +
                      (dir.path / "o.csv").string() +
                      "\",\"seed\":1,\"params\":{\"hurst_time\":0.75,\"hurst_space\":0.5,"
                      "\"time_step\":0.25},\"ic\":\"flat\",\"backend\":\"enumerate\","
                      "\"m\":30,\"n\":0}");
  CHECK(run_cli("--config " + cfg.string()) == 3);
}

TEST_CASE("cli determinism: same config and seed give identical bytes") {
  TempDir dir;
  const fs::path cfg = dir.path / "noise.json";
  const fs::path out = dir.path / "noise.csv";
  write_file(cfg, std::string("{\"command\":\"sample-noise\",\"output\":\"") + out.string() +
                      "\",\"seed\":123,\"params\":{\"hurst_time\":0.75,\"hurst_space\":0.75,"
                      "\"time_step\":0.25},\"slabs\":3,\"cell_lo\":-2,\"cell_hi\":2}");
  CHECK(run_cli("--config " + cfg.string()) == 0);
  const std::string first = slurp(out);
  CHECK(run_cli("--config " + cfg.string() + " --force --threads 8") == 0);
  CHECK(slurp(out) == first);
  // a different seed changes the bytes
  CHECK(run_cli("--config " + cfg.string() + " --force --seed 124") == 0);
  CHECK(slurp(out) != first);

  // the manifest alone reproduces the run
  const std::string manifest = slurp(out.string() + ".manifest.json");
  const auto key = manifest.find("\"config\"");
  REQUIRE(key != std::string::npos);
}

TEST_CASE("cli rejects a missing config with a nonzero exit") {
  CHECK(run_cli("--config /nonexistent/x.json") != 0);
}
