#include "pamfk.h"

#include <cmath>
#include <cstring>
#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <string>

namespace {

pamfk_params white(double h) { return pamfk_params{0.5, 0.5, h, 0}; }

}  // namespace

TEST_CASE("version and error reporting") {
  CHECK(std::strlen(pamfk_version()) > 0);
  double out = 0.0;
  const pamfk_params bad{0.3, 0.5, 0.25, 0};
  CHECK(pamfk_wh_covariance(&bad, 0, 0, &out) == PAMFK_ERR_INVALID);
  CHECK(std::strlen(pamfk_last_error()) > 0);
  CHECK(pamfk_wh_covariance(nullptr, 0, 0, &out) == PAMFK_ERR_INVALID);
}

TEST_CASE("scalar primitives through the C surface") {
  double out = 0.0;
  REQUIRE(pamfk_interval_inner(1, 2, 0, 1, 0.75, &out) == PAMFK_OK);
  CHECK(out == doctest::Approx(std::sqrt(2.0) - 1.0));

  const pamfk_params p = white(0.25);
  REQUIRE(pamfk_wh_covariance(&p, 0, 0, &out) == PAMFK_OK);
  CHECK(out == doctest::Approx(0.25));

  const pamfk_params colored{0.75, 0.75, 1.0, 0};
  double closed = 0.0, numeric = 0.0;
  REQUIRE(pamfk_wh_covariance(&colored, 2, 1, &closed) == PAMFK_OK);
  REQUIRE(pamfk_wh_covariance_quadrature(&colored, 2, 1, 1e-9, &numeric) == PAMFK_OK);
  CHECK(numeric == doctest::Approx(closed).epsilon(1e-7));

  REQUIRE(pamfk_srw_pmf(3, 1, &out) == PAMFK_OK);
  CHECK(out == doctest::Approx(0.375));
  REQUIRE(pamfk_bridge_step_prob(0, 0, 2, 0, &out) == PAMFK_OK);
  CHECK(out == doctest::Approx(0.5));
  REQUIRE(pamfk_heat_kernel(1, 0, &out) == PAMFK_OK);
  CHECK(out == doctest::Approx(1.0 / std::sqrt(2 * M_PI)));
  REQUIRE(pamfk_llt_error(2, &out) == PAMFK_OK);
  CHECK(out == doctest::Approx(std::fabs(0.5 - 1.0 / std::sqrt(M_PI))));
  CHECK(pamfk_heat_kernel(-1, 0, &out) == PAMFK_ERR_INVALID);
}

TEST_CASE("noise handles and the solve path") {
  const pamfk_params p = white(0.25);
  pamfk_noise* grid = nullptr;
  REQUIRE(pamfk_noise_sample(&p, 4, -6, 6, 99, &grid) == PAMFK_OK);
  REQUIRE(grid != nullptr);
  double v = 0.0;
  REQUIRE(pamfk_noise_value(grid, 1, 0, &v) == PAMFK_OK);
  CHECK(std::isfinite(v));
  CHECK(pamfk_noise_value(grid, 5, 0, &v) == PAMFK_ERR_INVALID);

  double ve = 0.0, vt = 0.0;
  REQUIRE(pamfk_solve(&p, PAMFK_IC_FLAT, PAMFK_BACKEND_ENUMERATE, 4, 0, grid, 0, 0, &ve,
                      nullptr) == PAMFK_OK);
  REQUIRE(pamfk_solve(&p, PAMFK_IC_FLAT, PAMFK_BACKEND_TRANSFER_MATRIX, 4, 0, grid, 0, 0,
                      &vt, nullptr) == PAMFK_OK);
  CHECK(ve == doctest::Approx(vt).epsilon(1e-12));
  CHECK(ve > 0.0);
  pamfk_noise_free(grid);

  // aggregation of a nested fine grid
  pamfk_params fine = white(0.0625);
  pamfk_noise* fine_grid = nullptr;
  REQUIRE(pamfk_noise_sample(&fine, 8, -4, 5, 7, &fine_grid) == PAMFK_OK);
  pamfk_noise* coarse = nullptr;
  REQUIRE(pamfk_noise_aggregate(fine_grid, &coarse) == PAMFK_OK);
  double cv = 0.0, fsum = 0.0;
  REQUIRE(pamfk_noise_value(coarse, 1, 0, &cv) == PAMFK_OK);
  for (int mf = 1; mf <= 4; ++mf)
    for (int nf = 0; nf <= 1; ++nf) {
      double fv = 0.0;
      REQUIRE(pamfk_noise_value(fine_grid, mf, nf, &fv) == PAMFK_OK);
      fsum += fv;
    }
  CHECK(cv == doctest::Approx(0.5 * fsum));
  pamfk_noise_free(coarse);
  pamfk_noise_free(fine_grid);
}

TEST_CASE("moments, polymer and wasserstein through the C surface") {
  const pamfk_params p = white(1.0);
  double pair = 0.0;
  REQUIRE(pamfk_pair_moment(&p, 1, 0, &p, 1, 0, PAMFK_IC_FLAT, PAMFK_BACKEND_ENUMERATE, 0, 0,
                            &pair, nullptr) == PAMFK_OK);
  CHECK(pair == doctest::Approx(0.5 * (std::exp(0.5) + 1.0)));

  double chaos_val = 0.0;
  REQUIRE(pamfk_chaos_second_moment(&p, PAMFK_IC_FLAT, 0, 4, 0, &chaos_val) == PAMFK_OK);
  CHECK(chaos_val == doctest::Approx(1.0));

  double gap = 0.0;
  REQUIRE(pamfk_density_gap(&p, 1.0, 0.0, &gap) == PAMFK_OK);
  CHECK(gap > 0.0);

  pamfk_env* env = nullptr;
  REQUIRE(pamfk_env_sample(&p, 2, 5, &env) == PAMFK_OK);
  double ev = 0.0;
  REQUIRE(pamfk_env_value(env, 1, 1, &ev) == PAMFK_OK);
  CHECK(pamfk_env_value(env, 1, 2, &ev) == PAMFK_ERR_INVALID);  // off lattice
  double z = 0.0;
  REQUIRE(pamfk_partition(env, PAMFK_POLYMER_FREE, &p, PAMFK_BACKEND_ENUMERATE, 0, 0, &z) ==
          PAMFK_OK);
  CHECK(z > 0.0);
  pamfk_env_free(env);

  double lhs = 0.0, rhs = 0.0;
  REQUIRE(pamfk_match_moments(&p, 2, &lhs, &rhs) == PAMFK_OK);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

  const double a[] = {0.0, 2.0};
  const double b[] = {1.0, 1.0};
  double w = 0.0;
  REQUIRE(pamfk_wasserstein(a, 2, b, 2, 2.0, &w) == PAMFK_OK);
  CHECK(w == doctest::Approx(1.0));

  // capacity errors surface with the right status
  CHECK(pamfk_match_moments(&p, 13, &lhs, &rhs) == PAMFK_ERR_CAPACITY);
}

TEST_CASE("run() executes a study end to end") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "pamfk_capi_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string out = (dir / "llt.csv").string();
  const std::string config = std::string("{\"command\":\"llt\",\"output\":\"") + out +
                             "\",\"seed\":1,\"params\":{\"hurst_time\":0.5,"
                             "\"hurst_space\":0.5,\"time_step\":0.25},"
                             "\"m_min\":2,\"m_max\":16}";
  char* summary = nullptr;
  REQUIRE(pamfk_run(config.c_str(), 0, 0, 1, 0, &summary) == PAMFK_OK);
  REQUIRE(summary != nullptr);
  CHECK(std::string(summary).find("llt") != std::string::npos);
  pamfk_string_free(summary);
  CHECK(fs::exists(out));
  CHECK(fs::exists(out + ".manifest.json"));

  // without --force the second run refuses to overwrite
  CHECK(pamfk_run(config.c_str(), 0, 0, 1, 0, nullptr) == PAMFK_ERR_INVALID);
  // with force it succeeds
  CHECK(pamfk_run(config.c_str(), 0, 0, 1, 1, nullptr) == PAMFK_OK);

  // unknown keys are rejected with a named field
  const std::string bad = std::string("{\"command\":\"llt\",\"output\":\"") + out +
                          "\",\"params\":{\"hurst_time\":0.5,\"hurst_space\":0.5,"
                          "\"time_step\":0.25},\"m_min\":2,\"m_max\":4,\"bogus\":1}";
  CHECK(pamfk_run(bad.c_str(), 0, 0, 1, 1, nullptr) == PAMFK_ERR_INVALID);
  CHECK(std::string(pamfk_last_error()).find("bogus") != std::string::npos);
  fs::remove_all(dir);
}
