#include "pamfk/runner.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pamfk/analysis.hpp"
#include "pamfk/chaos.hpp"
#include "pamfk/csv.hpp"
#include "pamfk/noise.hpp"
#include "pamfk/parallel.hpp"
#include "pamfk/polymer.hpp"
#include "pamfk/rng.hpp"
#include "pamfk/solver.hpp"
#include "pamfk/walk.hpp"

namespace pamfk::runner {

using nlohmann::json;
using csv::format_real;

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  fail_invalid("config field '" + field + "': " + why);
}

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) bad_field(where + it.key(), "unknown key");
}

template <typename T>
T require(const json& obj, const std::string& key) {
  if (!obj.contains(key)) bad_field(key, "missing");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    bad_field(key, "wrong type");
  }
}

template <typename T>
T optional_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    bad_field(key, "wrong type");
  }
}

ModelParams parse_params(const json& cfg) {
  if (!cfg.contains("params")) bad_field("params", "missing");
  const json& p = cfg.at("params");
  check_keys(p, "params.", {"hurst_time", "hurst_space", "time_step", "paper_coeff"});
  ModelParams params;
  params.hurst_time = require<double>(p, "hurst_time");
  params.hurst_space = require<double>(p, "hurst_space");
  params.h = require<double>(p, "time_step");
  params.paper_coeff = optional_or<bool>(p, "paper_coeff", false);
  if (!(params.hurst_time >= 0.5 && params.hurst_time < 1.0))
    bad_field("params.hurst_time", "must lie in [0.5, 1)");
  if (!(params.hurst_space >= 0.5 && params.hurst_space < 1.0))
    bad_field("params.hurst_space", "must lie in [0.5, 1)");
  if (!(params.h > 0.0)) bad_field("params.time_step", "must be positive");
  return params;
}

solver::Ic parse_ic(const json& cfg) {
  const std::string ic = require<std::string>(cfg, "ic");
  if (ic == "flat") return solver::Ic::Flat;
  if (ic == "delta") return solver::Ic::Delta;
  bad_field("ic", "expected 'flat' or 'delta'");
}

solver::Backend parse_backend(const json& cfg, const std::string& fallback) {
  const std::string b = optional_or<std::string>(cfg, "backend", fallback);
  if (b == "enumerate") return solver::Backend::Enumerate;
  if (b == "transfer") return solver::Backend::TransferMatrix;
  if (b == "montecarlo") return solver::Backend::MonteCarlo;
  bad_field("backend", "expected 'enumerate', 'transfer' or 'montecarlo'");
}

std::string ic_name(solver::Ic ic) { return ic == solver::Ic::Flat ? "flat" : "delta"; }

// ---- commands ----

csv::Table cmd_sample_noise(const json& cfg, const ModelParams& params, uint64_t seed) {
  check_keys(cfg, "", {"command", "output", "seed", "params", "slabs", "cell_lo", "cell_hi"});
  const int slabs = require<int>(cfg, "slabs");
  const int lo = require<int>(cfg, "cell_lo");
  const int hi = require<int>(cfg, "cell_hi");
  const noise::NoiseGrid grid = noise::sample_field(params, slabs, lo, hi, seed);
  csv::Table t;
  t.header = {"m", "n", "value"};
  for (int m = 1; m <= slabs; ++m)
    for (int n = lo; n <= hi; ++n)
      t.rows.push_back({std::to_string(m), std::to_string(n), format_real(grid.at(m, n))});
  return t;
}

csv::Table cmd_solve(const json& cfg, const ModelParams& params, uint64_t seed) {
  check_keys(cfg, "",
             {"command", "output", "seed", "params", "ic", "backend", "m", "n", "mc_paths"});
  solver::SolveRequest req;
  req.ic = parse_ic(cfg);
  req.backend = parse_backend(cfg, "enumerate");
  req.m = require<int>(cfg, "m");
  req.n = optional_or<long>(cfg, "n", 0);
  req.mc_paths = optional_or<uint64_t>(cfg, "mc_paths", 100000);
  req.mc_seed = rng::mix(seed, 1);
  const noise::NoiseGrid grid =
      noise::sample_field(params, req.m, static_cast<int>(req.n) - req.m - 1,
                          static_cast<int>(req.n) + req.m + 1, seed);
  const solver::SolveResult res = solver::solve(req, grid, params);
  csv::Table t;
  t.header = {"ic", "backend", "m", "n", "value", "se", "saturated"};
  t.rows.push_back({ic_name(req.ic), optional_or<std::string>(cfg, "backend", "enumerate"),
                    std::to_string(req.m), std::to_string(req.n), format_real(res.value),
                    res.se ? format_real(*res.se) : "", std::to_string(res.saturated)});
  return t;
}

csv::Table cmd_moments(const json& cfg, const ModelParams& params, uint64_t seed) {
  check_keys(cfg, "",
             {"command", "output", "seed", "params", "ic", "m", "n", "chaos_order",
              "noise_samples"});
  const solver::Ic ic = parse_ic(cfg);
  const int m = require<int>(cfg, "m");
  const long n = optional_or<long>(cfg, "n", 0);
  const int order = optional_or<int>(cfg, "chaos_order", 4);
  const int samples = optional_or<int>(cfg, "noise_samples", 0);

  csv::Table t;
  t.header = {"quantity", "value", "se"};
  solver::SolveRequest req;
  req.ic = ic;
  req.m = m;
  req.n = n;
  req.backend = solver::Backend::Enumerate;
  const double pair = solver::pair_moment(req, params, req, params).value;
  t.rows.push_back({"pair_moment", format_real(pair), ""});
  for (int k = 0; k <= order; ++k)
    t.rows.push_back({"chaos_second_moment_K" + std::to_string(k),
                      format_real(chaos::chaos_second_moment(params, ic, k, m, n)), ""});
  const double expected_mean =
      ic == solver::Ic::Flat
          ? 1.0
          : walk::srw_pmf(m, 2 * n - walk::tau(m)) / (2.0 * std::sqrt(params.h));
  t.rows.push_back({"expected_mean", format_real(expected_mean), ""});

  if (samples > 1) {
    double s = 0.0, s2 = 0.0;
    for (int it = 0; it < samples; ++it) {
      const noise::NoiseGrid grid =
          noise::sample_field(params, m, static_cast<int>(n) - m - 1,
                              static_cast<int>(n) + m + 1, rng::mix(seed, it));
      const double u = solver::solve(req, grid, params).value;
      s += u;
      s2 += u * u;
    }
    const double mean = s / samples;
    const double var = std::max(0.0, s2 / samples - mean * mean);
    t.rows.push_back({"empirical_mean", format_real(mean),
                      format_real(std::sqrt(var / (samples - 1.0)))});
    t.rows.push_back({"empirical_second_moment", format_real(s2 / samples), ""});
  }
  return t;
}

csv::Table cmd_kernels(const json& cfg, const ModelParams& params, uint64_t) {
  check_keys(cfg, "",
             {"command", "output", "seed", "params", "ic", "k", "t", "x", "points", "diff_s"});
  chaos::KernelSpec spec;
  spec.ic = parse_ic(cfg);
  spec.k = require<int>(cfg, "k");
  spec.t = require<double>(cfg, "t");
  spec.x = optional_or<double>(cfg, "x", 0.0);
  spec.params = params;

  csv::Table t;
  t.header = {"kind", "index", "value"};
  int idx = 0;
  if (cfg.contains("points")) {
    for (const json& pt : cfg.at("points")) {
      check_keys(pt, "points[].", {"s", "y"});
      const auto s = require<std::vector<double>>(pt, "s");
      const auto y = require<std::vector<double>>(pt, "y");
      if (static_cast<int>(s.size()) != spec.k) bad_field("points[].s", "expected k entries");
      t.rows.push_back({"f", std::to_string(idx), format_real(chaos::f_kernel(spec, s, y))});
      t.rows.push_back({"g", std::to_string(idx), format_real(chaos::g_kernel(spec, s, y))});
      ++idx;
    }
  }
  idx = 0;
  if (cfg.contains("diff_s")) {
    for (const json& sv : cfg.at("diff_s")) {
      const auto s = sv.get<std::vector<double>>();
      if (static_cast<int>(s.size()) != spec.k) bad_field("diff_s[]", "expected k entries");
      t.rows.push_back(
          {"diff_norm", std::to_string(idx), format_real(chaos::kernel_diff_norm(spec, s))});
      ++idx;
    }
  }
  return t;
}

csv::Table cmd_llt(const json& cfg, const ModelParams&, uint64_t) {
  check_keys(cfg, "", {"command", "output", "seed", "params", "m_min", "m_max"});
  const long m_min = require<long>(cfg, "m_min");
  const long m_max = require<long>(cfg, "m_max");
  if (m_min < 1 || m_max < m_min) bad_field("m_min/m_max", "need 1 <= m_min <= m_max");
  csv::Table t;
  t.header = {"m", "error", "m_times_error"};
  for (long m = m_min; m <= m_max; ++m) {
    const double e = analysis::llt_error(m);
    t.rows.push_back({std::to_string(m), format_real(e), format_real(m * e)});
  }
  return t;
}

csv::Table cmd_rates(const json& cfg, const ModelParams& params, uint64_t seed) {
  check_keys(cfg, "",
             {"command", "output", "seed", "params", "ic", "method", "levels", "t", "x",
              "mc_paths"});
  const solver::Ic ic = parse_ic(cfg);
  const std::string method_name = require<std::string>(cfg, "method");
  analysis::RateMethod method;
  if (method_name == "exact")
    method = analysis::RateMethod::ExactPair;
  else if (method_name == "montecarlo")
    method = analysis::RateMethod::MonteCarlo;
  else
    bad_field("method", "expected 'exact' or 'montecarlo'");
  const int levels = require<int>(cfg, "levels");
  const double t_hor = require<double>(cfg, "t");
  const double x_hor = optional_or<double>(cfg, "x", 0.0);
  const uint64_t mc_paths = optional_or<uint64_t>(cfg, "mc_paths", 100000);

  const analysis::RateReport report =
      analysis::rate_study(ic, params, levels, t_hor, x_hor, method, mc_paths, seed);
  csv::Table t;
  t.header = {"level", "h", "err2", "method", "se"};
  for (const auto& row : report.levels)
    t.rows.push_back({std::to_string(row.level), format_real(row.h), format_real(row.err2),
                      method_name, row.se ? format_real(*row.se) : ""});
  // Trailing summary row: (slope, intercept, theory_slope, slope_se) in
  // columns 2..5.
  t.rows.push_back({"summary", format_real(report.slope), format_real(report.intercept),
                    format_real(report.theory_slope),
                    report.slope_se ? format_real(*report.slope_se) : ""});
  return t;
}

csv::Table cmd_holder(const json& cfg, const ModelParams& params, uint64_t seed) {
  check_keys(cfg, "",
             {"command", "output", "seed", "params", "t", "x", "separations", "noise_samples"});
  const double t_hor = require<double>(cfg, "t");
  const double x_hor = optional_or<double>(cfg, "x", 0.0);
  const int seps = optional_or<int>(cfg, "separations", 4);
  const int samples = optional_or<int>(cfg, "noise_samples", 256);
  const analysis::HolderReport report =
      analysis::holder_scan(params, t_hor, x_hor, seps, samples, seed);
  csv::Table t;
  t.header = {"kind", "separation", "mean_sq", "se"};
  for (const auto& row : report.rows)
    t.rows.push_back(
        {row.kind, format_real(row.separation), format_real(row.mean_sq), format_real(row.se)});
  t.rows.push_back({"time_exponent", "", format_real(report.t_exponent),
                    format_real(report.t_exponent_se)});
  t.rows.push_back({"space_exponent", "", format_real(report.x_exponent),
                    format_real(report.x_exponent_se)});
  return t;
}

csv::Table cmd_polymer(const json& cfg, const ModelParams& params, uint64_t seed) {
  check_keys(cfg, "",
             {"command", "output", "seed", "params", "study", "m_list", "variant", "samples",
              "backend", "mc_paths"});
  const std::string study = require<std::string>(cfg, "study");
  const auto m_list = require<std::vector<int>>(cfg, "m_list");
  if (m_list.empty()) bad_field("m_list", "must not be empty");
  const std::string variant_name = optional_or<std::string>(cfg, "variant", "free");
  polymer::Variant variant;
  if (variant_name == "free")
    variant = polymer::Variant::Free;
  else if (variant_name == "bridge")
    variant = polymer::Variant::Bridge;
  else
    bad_field("variant", "expected 'free' or 'bridge'");
  const int samples = optional_or<int>(cfg, "samples", 10000);
  const uint64_t mc_paths = optional_or<uint64_t>(cfg, "mc_paths", 100000);

  csv::Table t;
  if (study == "match") {
    t.header = {"m", "lhs", "rhs", "abs_diff"};
    for (int m : m_list) {
      const auto [lhs, rhs] = polymer::match_moments(m, params);
      t.rows.push_back({std::to_string(m), format_real(lhs), format_real(rhs),
                        format_real(std::fabs(lhs - rhs))});
    }
    return t;
  }

  const solver::Backend backend =
      parse_backend(cfg, params.white_time() ? "transfer" : "enumerate");
  auto draw = [&](int m, uint64_t stream) {
    std::vector<double> vals(samples);
    for (int i = 0; i < samples; ++i) {
      const polymer::PolymerEnv env =
          polymer::sample_env(m, params, rng::mix(seed, stream, i));
      vals[i] = polymer::partition(env, variant, params, backend, mc_paths,
                                   rng::mix(seed, stream, i, 1)).value;
    }
    return vals;
  };

  if (study == "mean") {
    t.header = {"m", "variant", "mean", "se", "expected"};
    for (size_t mi = 0; mi < m_list.size(); ++mi) {
      const int m = m_list[mi];
      const auto vals = draw(m, mi);
      double s = 0.0, s2 = 0.0;
      for (double v : vals) {
        s += v;
        s2 += v * v;
      }
      const double mean = s / samples;
      const double var = std::max(0.0, s2 / samples - mean * mean);
      const double expected =
          variant == polymer::Variant::Free
              ? 1.0
              : 0.5 * std::sqrt(static_cast<double>(m)) * walk::srw_pmf(m, walk::tau(m));
      t.rows.push_back({std::to_string(m), variant_name, format_real(mean),
                        format_real(std::sqrt(var / (samples - 1.0))), format_real(expected)});
    }
    return t;
  }

  if (study == "wasserstein") {
    // W_2 between Z_m and Z_{4m} for each listed m, bootstrap error bars.
    t.header = {"m", "m_fine", "w2", "se"};
    for (size_t mi = 0; mi < m_list.size(); ++mi) {
      const int m = m_list[mi];
      const auto a = draw(m, 2 * mi);
      const auto b = draw(4 * m, 2 * mi + 1);
      const double w2 = polymer::wasserstein_p(a, b, 2.0);
      const int boots = 100;
      double bs = 0.0, bs2 = 0.0;
      std::vector<double> ra(samples), rb(samples);
      for (int bi = 0; bi < boots; ++bi) {
        for (int i = 0; i < samples; ++i) {
          ra[i] = a[static_cast<size_t>(rng::uniform(seed, 900 + mi, bi, 2 * i) * samples)];
          rb[i] = b[static_cast<size_t>(rng::uniform(seed, 900 + mi, bi, 2 * i + 1) * samples)];
        }
        const double v = polymer::wasserstein_p(ra, rb, 2.0);
        bs += v;
        bs2 += v * v;
      }
      const double bmean = bs / boots;
      const double bvar = std::max(0.0, bs2 / boots - bmean * bmean);
      t.rows.push_back({std::to_string(m), std::to_string(4 * m), format_real(w2),
                        format_real(std::sqrt(bvar))});
    }
    return t;
  }
  bad_field("study", "expected 'match', 'mean' or 'wasserstein'");
}

}  // namespace

RunOutcome run_config(const std::string& config_json, const RunOptions& options) {
  json cfg;
  try {
    cfg = json::parse(config_json);
  } catch (const json::exception& e) {
    fail_invalid(std::string("config is not valid JSON: ") + e.what());
  }
  if (!cfg.is_object()) fail_invalid("config must be a JSON object");

  const std::string command = require<std::string>(cfg, "command");
  const std::string output = require<std::string>(cfg, "output");
  uint64_t seed = optional_or<uint64_t>(cfg, "seed", 1);
  if (options.seed_override) {
    seed = *options.seed_override;
    cfg["seed"] = seed;
  }
  par::set_threads(options.threads);
  const ModelParams params = parse_params(cfg);

  csv::Table table;
  if (command == "sample-noise")
    table = cmd_sample_noise(cfg, params, seed);
  else if (command == "solve")
    table = cmd_solve(cfg, params, seed);
  else if (command == "moments")
    table = cmd_moments(cfg, params, seed);
  else if (command == "kernels")
    table = cmd_kernels(cfg, params, seed);
  else if (command == "llt")
    table = cmd_llt(cfg, params, seed);
  else if (command == "rates")
    table = cmd_rates(cfg, params, seed);
  else if (command == "holder")
    table = cmd_holder(cfg, params, seed);
  else if (command == "polymer")
    table = cmd_polymer(cfg, params, seed);
  else
    bad_field("command", "unknown command '" + command + "'");

  csv::write_csv(table, output, options.force);

  json manifest;
  manifest["command"] = command;
  manifest["config"] = cfg;
  manifest["seed"] = seed;
  manifest["threads"] = options.threads;
  manifest["library_version"] = kVersion;
  RunOutcome outcome;
  outcome.output_path = output;
  outcome.manifest_path = output + ".manifest.json";
  csv::write_text(manifest.dump(2) + "\n", outcome.manifest_path, options.force);

  std::ostringstream summary;
  summary << command << ": wrote " << table.rows.size() << " rows to " << output;
  outcome.summary = summary.str();
  return outcome;
}

}  // namespace pamfk::runner
