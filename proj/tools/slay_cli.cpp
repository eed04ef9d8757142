// Copyright 2026 The SLAY Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line entry point: benchmarks, ablations, kernel/quadrature tables,
// denominator sweeps, file-based attention and the self-test suite.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "slay/slay.hpp"

namespace {

using slay::ErrorKind;
using ojson = nlohmann::ordered_json;

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) slay::fail(ErrorKind::io, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Config from --config (defaults otherwise), then SLAY_SEED on top.
slay::SlayFeatureConfig load_config(const std::string& path) {
  slay::SlayFeatureConfig cfg = path.empty() ? slay::SlayFeatureConfig{} : slay::config_from_json_string(read_text(path));
  if (const char* env = std::getenv("SLAY_SEED")) {
    const std::string s(env);
    std::size_t used = 0;
    unsigned long long seed = 0;
    try {
      seed = std::stoull(s, &used, 10);
    } catch (const std::exception&) {
      used = 0;
    }
    if (s.empty() || used != s.size() || s.front() == '-')
      slay::fail(ErrorKind::config, "SLAY_SEED must be a nonnegative integer, got '" + s + "'");
    cfg.seed = seed;
  }
  return cfg;
}

void emit(const slay::CsvTable& table, const std::string& out) {
  if (out.empty()) {
    table.write(std::cout);
    return;
  }
  std::ofstream f(out, std::ios::trunc);
  if (!f) slay::fail(ErrorKind::io, "cannot open output file " + out);
  table.write(f);
  if (!f) slay::fail(ErrorKind::io, "write failed for " + out);
}

std::string columns_help(const std::vector<std::string>& cols) {
  std::string s = "CSV columns: ";
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
  return s + "\nThe first line is '# json-config: {...}' with the exact run configuration.";
}

slay::Mechanism parse_mechanism_or_fail(const std::string& name) {
  const auto m = slay::parse_mechanism(name);
  if (!m) slay::fail(ErrorKind::usage, "unknown mechanism '" + name + "'");
  return *m;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  slay::retain_freed_memory();
  CLI::App app{"SLAY: spherical linearized attention with the Yat kernel"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "slay 0.1.0");

  // bench
  auto* bench = app.add_subcommand("bench", "latency / memory / throughput versus sequence length");
  std::string bench_mechs = "slay,spherical-yat,softmax,yat,favor,elu1,cosformer";
  std::size_t l_min = 128, l_max = 131072, d_model = 256, heads = 8, reps = slay::kDefaultTimingReps,
              warmup = slay::kDefaultWarmupReps, l_max_quadratic = slay::kDefaultQuadraticLengthCap;
  std::string bench_lengths;
  double aux_cap_gib = 4.0, budget_s = 0.0;
  bool non_causal = false, serial_det = false, use_f32 = false, interleave = false;
  std::size_t favor_features = 64;
  std::string config_path, out_path;
  bench->add_option("--mechanisms", bench_mechs, "comma-separated mechanisms")->capture_default_str();
  bench->add_option("--l-min", l_min, "first sequence length")->capture_default_str();
  bench->add_option("--l-max", l_max, "last sequence length (doubling from --l-min)")->capture_default_str();
  bench->add_option("--lengths", bench_lengths, "explicit comma-separated ascending lengths");
  bench->add_option("--d-model", d_model)->capture_default_str();
  bench->add_option("--heads", heads)->capture_default_str();
  bench->add_flag("--non-causal", non_causal, "bidirectional attention (default causal)");
  bench->add_option("--reps", reps, "timed runs per point")->capture_default_str();
  bench->add_option("--warmup", warmup, "untimed warmup runs per point")->capture_default_str();
  bench->add_option("--budget-s", budget_s, "stop timed runs after this many seconds (0 = no limit)");
  bench->add_option("--l-max-quadratic", l_max_quadratic, "length cap for quadratic mechanisms")->capture_default_str();
  bench->add_option("--aux-cap-gib", aux_cap_gib, "auxiliary allocation cap in GiB")->capture_default_str();
  bench->add_option("--favor-features", favor_features)->capture_default_str();
  bench->add_flag("--serial-deterministic", serial_det, "zero timing fields for byte-identical output");
  bench->add_flag("--f32", use_f32, "compute in 32-bit floats");
  bench->add_flag("--interleave", interleave, "time all lengths of a mechanism round-robin");
  bench->add_option("--config", config_path, "SlayFeatureConfig JSON");
  bench->add_option("--out", out_path, "CSV output path (default stdout)");
  bench->footer(columns_help(slay::bench_columns()));

  // ablate-poly
  auto* ablate = app.add_subcommand("ablate-poly", "polynomial-factor fidelity ablation against exact spherical attention");
  std::string scales = "small,medium,large,paper-default";
  std::string methods;
  std::size_t ablate_seeds = 5, ablate_dim = 32;
  bool ablate_causal = false;
  for (const auto& m : slay::ablation_methods()) methods += (methods.empty() ? "" : ",") + m;
  ablate->add_option("--scales", scales)->capture_default_str();
  ablate->add_option("--methods", methods)->capture_default_str();
  ablate->add_option("--seeds", ablate_seeds)->capture_default_str();
  ablate->add_option("--dim", ablate_dim, "head dimension")->capture_default_str();
  ablate->add_flag("--causal", ablate_causal);
  ablate->add_option("--reps", reps)->capture_default_str();
  ablate->add_option("--warmup", warmup)->capture_default_str();
  ablate->add_flag("--serial-deterministic", serial_det, "skip timing for byte-identical output");
  ablate->add_option("--config", config_path, "base SlayFeatureConfig JSON (epsilon, delta, lambda, seed)");
  ablate->add_option("--out", out_path);
  ablate->footer(columns_help(slay::ablation_columns()));

  // kernel-curve
  auto* curve = app.add_subcommand("kernel-curve", "spherical kernel, quadrature estimate and e^x over x in [-1, 1]");
  double epsilon = slay::kDefaultEpsilon;
  std::size_t r = slay::kDefaultQuadratureNodes, points = 201;
  curve->add_option("--epsilon", epsilon)->capture_default_str();
  curve->add_option("--r", r, "quadrature nodes")->capture_default_str();
  curve->add_option("--points", points, "grid size")->capture_default_str();
  curve->add_option("--out", out_path);
  curve->footer(columns_help(slay::kernel_curve_columns()));

  // quadrature
  auto* quad = app.add_subcommand("quadrature", "Gauss-Laguerre nodes and scaled weights, or a convergence sweep");
  std::string sweep;
  quad->add_option("--r", r)->capture_default_str();
  quad->add_option("--epsilon", epsilon)->capture_default_str();
  quad->add_option("--sweep", sweep, "comma-separated R values: emit max-error convergence rows instead");
  quad->add_option("--out", out_path);
  quad->footer("CSV columns: i,t,alpha,s,w (with --sweep: r,max_abs_error,argmax_x)\n"
               "The first line is '# json-config: {...}' with the exact run configuration.");

  // denominator-sweep
  auto* denom = app.add_subcommand("denominator-sweep", "histogram of pre-stabilizer scores over random unit pairs");
  std::size_t pairs = 100000, denom_seeds = 8, denom_dim = 16, bins = 32;
  denom->add_option("--pairs", pairs)->capture_default_str();
  denom->add_option("--seeds", denom_seeds)->capture_default_str();
  denom->add_option("--dim", denom_dim)->capture_default_str();
  denom->add_option("--bins", bins)->capture_default_str();
  denom->add_option("--config", config_path);
  denom->add_option("--out", out_path);
  denom->footer(columns_help(slay::denominator_columns()));

  // attn
  auto* attn = app.add_subcommand("attn", "run one attention mechanism on tensors in the SLAY binary format");
  std::string mech_name, q_path, k_path, v_path;
  bool attn_causal = false;
  attn->add_option("--mechanism", mech_name, "softmax|yat|spherical-yat|slay|favor|elu1|cosformer")->required();
  attn->add_option("--config", config_path);
  attn->add_option("--q", q_path)->required();
  attn->add_option("--k", k_path)->required();
  attn->add_option("--v", v_path)->required();
  attn->add_option("--out", out_path, "output tensor path")->required();
  attn->add_flag("--causal", attn_causal);
  attn->add_option("--favor-features", favor_features)->capture_default_str();
  attn->footer("Tensor format: 'SLAY' | u32 version=1 | u32 rows | u32 cols | u8 dtype (0=f64, 1=f32) | "
               "little-endian payload. Output uses the dtype of --q.");

  // selftest
  auto* self = app.add_subcommand("selftest", "run the named invariant checks");
  bool list_only = false;
  std::vector<std::string> only;
  self->add_flag("--list", list_only, "print check names and exit");
  self->add_option("--only", only, "run checks with this name or module prefix (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ErrorKind::usage);
  }

  try {
    if (*bench) {
      slay::BenchOptions o;
      o.mechanism.slay = load_config(config_path);
      o.mechanism.favor_features = favor_features;
      o.mechanisms.clear();
      for (const auto& m : split_list(bench_mechs)) o.mechanisms.push_back(parse_mechanism_or_fail(m));
      if (!bench_lengths.empty()) {
        for (const auto& l : split_list(bench_lengths)) o.lengths.push_back(std::stoull(l));
      } else {
        o.lengths = slay::doubling_lengths(l_min, l_max);
      }
      o.d_model = d_model;
      o.heads = heads;
      o.causal = !non_causal;
      o.reps = reps;
      o.warmup = warmup;
      if (budget_s > 0.0) {
        o.budget_s = budget_s;
        o.slow_run_s = budget_s / 4.0;
      }
      o.quadratic_length_cap = l_max_quadratic;
      o.aux_cap_bytes = static_cast<std::size_t>(aux_cap_gib * 1024.0 * 1024.0 * 1024.0);
      o.serial_deterministic = serial_det;
      o.interleave = interleave;
      o.use_f32 = use_f32;
      ojson cfg;
      cfg["command"] = "bench";
      cfg["slay"] = slay::config_to_json(o.mechanism.slay);
      cfg["mechanisms"] = split_list(bench_mechs);
      cfg["lengths"] = o.lengths;
      cfg["d_model"] = d_model;
      cfg["heads"] = heads;
      cfg["causal"] = o.causal;
      cfg["reps"] = reps;
      cfg["warmup"] = warmup;
      cfg["l_max_quadratic"] = l_max_quadratic;
      cfg["aux_cap_bytes"] = o.aux_cap_bytes;
      cfg["favor_features"] = favor_features;
      cfg["serial_deterministic"] = serial_det;
      cfg["interleave"] = interleave;
      cfg["dtype"] = use_f32 ? "f32" : "f64";
      emit(slay::bench_table(slay::run_bench(o), cfg.dump()), out_path);
    } else if (*ablate) {
      const auto base = load_config(config_path);
      std::vector<slay::AblationScale> chosen;
      for (const auto& name : split_list(scales)) {
        const auto& all = slay::ablation_scales();
        const auto it = std::find_if(all.begin(), all.end(), [&](const auto& s) { return s.name == name; });
        if (it == all.end()) slay::fail(ErrorKind::usage, "unknown scale '" + name + "'");
        chosen.push_back(*it);
      }
      const auto method_list = split_list(methods);
      for (const auto& m : method_list) {
        const auto& all = slay::ablation_methods();
        if (std::find(all.begin(), all.end(), m) == all.end()) slay::fail(ErrorKind::usage, "unknown method '" + m + "'");
      }
      slay::AblationOptions o;
      o.seeds = ablate_seeds;
      o.dim = ablate_dim;
      o.causal = ablate_causal;
      o.reps = reps;
      o.warmup = warmup;
      o.skip_timing = serial_det;
      ojson cfg;
      cfg["command"] = "ablate-poly";
      cfg["slay"] = slay::config_to_json(base);
      cfg["scales"] = split_list(scales);
      cfg["methods"] = method_list;
      cfg["seeds"] = ablate_seeds;
      cfg["dim"] = ablate_dim;
      cfg["causal"] = ablate_causal;
      cfg["serial_deterministic"] = serial_det;
      emit(slay::ablation_table(slay::run_poly_ablation(chosen, method_list, base, o), cfg.dump()), out_path);
    } else if (*curve) {
      const slay::KernelParams p(epsilon);
      ojson cfg;
      cfg["command"] = "kernel-curve";
      cfg["epsilon"] = epsilon;
      cfg["r"] = r;
      cfg["points"] = points;
      emit(slay::kernel_curve_table(slay::kernel_curve(p, slay::uniform_grid(points), r), cfg.dump()), out_path);
    } else if (*quad) {
      const slay::KernelParams p(epsilon);
      ojson cfg;
      cfg["command"] = "quadrature";
      cfg["epsilon"] = epsilon;
      if (!sweep.empty()) {
        std::vector<std::size_t> rs;
        for (const auto& s : split_list(sweep)) rs.push_back(std::stoull(s));
        cfg["sweep"] = rs;
        cfg["grid_points"] = slay::kConvergenceGridPoints;
        emit(slay::convergence_table(slay::quadrature_convergence_sweep(p, rs), cfg.dump()), out_path);
      } else {
        cfg["r"] = r;
        const auto rule = slay::make_rule(r, p);
        slay::CsvTable t({"i", "t", "alpha", "s", "w"}, cfg.dump());
        for (std::size_t i = 0; i < rule.r; ++i)
          t.add({static_cast<long long>(i), rule.t[i], rule.alpha[i], rule.s[i], rule.w[i]});
        emit(t, out_path);
      }
    } else if (*denom) {
      const auto c = load_config(config_path);
      slay::DenominatorSweepOptions o;
      o.n_pairs = pairs;
      o.seeds = denom_seeds;
      o.dim = denom_dim;
      o.bins = bins;
      ojson cfg;
      cfg["command"] = "denominator-sweep";
      cfg["slay"] = slay::config_to_json(c);
      cfg["pairs"] = pairs;
      cfg["seeds"] = denom_seeds;
      cfg["dim"] = denom_dim;
      cfg["bins"] = bins;
      cfg["guaranteed_nonneg_scores"] = c.guarantees_nonneg_scores();
      emit(slay::denominator_table(slay::denominator_sweep(c, o), cfg.dump()), out_path);
    } else if (*attn) {
      const auto mech = parse_mechanism_or_fail(mech_name);
      slay::MechanismOptions o;
      o.slay = load_config(config_path);
      o.causal = attn_causal;
      o.favor_features = favor_features;
      const auto q = slay::read_tensor_file(q_path);
      const auto k = slay::read_tensor_file(k_path);
      const auto v = slay::read_tensor_file(v_path);
      const auto out = slay::run_mechanism(mech, q.values, k.values, v.values, o);
      if (out.has_degenerate_rows())
        std::cerr << "warning: " << out.degenerate_rows.size() << " degenerate row(s)\n";
      slay::write_tensor_file(out_path, out.y, q.dtype);
    } else if (*self) {
      const auto& checks = slay::selftest::registry();
      if (list_only) {
        for (const auto& c : checks) std::cout << c.name << "  " << c.summary << "\n";
        return 0;
      }
      const auto results = slay::selftest::run(only);
      if (results.empty()) slay::fail(ErrorKind::usage, "no checks match the --only filters");
      std::size_t failed = 0;
      for (const auto& r2 : results) {
        std::cout << (r2.passed ? "PASS " : "FAIL ") << r2.name << " [" << slay::format_real(r2.seconds) << " s] "
                  << r2.detail << "\n";
        failed += !r2.passed;
      }
      std::cout << results.size() - failed << "/" << results.size() << " checks passed\n";
      return failed == 0 ? 0 : static_cast<int>(ErrorKind::numeric);
    }
  } catch (const slay::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::invalid_argument&) {
    std::cerr << "error: malformed number in list argument\n";
    return static_cast<int>(ErrorKind::usage);
  } catch (const std::out_of_range&) {
    std::cerr << "error: number out of range in list argument\n";
    return static_cast<int>(ErrorKind::usage);
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return static_cast<int>(ErrorKind::numeric);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::numeric);
  }
  return 0;
}
