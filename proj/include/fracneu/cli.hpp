#pragma once

// Command-line front end: spectrum, series, classify, measure, verify.
// Exit codes: 0 ok, 1 verify failure, 2 config error, 3 computation error,
// 4 resonant beta rejected by `series`.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fracneu/acceptance.hpp"
#include "fracneu/config.hpp"
#include "fracneu/errors.hpp"
#include "fracneu/galerkin.hpp"
#include "fracneu/lattice.hpp"
#include "fracneu/perturbation.hpp"
#include "fracneu/potential.hpp"
#include "fracneu/resonance.hpp"

namespace fracneu::cli {

enum Exit : int { kOk = 0, kVerifyFailed = 1, kConfigError = 2, kComputationError = 3, kResonantBeta = 4 };

inline unsigned worker_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

inline void write_error(std::ostream& err, std::string_view code, const std::string& message, int exit_code,
                        ordered_json extra = ordered_json::object()) {
  ordered_json j;
  j["error"] = code;
  j["message"] = message;
  j["exit_code"] = exit_code;
  for (auto& [k, v] : extra.items()) j[k] = v;
  err << j.dump() << "\n";
}

/// Runs fn and maps library errors onto exit codes, reporting them as JSON on err.
template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    const int code = (e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::ParseError) ? kConfigError
                                                                                                : kComputationError;
    write_error(err, to_string(e.code()), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    write_error(err, "InternalError", e.what(), kComputationError);
    return kComputationError;
  }
}

inline ordered_json header(const Prepared& p) {
  ordered_json j;
  j["config"] = to_json(p.config);
  j["override_active"] = p.params.override_active();
  return j;
}

inline std::string csv_preamble(const Prepared& p) {
  return "# config: " + to_json(p.config).dump() + "\n# override_active: " +
         (p.params.override_active() ? "true" : "false") + "\n";
}

inline std::filesystem::path output_path(const Prepared& p, const std::string& name) {
  std::filesystem::path dir(p.config.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::ConfigError, "cannot create output directory '" + dir.string() + "'");
  return dir / name;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot write '" + path.string() + "'");
  f << text;
}

/// "2,1" -> {2, 1}
inline Index parse_index(const std::string& text, std::size_t d) {
  Index n;
  std::stringstream ss(text);
  for (std::string tok; std::getline(ss, tok, ',');) {
    int v = 0;
    const auto first = tok.find_first_not_of(' ');
    const auto last = tok.find_last_not_of(' ');
    if (first == std::string::npos) throw Error(ErrorCode::ConfigError, "bad index '" + text + "'");
    tok = tok.substr(first, last - first + 1);
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw Error(ErrorCode::ConfigError, "bad index '" + text + "'");
    }
    n.push_back(v);
  }
  if (n.size() != d) {
    throw Error(ErrorCode::ConfigError,
                "index '" + text + "' needs " + std::to_string(d) + " entries for this box");
  }
  return n;
}

inline std::vector<double> parse_reals(const std::string& text, std::size_t count, const std::string& what) {
  std::vector<double> v;
  std::stringstream ss(text);
  for (std::string tok; std::getline(ss, tok, ',');) {
    double x = 0.0;
    const auto first = tok.find_first_not_of(' ');
    const auto last = tok.find_last_not_of(' ');
    if (first == std::string::npos) throw Error(ErrorCode::ConfigError, "bad " + what + " '" + text + "'");
    tok = tok.substr(first, last - first + 1);
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw Error(ErrorCode::ConfigError, "bad " + what + " '" + text + "'");
    }
    v.push_back(x);
  }
  if (v.size() != count) throw Error(ErrorCode::ConfigError, what + " needs " + std::to_string(count) + " values");
  return v;
}

inline ordered_json index_json(const Index& n) { return ordered_json(n); }

// ---- subcommands ----

inline int cmd_spectrum(const Prepared& p, const std::vector<std::string>& match_betas, bool csv, std::ostream& out) {
  std::vector<Index> betas;
  for (const auto& b : match_betas) betas.push_back(parse_index(b, p.box.dimension()));
  const auto basis = build_basis(p.box, p.config.cutoff);
  auto sol = solve(basis, assemble(basis, p.potential, p.params.ell, worker_threads()));
  auto j = header(p);
  j["box"] = p.box.sides();
  j["ell"] = p.params.ell;
  j["cutoff"] = p.config.cutoff;
  j["modes"] = basis.size();
  j["coefficient_convention"] = "h = (chi_N, v_beta) / ||v_beta||; h_plain = (chi_N, v_beta)";
  j["max_scaled_residual"] = sol.max_scaled_residual();
  std::vector<double> ev(sol.eigenvalues().data(), sol.eigenvalues().data() + sol.size());
  j["eigenvalues"] = ev;
  ordered_json matches = ordered_json::array();
  for (const auto& n : betas) {
    const LatticeVector beta(p.box, n);
    const auto m = match_eigenvalue(beta, sol, p.params);
    ordered_json cluster = ordered_json::array();
    for (const auto& c : m.cluster) cluster.push_back(c.index());
    matches.push_back({{"beta", n},
                       {"N", m.N},
                       {"xi", m.xi},
                       {"h", m.h},
                       {"h_plain", *sol.h_plain(m.N, n)},
                       {"free_eigenvalue", m.free_eigenvalue},
                       {"cluster", cluster}});
  }
  j["matches"] = matches;
  const auto path = output_path(p, "spectrum.json");
  write_file(path, j.dump(2) + "\n");
  if (csv) {
    std::string text = csv_preamble(p) + "N,xi\n";
    for (std::size_t N = 0; N < ev.size(); ++N) text += std::to_string(N) + "," + format_sig12(ev[N]) + "\n";
    write_file(output_path(p, "spectrum.csv"), text);
  }
  out << path.string() << "\n";
  return kOk;
}

inline int cmd_series(const Prepared& p, const std::string& beta_text, std::ostream& out, std::ostream& err) {
  const LatticeVector beta(p.box, parse_index(beta_text, p.box.dimension()));
  const std::int64_t upper =
      std::min<std::int64_t>(static_cast<std::int64_t>(p.params.p) - p.params.c(), p.params.p1());
  if (p.config.kmax > upper) {
    throw Error(ErrorCode::ConfigError, "kmax=" + std::to_string(p.config.kmax) + " exceeds min(p - c, p1) = " +
                                            std::to_string(upper));
  }
  const auto label = ResonanceClassifier(p.box, p.params).classify(beta.components());
  if (label.kind == DomainKind::resonance) {
    ordered_json w = ordered_json::array();
    for (const auto& b : label.witnesses) w.push_back(b.index());
    write_error(err, "ResonantBeta", "beta " + to_string(beta.index()) + " lies in a resonance domain",
                kResonantBeta, {{"witnesses", w}});
    return kResonantBeta;
  }
  const auto s = F_sequence(p.config.kmax, beta, p.potential, p.params, worker_threads());
  const double M = mass(p.potential);
  auto j = header(p);
  j["beta"] = beta.index();
  j["ell"] = p.params.ell;
  j["r"] = p.params.r;
  j["threshold"] = p.params.threshold;
  j["free_eigenvalue"] = s.free_eigenvalue;
  j["S"] = s.S;
  j["F"] = s.F;
  j["predicted"] = s.predicted;
  j["predicted_per_k"] = s.predicted_per_k;
  double min_den = std::numeric_limits<double>::infinity();
  for (double v : s.min_denominator) min_den = std::min(min_den, v);
  j["min_denominator"] = std::isfinite(min_den) ? ordered_json(min_den) : ordered_json(nullptr);
  ordered_json per = ordered_json::array();
  for (double v : s.min_denominator) per.push_back(std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr));
  j["min_denominator_per_term"] = per;
  std::vector<double> bounds;
  for (std::size_t i = 1; i <= s.S.size(); ++i) bounds.push_back(term_bound(static_cast<int>(i), p.params.threshold, M));
  j["term_bounds"] = bounds;
  j["F1_closed_form"] = s.f1_closed;
  const auto path = output_path(p, "series.json");
  write_file(path, j.dump(2) + "\n");
  out << path.string() << "\n";
  return kOk;
}

struct ClassifyArgs {
  std::string origin = "-10,-10";
  std::string spacing = "0.05,0.05";
  std::string counts = "401,401";
  std::string betas;  // "1,0;0,1"; empty: the test set
  std::size_t max_cells = kDefaultMaxCells;
};

inline int cmd_classify(const Prepared& p, const ClassifyArgs& a, std::ostream& out) {
  if (p.box.dimension() != 2) throw Error(ErrorCode::ConfigError, "classify needs a 2-D box");
  const auto o = parse_reals(a.origin, 2, "origin");
  const auto s = parse_reals(a.spacing, 2, "spacing");
  const auto c = parse_reals(a.counts, 2, "counts");
  if (c[0] < 1 || c[1] < 1 || c[0] != std::floor(c[0]) || c[1] != std::floor(c[1])) {
    throw Error(ErrorCode::ConfigError, "counts must be positive integers");
  }
  std::vector<LatticeVector> betas;
  if (!a.betas.empty()) {
    std::stringstream ss(a.betas);
    for (std::string tok; std::getline(ss, tok, ';');) betas.emplace_back(p.box, parse_index(tok, 2));
  }
  const auto grid = GridSpec::plane(o[0], o[1], s[0], s[1], static_cast<std::size_t>(c[0]),
                                    static_cast<std::size_t>(c[1]));
  const auto scan = scan_slice(p.box, p.params, grid, betas, a.max_cells, worker_threads());
  const auto path = output_path(p, "classify.csv");
  write_file(path, csv_preamble(p) + scan_to_csv(scan));
  out << path.string() << "\n";
  return kOk;
}

inline int cmd_measure(const Prepared& p, std::ostream& out) {
  const auto m = nonresonance_fraction(p.box, p.params, p.config.samples, p.config.seed, worker_threads());
  auto j = header(p);
  j["shell"] = {kShellInner, kShellOuter};
  j["threshold"] = p.params.threshold;
  j["test_radius"] = p.params.test_radius();
  j["samples"] = m.samples;
  j["nonresonant"] = m.nonresonant;
  j["fraction"] = m.fraction;
  j["stderr"] = m.standard_error;
  const auto path = output_path(p, "measure.json");
  write_file(path, j.dump(2) + "\n");
  out << path.string() << "\n";
  return kOk;
}

/// Checks on the configured box, order, cutoff and potential.
inline std::vector<acceptance::CriterionResult> config_suite(const Prepared& p) {
  using acceptance::fmt;
  using acceptance::named;
  const double scale = p.config.tolerance_scale;
  std::vector<acceptance::CriterionResult> out;
  const auto basis = build_basis(p.box, p.config.cutoff);

  {
    auto res = named(1, "config: free-operator exactness");
    const auto sol = solve(basis, assemble(basis, PotentialSpec(p.box, {}, 0), p.params.ell));
    std::vector<double> free_values;
    for (const auto& m : basis.modes()) free_values.push_back(frac_power(m.norm_sq(), p.params.ell));
    std::sort(free_values.begin(), free_values.end());
    Eigen::VectorXd expected = Eigen::Map<Eigen::VectorXd>(free_values.data(), static_cast<Eigen::Index>(free_values.size()));
    const double err = sorted_spectrum_distance(sol.eigenvalues(), expected);
    res.pass = err <= 1e-10 * scale;
    res.detail = "max_err=" + fmt(err);
    out.push_back(res);
  }

  const auto sol = solve(basis, assemble(basis, p.potential, p.params.ell, worker_threads()));
  {
    auto res = named(2, "config: eigenvalue pairing within M");
    const auto free_sol = solve(basis, assemble(basis, PotentialSpec(p.box, {}, 0), p.params.ell));
    const double shift = sorted_spectrum_distance(sol.eigenvalues(), free_sol.eigenvalues());
    const double M = mass(p.potential);
    res.pass = shift <= M + 1e-10 * scale * (1.0 + M);
    res.detail = "max_shift=" + fmt(shift) + " M=" + fmt(M);
    out.push_back(res);
  }

  double worst_binding = 0.0, worst_parseval = 0.0;
  std::size_t checked = 0;
  for (const auto& beta : basis.modes()) {
    if (beta.norm() > p.config.cutoff - p.potential.support_radius()) continue;
    try {
      const auto b = verify_binding(sol, p.potential, beta, p.params);
      worst_binding = std::max(worst_binding, b.residual);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoMatchedEigenpair) throw;
      continue;
    }
    const auto split = parseval_check(sol, beta, p.params);
    worst_parseval = std::max(worst_parseval, std::abs(split.inside_mass + split.outside_mass - 1.0));
    ++checked;
  }
  {
    auto res = named(3, "config: binding formula (interior modes)");
    res.pass = worst_binding <= 1e-8 * scale;
    res.detail = "modes=" + std::to_string(checked) + " max_residual=" + fmt(worst_binding);
    out.push_back(res);
  }
  {
    auto res = named(4, "config: Parseval completeness");
    res.pass = worst_parseval <= 1e-10 * scale;
    res.detail = "modes=" + std::to_string(checked) + " max_defect=" + fmt(worst_parseval);
    out.push_back(res);
  }
  return out;
}

inline int cmd_verify(const Prepared& p, const std::string& suite, std::ostream& out) {
  if (suite != "acceptance" && suite != "config" && suite != "all") {
    throw Error(ErrorCode::ConfigError, "unknown suite '" + suite + "'");
  }
  acceptance::Options opts;
  opts.tolerance_scale = p.config.tolerance_scale;
  opts.seed = p.config.seed;
  ordered_json report = header(p);
  ordered_json rows = ordered_json::array();
  bool all_pass = true;
  auto record = [&](const std::string& group, const acceptance::CriterionResult& r) {
    out << acceptance::format_line(r) << "\n" << std::flush;
    all_pass = all_pass && r.pass;
    rows.push_back({{"suite", group}, {"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"metrics", r.metrics}});
  };
  if (suite == "acceptance" || suite == "all") {
    acceptance::run_all(opts, [&](const acceptance::CriterionResult& r) { record("acceptance", r); });
  }
  if (suite == "config" || suite == "all") {
    for (const auto& r : config_suite(p)) record("config", r);
  }
  report["suite"] = suite;
  report["results"] = rows;
  report["all_pass"] = all_pass;
  const auto path = output_path(p, "verify.json");
  write_file(path, report.dump(2) + "\n");
  out << (all_pass ? "all criteria passed" : "some criteria FAILED") << "; report " << path.string() << "\n";
  return all_pass ? kOk : kVerifyFailed;
}

// ---- argument parsing ----

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fractional Neumann Schroedinger operator on a box: spectra, perturbation series, resonance maps"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> override_alpha;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.add_option("--seed", seed, "random seed (overrides config)");
  app.add_option("--override-alpha", override_alpha, "exponent override for visualization runs");

  auto* spectrum = app.add_subcommand("spectrum", "Galerkin eigenvalues and matched modes");
  std::vector<std::string> match_betas;
  bool csv = false;
  spectrum->add_option("--match", match_betas, "mode index to match, e.g. 2,1 (repeatable)");
  spectrum->add_flag("--csv", csv, "also write spectrum.csv");

  auto* series = app.add_subcommand("series", "perturbation series F_k for one mode");
  std::string beta_text;
  series->add_option("--beta", beta_text, "mode index, e.g. 2,1")->required();

  auto* classify = app.add_subcommand("classify", "resonance map on a 2-D grid (CSV)");
  ClassifyArgs cargs;
  classify->add_option("--origin", cargs.origin, "lower-left corner x1,x2");
  classify->add_option("--spacing", cargs.spacing, "cell spacing dx,dy");
  classify->add_option("--counts", cargs.counts, "cell counts nx,ny");
  classify->add_option("--betas", cargs.betas, "semicolon separated indices; default: the full test set");
  classify->add_option("--max-cells", cargs.max_cells, "cell cap");

  app.add_subcommand("measure", "Monte Carlo non-resonance fraction on the shell r/2 < |x| < 2r");

  auto* verify = app.add_subcommand("verify", "acceptance and configuration checks");
  std::string suite = "acceptance";
  verify->add_option("--suite", suite, "acceptance | config | all");

  app.fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    write_error(err, "UsageError", e.what(), kConfigError);
    return kConfigError;
  }

  Prepared prep;
  const int setup = guarded(err, [&] {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (!out_dir.empty()) cfg.out = out_dir;
    if (seed) cfg.seed = *seed;
    if (override_alpha) cfg.override_alpha = *override_alpha;
    prep = prepare(cfg);
    return kOk;
  });
  if (setup != kOk) return setup;

  return guarded(err, [&] {
    if (spectrum->parsed()) return cmd_spectrum(prep, match_betas, csv, out);
    if (series->parsed()) return cmd_series(prep, beta_text, out, err);
    if (classify->parsed()) return cmd_classify(prep, cargs, out);
    if (verify->parsed()) return cmd_verify(prep, suite, out);
    return cmd_measure(prep, out);
  });
}

}  // namespace fracneu::cli
