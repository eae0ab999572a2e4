#pragma once

/**
 * @file cli.hpp
 * @brief Command-line front end (needs CLI11.hpp on the include path).
 *
 * Subcommands: solve, converge, cond, enrich. Exit status 0 on success,
 * 1 on usage errors, 2 on numerical failures.
 */

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fracpg/analysis.hpp"
#include "fracpg/enriched.hpp"
#include "fracpg/errors.hpp"

namespace fracpg::cli {

enum class Format { Table, Csv };

struct RunConfig {
  std::string command;
  double alpha = 0.0;
  std::string deriv = "rl";
  int m = 0;
  std::vector<int> m_list;
  int ref_m = 5120;
  std::string b = "0";
  std::string q = "0";
  std::string f = "1";
  std::optional<double> f_origin_exponent;
  int quad_order = 16;
  std::optional<int> h1_grid;
  std::string out;
  Format format = Format::Csv;

  Derivative kind() const { return deriv == "caputo" ? Derivative::Caputo : Derivative::RiemannLiouville; }
};

/// Usage problems detected before any computation starts.
class UsageError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::string sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.5e", v);
  return buf;
}

inline std::string fixed_rate(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

/// Right-aligned columns separated by two spaces.
inline std::string align(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (width.size() <= c) width.push_back(0);
      width[c] = std::max(width[c], r[c].size());
    }
  std::ostringstream os;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) os << "  ";
      os << std::setw(static_cast<int>(width[c])) << r[c];
    }
    os << '\n';
  }
  return os.str();
}

inline std::string render(const std::vector<std::vector<std::string>>& rows, Format format) {
  if (format == Format::Table) return align(rows);
  std::ostringstream os;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << r[c];
    os << '\n';
  }
  return os.str();
}

}  // namespace detail

/// m,h,l2_error,l2_rate,h1_error,h1_rate; rates empty on the first row.
inline std::string emit_report(const ConvergenceReport& rep, Format format) {
  std::vector<std::vector<std::string>> rows{{"m", "h", "l2_error", "l2_rate", "h1_error", "h1_rate"}};
  for (std::size_t k = 0; k < rep.mesh_sizes.size(); ++k) {
    rows.push_back({std::to_string(rep.mesh_sizes[k]), detail::sci(rep.h[k]), detail::sci(rep.l2_errors[k]),
                    k ? detail::fixed_rate(rep.l2_rates[k - 1]) : "", detail::sci(rep.h1_errors[k]),
                    k ? detail::fixed_rate(rep.h1_rates[k - 1]) : ""});
  }
  std::string text = detail::render(rows, format);
  if (format == Format::Table && rep.mesh_sizes.size() > 1) {
    text += "least-squares rate: l2 " + detail::fixed_rate(rep.ls_rate_l2) + ", h1 " +
            detail::fixed_rate(rep.ls_rate_h1) + "\n";
  }
  return text;
}

inline std::string emit_enriched_report(const EnrichedReport& rep, Format format) {
  const ConvergenceReport& r = rep.regular;
  std::vector<std::vector<std::string>> rows{
      {"m", "h", "ur_l2_error", "ur_l2_rate", "ur_h1_error", "ur_h1_rate", "mu_h", "mu_error", "mu_rate"}};
  for (std::size_t k = 0; k < r.mesh_sizes.size(); ++k) {
    rows.push_back({std::to_string(r.mesh_sizes[k]), detail::sci(r.h[k]), detail::sci(r.l2_errors[k]),
                    k ? detail::fixed_rate(r.l2_rates[k - 1]) : "", detail::sci(r.h1_errors[k]),
                    k ? detail::fixed_rate(r.h1_rates[k - 1]) : "", detail::sci(rep.mu_h[k]),
                    detail::sci(rep.mu_errors[k]), k ? detail::fixed_rate(rep.mu_rates[k - 1]) : ""});
  }
  std::string text = detail::render(rows, format);
  if (format == Format::Table && r.mesh_sizes.size() > 1) {
    text += "least-squares rate: l2 " + detail::fixed_rate(r.ls_rate_l2) + ", h1 " + detail::fixed_rate(r.ls_rate_h1) +
            ", mu " + detail::fixed_rate(rep.mu_ls_rate) + "\n";
  }
  return text;
}

namespace detail {

inline ProblemSpec make_spec(const RunConfig& cfg) {
  auto parse_field = [](const char* flag, const std::string& src) {
    try {
      return expr::parse(src);
    } catch (const ParseError& e) {
      throw ParseError(e.offset(), e.expected(), std::string(flag) + ": " + e.what());
    }
  };
  validate_alpha(cfg.alpha);
  ProblemSpec spec{cfg.alpha, cfg.kind(), parse_field("--b", cfg.b), parse_field("--q", cfg.q),
                   parse_field("--f", cfg.f), 0.0};
  if (cfg.f_origin_exponent) {
    spec.f_origin_exponent = *cfg.f_origin_exponent;
  } else if (auto ps = spec.f.classify(); ps && !ps->empty()) {
    spec.f_origin_exponent = std::min(0.0, ps->min_exponent());
  }
  spec.validate();
  return spec;
}

inline void check_config(const RunConfig& cfg) {
  if (cfg.command == "enrich" && cfg.kind() != Derivative::RiemannLiouville)
    throw UsageError("enrich is only available with --deriv rl");
  if (cfg.command == "solve" && cfg.m < 4) throw UsageError("--m must be at least 4");
  if (cfg.command != "solve") {
    if (cfg.m_list.empty()) throw UsageError("--m-list is required");
    validate_mesh_list(cfg.m_list);
  }
  if ((cfg.command == "converge" || cfg.command == "enrich") && cfg.ref_m <= cfg.m_list.back())
    throw UsageError("--ref-m must exceed every entry of --m-list");
  if (cfg.quad_order < 2 || cfg.quad_order > 64) throw UsageError("--quad-order must lie in [2, 64]");
  if (cfg.h1_grid && *cfg.h1_grid < 1) throw UsageError("--h1-grid must be positive");
}

inline std::string execute(const RunConfig& cfg, const ProblemSpec& spec) {
  AssemblyOptions opts;
  opts.quad_order = cfg.quad_order;
  ReferencePolicy policy;
  policy.m_ref = cfg.ref_m;
  policy.sampled_h1_grid = cfg.h1_grid;

  if (cfg.command == "solve") {
    const FemSolution sol = solve_fbvp(spec, cfg.m, opts);
    std::vector<std::vector<std::string>> rows{{"x", "u_h"}};
    for (int i = 0; i <= cfg.m; ++i)
      rows.push_back({full(sol.mesh().node(i)), full(sol.nodal_values()[i])});
    return render(rows, cfg.format);
  }
  if (cfg.command == "converge") return emit_report(convergence_study(spec, cfg.m_list, policy, opts), cfg.format);
  if (cfg.command == "enrich") return emit_enriched_report(enriched_study(spec, cfg.m_list, policy, opts), cfg.format);

  const std::vector<double> kappa = condition_study(spec, cfg.m_list, opts);
  std::vector<std::vector<std::string>> rows{{"m", "cond"}};
  for (std::size_t k = 0; k < kappa.size(); ++k) rows.push_back({std::to_string(cfg.m_list[k]), sci(kappa[k])});
  return render(rows, cfg.format);
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Petrov-Galerkin FEM for fractional convection-diffusion problems"};
  app.require_subcommand(1);
  std::string format = "csv";

  auto common = [&](CLI::App* sub) {
    sub->add_option("--alpha", cfg.alpha, "Order of the leading derivative, in (1.5, 2)")->required();
    sub->add_option("--deriv", cfg.deriv, "rl or caputo")->check(CLI::IsMember({"rl", "caputo"}));
    sub->add_option("--b", cfg.b, "Convection coefficient b(x)");
    sub->add_option("--q", cfg.q, "Reaction coefficient q(x)");
    sub->add_option("--f", cfg.f, "Source term f(x)");
    sub->add_option("--f-origin-exponent", cfg.f_origin_exponent,
                    "f ~ x^e at 0 (default: detected for power sums, else 0)");
    sub->add_option("--quad-order", cfg.quad_order, "Gauss points per element");
    sub->add_option("--out", cfg.out, "Write results to this file instead of stdout");
    sub->add_option("--format", format, "table or csv")->check(CLI::IsMember({"table", "csv"}));
  };

  CLI::App* solve_cmd = app.add_subcommand("solve", "Solve on one mesh and print nodal values");
  common(solve_cmd);
  solve_cmd->add_option("--m", cfg.m, "Number of elements")->required();

  CLI::App* converge_cmd = app.add_subcommand("converge", "Convergence study");
  CLI::App* cond_cmd = app.add_subcommand("cond", "Condition numbers of the scaled system");
  CLI::App* enrich_cmd = app.add_subcommand("enrich", "Enriched scheme study (Riemann-Liouville)");
  for (CLI::App* sub : {converge_cmd, cond_cmd, enrich_cmd}) {
    common(sub);
    sub->add_option("--m-list", cfg.m_list, "Comma separated mesh sizes")->delimiter(',')->required();
  }
  for (CLI::App* sub : {converge_cmd, enrich_cmd}) {
    sub->add_option("--ref-m", cfg.ref_m, "Reference mesh when no closed form is available");
    sub->add_option("--h1-grid", cfg.h1_grid, "Report the H1 error sampled on a uniform grid of this size");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  for (CLI::App* sub : app.get_subcommands()) cfg.command = sub->get_name();
  cfg.format = format == "table" ? Format::Table : Format::Csv;

  std::optional<ProblemSpec> spec;
  try {
    detail::check_config(cfg);
    spec = detail::make_spec(cfg);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  std::string text;
  try {
    text = detail::execute(cfg, *spec);
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  }

  if (cfg.out.empty()) {
    out << text;
    return 0;
  }
  std::ofstream file(cfg.out, std::ios::binary);
  if (!file || !(file << text) || !file.flush()) {
    err << "error: cannot write " << cfg.out << '\n';
    return 1;
  }
  return 0;
}

}  // namespace fracpg::cli
