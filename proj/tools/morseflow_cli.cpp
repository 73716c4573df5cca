// morseflow command line front end.
#include "morseflow/experiment.hpp"
#include "morseflow/kernels.hpp"
#include "morseflow/serialization.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace mx = morseflow::experiment;
using morseflow::ParseError;

namespace {

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string format = "json";
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Experiment config (JSON, schema morseflow/1)");
  cmd->add_option("--out", o.out, "Output directory; stdout when omitted");
  cmd->add_option("--seed", o.seed, "Override the config seed");
  cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
}

mx::ExperimentConfig load(const CommonOptions& o) {
  mx::ExperimentConfig c;
  if (!o.config.empty()) c = mx::load_config(o.config);
  if (o.seed) mx::set_seed(c, *o.seed);
  return c;
}

int emit(const mx::CommandResult& r, const CommonOptions& o, const std::string& csv_name) {
  const std::string body = o.format == "csv" ? r.csv : r.report.dump(2) + "\n";
  if (o.out.empty()) {
    std::cout << body;
  } else {
    std::filesystem::create_directories(o.out);
    const auto path = std::filesystem::path(o.out) / (o.format == "csv" ? csv_name : std::string("report.json"));
    std::ofstream f(path, std::ios::binary);
    f << body;
    if (!f) throw std::runtime_error("cannot write " + path.string());
  }
  std::cerr << r.summary << "\n";
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  morseflow::kernels::apply_thread_limit_from_env();

  CLI::App app{"Heat flow stabilization of spectral data on RP^n and CP^n"};
  app.require_subcommand(1);

  CommonOptions analyze_opts, stabilize_opts, basis_opts;
  std::string matrix_path, analyze_space, basis_space, stabilize_space;
  int basis_level = 0;

  auto* analyze = app.add_subcommand("analyze-matrix", "Closed-form and numeric Morse analysis of a coefficient matrix");
  add_common(analyze, analyze_opts);
  analyze->add_option("--matrix", matrix_path, "Matrix file; overrides the config entry");
  analyze->add_option("--space", analyze_space, "RP<n> or CP<n>; inferred from the matrix when omitted");

  auto* stabilize = app.add_subcommand("stabilize", "Scan the heat flow for the stabilization time");
  add_common(stabilize, stabilize_opts);
  stabilize->add_option("--space", stabilize_space, "RP<n> or CP<n>; overrides the config entry");

  auto* basis = app.add_subcommand("verify-basis", "Check harmonicity, dimension and orthogonality of an eigenspace basis");
  add_common(basis, basis_opts);
  basis->add_option("--space", basis_space, "RP<n> or CP<n>; overrides the config entry");
  basis->add_option("--level", basis_level, "Eigenspace level j >= 1; overrides the config entry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? mx::kOk : mx::kParseError;
  }

  try {
    if (analyze->parsed()) {
      auto c = load(analyze_opts);
      const std::string path = matrix_path.empty() ? c.matrix_path : matrix_path;
      if (path.empty()) throw ParseError("no matrix given (--matrix or config 'matrix')");
      const auto a = morseflow::matrix_from_json(morseflow::read_json_file(path));
      morseflow::Space space = a.kind() == morseflow::SymmetryKind::Hermitian ? morseflow::Space::complex(a.size() - 1)
                                                                                : morseflow::Space::real(a.size() - 1);
      if (!analyze_space.empty()) space = morseflow::parse_space(analyze_space);
      else if (c.space) space = *c.space;
      return emit(mx::cmd_analyze_matrix(a, space, c), analyze_opts, "critical_points.csv");
    }
    if (stabilize->parsed()) {
      auto c = load(stabilize_opts);
      if (!stabilize_space.empty()) c.space = morseflow::parse_space(stabilize_space);
      return emit(mx::cmd_stabilize(c), stabilize_opts, "series.csv");
    }
    auto c = load(basis_opts);
    morseflow::Space space = basis_space.empty() ? (c.space ? *c.space : throw ParseError("no space given"))
                                                 : morseflow::parse_space(basis_space);
    const int j = basis_level > 0 ? basis_level : c.basis_level;
    return emit(mx::cmd_verify_basis(space, j), basis_opts, "basis.csv");
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mx::kParseError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return mx::kInternalError;
  }
}
