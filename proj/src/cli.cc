#include "ensemblectl/cli.h"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <optional>

#include <CLI11.hpp>

#include "ensemblectl/analysis.h"
#include "ensemblectl/errors.h"
#include "ensemblectl/spec_io.h"
#include "ensemblectl/synthesis.h"

namespace ensemblectl {

namespace {

int threads_from_env() {
  const char* raw = std::getenv("ENSEMBLECTL_THREADS");
  if (raw == nullptr || *raw == '\0') return 0;
  const std::string_view text(raw);
  int value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || value < 0) {
    throw SpecError("ENSEMBLECTL_THREADS must be a non-negative integer");
  }
  return value;
}

void emit(const Json& doc, std::ostream& out, const std::string& path) {
  const std::string text = doc.dump(2) + "\n";
  out << text;
  if (!path.empty()) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw SpecError("cannot write '" + path + "'");
    file << text;
    if (!file) throw SpecError("failed writing '" + path + "'");
  }
}

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

int exit_for(Verdict v) {
  switch (v) {
    case Verdict::kUec:
      return kExitUec;
    case Verdict::kNotUec:
      return kExitNotUec;
    case Verdict::kTheoremInapplicable:
      return kExitTheoremInapplicable;
    case Verdict::kInconclusive:
      return kExitInconclusive;
  }
  return kExitInconclusive;
}

int exit_for(ClosureStatus s) {
  switch (s) {
    case ClosureStatus::kPass:
      return kExitUec;
    case ClosureStatus::kFail:
      return kExitTheoremInapplicable;
    case ClosureStatus::kInconclusive:
      return kExitInconclusive;
  }
  return kExitInconclusive;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Uniform ensemble controllability of linear ensembles",
               "ensemblectl"};
  app.require_subcommand(1);

  std::string spec_path;
  std::string out_path;

  auto* analyze = app.add_subcommand("analyze", "full controllability verdict");
  std::optional<int> grid;
  std::optional<double> rank_tol;
  analyze->add_option("spec", spec_path, "spec file")->required();
  analyze->add_option("--grid", grid, "spectral sample points per interval")
      ->check(CLI::Range(16, 1 << 20));
  analyze->add_option("--rank-tol", rank_tol, "relative rank tolerance")
      ->check(CLI::PositiveNumber);
  analyze->add_option("--out", out_path, "also write the report here");

  auto* closure = app.add_subcommand("closure", "A*-closure test only");
  std::vector<int> degrees;
  closure->add_option("spec", spec_path, "spec file")->required();
  closure->add_option("--degrees", degrees, "degree caps, e.g. 4,8,16")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  closure->add_option("--out", out_path, "also write the report here");

  auto* preimages = app.add_subcommand("preimages", "preimage set of one eta");
  std::string eta_text;
  std::optional<double> root_tol;
  preimages->add_option("spec", spec_path, "spec file")->required();
  preimages->add_option("--eta", eta_text, "RE, RE+IMi or RE-IMi")->required();
  preimages->add_option("--root-tol", root_tol, "root acceptance bound")
      ->check(CLI::PositiveNumber);

  auto* synthesize =
      app.add_subcommand("synthesize", "broadcast control for a transfer");
  std::string x0_text;
  std::string xf_text;
  std::string traj_path;
  SynthesisSettings synth;
  synthesize->add_option("spec", spec_path, "spec file")->required();
  synthesize->add_option("--x0", x0_text, "initial profile E1,...,En")->required();
  synthesize->add_option("--xf", xf_text, "target profile E1,...,En")->required();
  synthesize->add_option("--time", synth.time, "horizon T")
      ->check(CLI::PositiveNumber);
  synthesize->add_option("--steps", synth.steps, "piecewise-constant steps N")
      ->check(CLI::Range(1, 1 << 16));
  synthesize->add_option("--samples", synth.samples, "design samples M")
      ->check(CLI::Range(2, 1 << 16));
  synthesize->add_option("--ridge", synth.ridge, "relative ridge weight")
      ->check(CLI::NonNegativeNumber);
  synthesize->add_option("--out", out_path, "also write the result here");
  synthesize->add_option("--traj", traj_path, "trajectory CSV");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitUec;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitUec;
  } catch (const CLI::ParseError& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return kExitInputError;
  }

  try {
    const int threads = threads_from_env();
    auto file = load_spec(spec_path);
    file.settings.threads = threads;

    if (analyze->parsed()) {
      if (grid) file.settings.grid_points = *grid;
      if (rank_tol) file.settings.rank_tol = *rank_tol;
      const auto report = uec_verdict(file.spec, file.settings);
      emit(to_json(report), out, out_path);
      return exit_for(report.verdict);
    }
    if (closure->parsed()) {
      if (!degrees.empty()) file.settings.degree_caps = degrees;
      const auto report =
          closure_sweep(file.spec, file.settings.degree_caps,
                        file.settings.closure_grid, file.settings.closure_tol,
                        file.settings.fail_floor);
      Json doc = to_json(report);
      doc["tool_version"] = kToolVersion;
      emit(doc, out, out_path);
      return exit_for(report.status);
    }
    if (preimages->parsed()) {
      if (root_tol) file.settings.spectrum.root_tol = *root_tol;
      const SpectralSolver solver(file.spec, file.settings.spectrum);
      emit(to_json(solver.preimage(parse_eta(eta_text))), out, "");
      return kExitUec;
    }
    if (synthesize->parsed()) {
      synth.threads = threads;
      const auto x0 = parse_profile(x0_text);
      const auto xf = parse_profile(xf_text);
      const auto result = synthesize_transfer(file.spec, x0, xf, synth);
      emit(to_json(result), out, out_path);
      if (!traj_path.empty()) {
        std::ofstream csv(traj_path, std::ios::binary);
        if (!csv) throw SpecError("cannot write '" + traj_path + "'");
        write_trajectory_csv(
            csv, simulate(file.spec, result.control, result.validation_grid, x0,
                          threads));
      }
      return kExitUec;
    }
  } catch (const std::exception& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return kExitInputError;
  }
  err << "error: no subcommand\n";
  return kExitInputError;
}

}  // namespace ensemblectl
