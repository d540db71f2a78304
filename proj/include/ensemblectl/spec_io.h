#pragma once

// JSON spec files, report documents and eta literals.

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ensemblectl/analysis.h"
#include "ensemblectl/model.h"
#include "ensemblectl/spectra.h"
#include "ensemblectl/synthesis.h"

namespace ensemblectl {

inline constexpr const char* kToolVersion = "0.1.0";

using Json = nlohmann::ordered_json;

struct SpecFile {
  EnsembleSpec spec;
  AnalysisSettings settings;  // defaults with the file's overrides applied
};

// Keys: name, domain, real_branches, complex_blocks, control, settings.
// Unknown keys, bad types and unparsable expressions throw SpecError (or
// SyntaxError). The result is validated.
SpecFile parse_spec(const Json& doc);
SpecFile parse_spec_text(std::string_view text);
SpecFile load_spec(const std::filesystem::path& path);

// "RE", "RE+IMi", "RE-IMi", e.g. "1.5-3i". Throws SyntaxError.
SpectralPoint parse_eta(std::string_view text);

// Comma-separated expressions, one per state.
std::vector<Expr> parse_profile(std::string_view text);

// "A* b1 = A b2" style rendering of a closure witness (one-based indices).
std::string witness_identity(const ClosureWitness& w);

Json to_json(const ClosureReport& report);
Json to_json(const AnalysisReport& report);
Json to_json(const PreimageSet& pre);
Json to_json(const SynthesisResult& result);
Json settings_json(const AnalysisSettings& settings);

}  // namespace ensemblectl
