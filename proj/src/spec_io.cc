#include "ensemblectl/spec_io.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ensemblectl/errors.h"

namespace ensemblectl {

namespace {

Expr expression(const Json& value, const std::string& where) {
  if (value.is_string()) return parse_expression(value.get<std::string>());
  if (value.is_number()) {
    const double v = value.get<double>();
    if (!std::isfinite(v)) throw SpecError(where + " is not finite");
    return v < 0 ? Expr::negate(Expr::constant(-v)) : Expr::constant(v);
  }
  throw SpecError(where + " must be an expression string");
}

const Json& array_field(const Json& doc, const char* key) {
  if (!doc.contains(key)) throw SpecError(std::string("missing key '") + key + "'");
  const Json& v = doc.at(key);
  if (!v.is_array()) throw SpecError(std::string("'") + key + "' must be a list");
  return v;
}

double number(const Json& v, const std::string& where) {
  if (!v.is_number()) throw SpecError(where + " must be a number");
  return v.get<double>();
}

int positive_int(const Json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 1 ||
      v.get<long long>() > 1'000'000'000) {
    throw SpecError(where + " must be a positive integer");
  }
  return v.get<int>();
}

double positive(const Json& v, const std::string& where) {
  const double x = number(v, where);
  if (!(x > 0.0) || !std::isfinite(x)) throw SpecError(where + " must be positive");
  return x;
}

void apply_settings(const Json& s, AnalysisSettings& out) {
  if (!s.is_object()) throw SpecError("'settings' must be an object");
  static const std::set<std::string> known = {
      "grid_points", "rank_tol", "closure_tol", "degree_caps", "root_tol"};
  for (const auto& [key, value] : s.items()) {
    if (!known.contains(key)) throw SpecError("unknown settings key '" + key + "'");
  }
  if (s.contains("grid_points")) {
    out.grid_points = positive_int(s["grid_points"], "settings.grid_points");
    if (out.grid_points < 16) {
      throw SpecError("settings.grid_points must be at least 16");
    }
  }
  if (s.contains("rank_tol")) out.rank_tol = positive(s["rank_tol"], "settings.rank_tol");
  if (s.contains("closure_tol")) {
    out.closure_tol = positive(s["closure_tol"], "settings.closure_tol");
  }
  if (s.contains("root_tol")) {
    out.spectrum.root_tol = positive(s["root_tol"], "settings.root_tol");
  }
  if (s.contains("degree_caps")) {
    const Json& caps = s["degree_caps"];
    if (!caps.is_array() || caps.empty()) {
      throw SpecError("settings.degree_caps must be a non-empty list");
    }
    out.degree_caps.clear();
    for (const auto& c : caps) {
      out.degree_caps.push_back(positive_int(c, "settings.degree_caps entry"));
    }
  }
}

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string power_text(const char* prefix, int k) {
  std::string s = prefix;
  if (k == 1) s += "A ";
  if (k > 1) s += "A^" + std::to_string(k) + " ";
  return s;
}

}  // namespace

SpecFile parse_spec(const Json& doc) {
  if (!doc.is_object()) throw SpecError("spec must be a JSON object");
  static const std::set<std::string> known = {
      "name", "domain", "real_branches", "complex_blocks", "control", "settings"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) throw SpecError("unknown key '" + key + "'");
  }
  SpecFile out;
  EnsembleSpec& spec = out.spec;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw SpecError("'name' must be a string");
    spec.name = doc["name"].get<std::string>();
  }

  std::vector<Interval> intervals;
  for (const auto& pair : array_field(doc, "domain")) {
    if (!pair.is_array() || pair.size() != 2) {
      throw SpecError("domain entries must be [lo, hi] pairs");
    }
    intervals.push_back({number(pair[0], "domain bound"),
                         number(pair[1], "domain bound")});
  }
  spec.domain = Domain(std::move(intervals));

  if (doc.contains("real_branches")) {
    int j = 1;
    for (const auto& e : array_field(doc, "real_branches")) {
      spec.real_branches.push_back(
          expression(e, "real_branches[" + std::to_string(j++) + "]"));
    }
  }
  if (doc.contains("complex_blocks")) {
    int q = 1;
    for (const auto& block : array_field(doc, "complex_blocks")) {
      const std::string where = "complex_blocks[" + std::to_string(q++) + "]";
      if (!block.is_object()) throw SpecError(where + " must be an object");
      for (const auto& [key, value] : block.items()) {
        if (key != "alpha" && key != "omega") {
          throw SpecError("unknown key '" + key + "' in " + where);
        }
      }
      if (!block.contains("alpha") || !block.contains("omega")) {
        throw SpecError(where + " needs 'alpha' and 'omega'");
      }
      spec.complex_blocks.push_back({expression(block["alpha"], where + ".alpha"),
                                     expression(block["omega"], where + ".omega")});
    }
  }
  int i = 1;
  for (const auto& row : array_field(doc, "control")) {
    const std::string where = "control row " + std::to_string(i++);
    if (!row.is_array()) throw SpecError(where + " must be a list");
    std::vector<Expr> entries;
    for (const auto& e : row) entries.push_back(expression(e, where));
    spec.control.push_back(std::move(entries));
  }
  if (doc.contains("settings")) apply_settings(doc["settings"], out.settings);
  require_valid(spec);
  return out;
}

SpecFile parse_spec_text(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SpecError(std::string("malformed JSON: ") + e.what());
  }
  return parse_spec(doc);
}

SpecFile load_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("cannot open spec file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_spec_text(buf.str());
}

SpectralPoint parse_eta(std::string_view text) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto fail = [&](const char* at, const std::string& msg) -> SyntaxError {
    return SyntaxError(static_cast<std::size_t>(at - begin), msg);
  };
  auto digit_next = [&](const char* p) {
    return p < end && ((*p >= '0' && *p <= '9') || *p == '.');
  };
  SpectralPoint eta;
  const char* p = begin;
  if (p < end && *p == '+') ++p;
  if (!digit_next(p) && !(p < end && *p == '-' && digit_next(p + 1))) {
    throw fail(p, "expected a real part");
  }
  auto res = std::from_chars(p, end, eta.re);
  if (res.ec != std::errc()) throw fail(p, "malformed real part");
  p = res.ptr;
  if (p == end) return eta;
  const char sign = *p;
  if (sign != '+' && sign != '-') throw fail(p, "expected '+' or '-'");
  ++p;
  if (!digit_next(p)) throw fail(p, "expected an imaginary part");
  res = std::from_chars(p, end, eta.im);
  if (res.ec != std::errc()) throw fail(p, "malformed imaginary part");
  p = res.ptr;
  if (p == end || *p != 'i') throw fail(p, "expected 'i'");
  if (p + 1 != end) throw fail(p + 1, "unexpected trailing input");
  if (sign == '-') eta.im = -eta.im;
  if (!std::isfinite(eta.re) || !std::isfinite(eta.im)) {
    throw fail(begin, "eta must be finite");
  }
  return eta;
}

std::vector<Expr> parse_profile(std::string_view text) {
  std::vector<Expr> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos
                                              ? std::string_view::npos
                                              : comma - start);
    try {
      out.push_back(parse_expression(piece));
    } catch (const SyntaxError& e) {
      throw SyntaxError(start + e.offset(),
                        "in profile entry " + std::to_string(out.size() + 1) +
                            ": " + e.what());
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string witness_identity(const ClosureWitness& w) {
  std::string coef;
  if (std::abs(w.coefficient - 1.0) <= 1e-9) {
    coef = "";
  } else if (std::abs(w.coefficient + 1.0) <= 1e-9) {
    coef = "-";
  } else {
    coef = fmt_double(w.coefficient) + " ";
  }
  return power_text("A* ", w.power) + "b" + std::to_string(w.input + 1) +
         " = " + coef + power_text("", w.match_power) + "b" +
         std::to_string(w.match_input + 1);
}

Json to_json(const ClosureReport& report) {
  Json residuals = Json::array();
  Json witnesses = Json::array();
  Json caps = Json::array();
  for (const auto& cap : report.caps) {
    caps.push_back({{"degree_cap", cap.degree_cap},
                    {"max_residual", cap.max_residual}});
    for (const auto& r : cap.residuals) {
      residuals.push_back({{"degree_cap", cap.degree_cap},
                           {"input", r.input + 1},
                           {"power", r.power},
                           {"residual", r.residual}});
    }
    for (const auto& w : cap.witnesses) {
      witnesses.push_back({{"degree_cap", cap.degree_cap},
                           {"identity", witness_identity(w)},
                           {"input", w.input + 1},
                           {"power", w.power},
                           {"match_input", w.match_input + 1},
                           {"match_power", w.match_power},
                           {"coefficient", w.coefficient},
                           {"mismatch", w.mismatch}});
    }
  }
  return Json{{"status", to_string(report.status)},
              {"grid_points", report.grid_points},
              {"closure_tol", report.closure_tol},
              {"fail_floor", report.fail_floor},
              {"caps", caps},
              {"residuals", residuals},
              {"witnesses", witnesses}};
}

Json settings_json(const AnalysisSettings& s) {
  return Json{{"grid_points", s.grid_points},
              {"rank_tol", s.rank_tol},
              {"closure_tol", s.closure_tol},
              {"fail_floor", s.fail_floor},
              {"degree_caps", s.degree_caps},
              {"closure_grid", s.closure_grid},
              {"root_tol", s.spectrum.root_tol},
              {"bracket_points", s.spectrum.bracket_points},
              {"kappa_cap", s.spectrum.kappa_cap},
              {"conditioning_dim", s.conditioning_dim}};
}

Json to_json(const PreimageSet& pre) {
  Json members = Json::array();
  for (const auto& m : pre.members) {
    members.push_back({{"beta", m.beta}, {"branch", m.branch.label()}});
  }
  return Json{{"eta", {pre.eta.re, pre.eta.im}},
              {"kappa", pre.kappa},
              {"betas", pre.distinct_betas()},
              {"members", members}};
}

Json to_json(const AnalysisReport& report) {
  Json spectrum = Json::array();
  for (const auto& e : report.per_eta) {
    spectrum.push_back({{"eta", {e.eta.re, e.eta.im}},
                        {"kappa", e.kappa},
                        {"rank", e.rank},
                        {"required", e.required},
                        {"kalman", e.kalman},
                        {"pbh", e.pbh},
                        {"controllable", e.decision == Decision::kControllable},
                        {"conditioning_risk", e.conditioning_risk}});
  }
  Json witness = nullptr;
  if (report.witness && report.witness_system) {
    const auto& e = report.per_eta[*report.witness];
    const auto& sys = *report.witness_system;
    Json ctrb = Json::array();
    for (Eigen::Index i = 0; i < sys.ctrb.rows(); ++i) {
      std::vector<double> row(sys.ctrb.cols());
      for (Eigen::Index k = 0; k < sys.ctrb.cols(); ++k) row[k] = sys.ctrb(i, k);
      ctrb.push_back(row);
    }
    witness = {{"eta", {e.eta.re, e.eta.im}},
               {"kappa", e.kappa},
               {"betas", sys.preimage.distinct_betas()},
               {"rank", e.rank},
               {"required", e.required},
               {"kalman", e.kalman},
               {"pbh", e.pbh},
               {"ctrb", ctrb}};
  }
  return Json{{"tool_version", kToolVersion},
              {"verdict", to_string(report.verdict)},
              {"witness", witness},
              {"closure", to_json(report.closure)},
              {"spectrum", spectrum},
              {"settings_used", settings_json(report.settings)}};
}

Json to_json(const SynthesisResult& result) {
  Json values = Json::array();
  for (Eigen::Index k = 0; k < result.control.values.rows(); ++k) {
    std::vector<double> row(result.control.values.cols());
    for (Eigen::Index j = 0; j < result.control.values.cols(); ++j) {
      row[j] = result.control.values(k, j);
    }
    values.push_back(row);
  }
  return Json{{"tool_version", kToolVersion},
              {"horizon", result.control.horizon},
              {"steps", result.control.steps()},
              {"inputs", result.control.values.cols()},
              {"values", values},
              {"design_samples", result.design_grid.size()},
              {"validation_samples", result.validation_grid.size()},
              {"design_error", result.design_error},
              {"validation_error", result.validation_error},
              {"residual_norm", result.residual_norm},
              {"control_norm", result.control_norm}};
}

}  // namespace ensemblectl
