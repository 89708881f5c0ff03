#include "qheun/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "qheun/errors.hpp"

namespace qheun {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_real(const Real& x) { return x.to_string(40); }
std::string fmt_double(double x) { return fmt_real(Real(x, 53)); }
std::string fmt_rational(const Rational& r) { return fmt_real(Real(r, 256)); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string read_params_text(const RunConfig& cfg) {
  if (cfg.params_text) return *cfg.params_text;
  if (cfg.params_path.empty()) throw DomainError("no parameter file given (--params FILE)");
  std::ifstream in(cfg.params_path);
  if (!in) throw DomainError("cannot read parameter file " + cfg.params_path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RawParams load_raw(const RunConfig& cfg) { return parse_params(read_params_text(cfg)); }

Rational parse_flag(const std::string& flag, const std::string& text) {
  try {
    return parse_rational(text);
  } catch (const ParseError& e) {
    throw DomainError(flag + " " + text + ": " + e.what());
  }
}

std::vector<Rational> q_values(const RunConfig& cfg) {
  std::vector<Rational> qs;
  if (cfg.q.empty()) return default_q_values();
  for (const std::string& s : cfg.q) {
    const Rational q = parse_flag("--q", s);
    if (!(q > 0 && q < 1)) throw DomainError("--q " + s + ": q must lie in (0,1)");
    qs.push_back(q);
  }
  return qs;
}

Real predicted_value(const PredictedRoot& r, const Rational& q, const HeunParams& p, mpfr_prec_t bits) {
  Real v = pow(Real(q, bits), r.d) * Real(r.prefactor_value(p.t1(), p.t2()), bits);
  return r.sign < 0 ? -v : v;
}

std::vector<PredictedRoot> refined_predictions(const HeunParams& p, const CaseTag& tag) {
  return refine_predictions(p, predict_roots(p, tag), multiplicity_prefactors(p, tag));
}

void require_classified(const CaseTag& tag) {
  if (!tag.classified()) throw ExcludedError(tag.reason);
}

// Maps library errors to exit codes and messages.
CommandResult guarded(const std::function<CommandResult()>& body) {
  CommandResult r;
  try {
    return body();
  } catch (const ParseError& e) {
    r.exit_code = exit_code::kUsage;
    r.err = "params:" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " + e.what();
  } catch (const ParameterError& e) {
    r.exit_code = exit_code::kUsage;
    r.err = e.what();
  } catch (const ExcludedError& e) {
    r.exit_code = exit_code::kExcluded;
    r.err = e.what();
  } catch (const DomainError& e) {
    r.exit_code = exit_code::kUsage;
    r.err = e.what();
  } catch (const Error& e) {
    r.exit_code = exit_code::kVerifyFailed;
    r.err = e.what();
  }
  if (!r.err.empty() && r.err.back() != '\n') r.err += '\n';
  return r;
}

std::string predictions_line(const std::vector<PredictedRoot>& preds) {
  std::string out;
  for (const PredictedRoot& r : preds) {
    for (int k = 0; k < r.multiplicity; ++k) {
      if (!out.empty()) out += ';';
      out += (r.sign < 0 ? "-" : "+") + to_string(r.d);
    }
  }
  return out;
}

// dN/dparam for N = -lambda1 - alpha1.
Rational degree_derivative(std::string_view name) {
  if (name == "h1" || name == "h2" || name == "alpha1") return Rational(-1, 2);
  if (name == "l1" || name == "l2" || name == "alpha2" || name == "beta") return Rational(1, 2);
  return Rational(0);
}

struct BuiltinCase {
  const char* name;
  RawParams raw;
};

std::vector<BuiltinCase> builtin_cases() {
  auto R = [](long n, long d = 1) { return Rational(n, d); };
  return {
      {"P1", {R(-5), R(1), R(0), R(1), R(0), R(1, 2), R(1, 2), R(1), R(1)}},
      {"P2", {R(0), R(1), R(1), R(4), R(0), R(-1, 2), R(1, 2), R(1), R(1)}},
      {"P3", {R(0), R(1), R(1), R(3), R(0), R(1, 2), R(1, 2), R(1), R(1)}},
      {"P4", {R(-1), R(0), R(8), R(10), R(1), R(0), R(-10), R(1), R(1)}},
  };
}

}  // namespace

RawParams parse_params(std::string_view text) {
  RawParams raw;
  std::vector<bool> seen(kParamNames.size(), false);
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const int key_col = static_cast<int>(line.find_first_not_of(" \t")) + 1;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", line_no, key_col);
    const std::string key(trim(line.substr(0, eq)));
    const auto it = std::find(kParamNames.begin(), kParamNames.end(), key);
    if (it == kParamNames.end()) throw ParseError("unknown key '" + key + "'", line_no, key_col);
    const auto idx = static_cast<std::size_t>(it - kParamNames.begin());
    if (seen[idx]) throw ParseError("duplicate key '" + key + "'", line_no, key_col);
    seen[idx] = true;
    const std::string_view rest = line.substr(eq + 1);
    const std::string_view value = trim(rest);
    const int value_col = static_cast<int>(eq + 1 + rest.find_first_not_of(" \t")) + 1;
    if (value.empty()) throw ParseError("missing value for '" + key + "'", line_no, static_cast<int>(eq) + 2);
    try {
      param_by_name(raw, key) = parse_rational(value);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no, value_col + e.column() - 1);
    }
  }
  std::string missing;
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) missing += (missing.empty() ? "" : ", ") + std::string(kParamNames[i]);
  }
  if (!missing.empty()) throw ParseError("missing key(s): " + missing, line_no, 1);
  return raw;
}

std::vector<Rational> default_q_values() { return {Rational(1, 1000), Rational(1, 10000), Rational(1, 1000000)}; }

mpfr_prec_t default_bits() {
  if (const char* env = std::getenv("QHEUN_BITS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 64) return static_cast<mpfr_prec_t>(v);
  }
  return Real::kDefaultBits;
}

Verification run_verification(const HeunParams& p, const std::vector<Rational>& qs_in, mpfr_prec_t bits,
                              double tol_exponent, double tol_prefactor) {
  std::vector<Rational> qs = qs_in;
  std::sort(qs.begin(), qs.end(), std::greater<>());
  qs.erase(std::unique(qs.begin(), qs.end()), qs.end());
  if (qs.size() < 2) throw DomainError("verification needs at least two distinct q values");

  Verification v;
  v.tag = classify(p);
  require_classified(v.tag);
  v.predictions = refined_predictions(p, v.tag);
  v.q_small = qs.back();
  v.q_large = qs[qs.size() - 2];

  const EPoly spectral = spectral_polynomial(p);
  auto roots_at = [&](const Rational& q) {
    std::vector<Real> hints;
    for (const PredictedRoot& r : v.predictions) hints.push_back(predicted_value(r, q, p, bits));
    return spectral_roots(spectral, q, p.t1(), p.t2(), bits, hints);
  };
  const RootSet large = roots_at(v.q_large);
  const RootSet small = roots_at(v.q_small);
  std::vector<RootEstimate> est = to_root_estimates(pair_roots(large.roots, small.roots, v.q_large, v.q_small),
                                                    v.q_small);
  const MatchReport report = match_predictions(est, v.predictions, p.t1(), p.t2(), tol_exponent, tol_prefactor);
  v.exponents_ok = report.pass;

  // Residuals need more digits of E than the matching does when the
  // series terms span a wide range; raise the precision until they pass.
  std::vector<Real> polished = small.roots;
  mpfr_prec_t res_bits = small.bits_used;
  std::vector<Real> residuals;
  for (;;) {
    const Real q_small(v.q_small, res_bits);
    const std::vector<Real> xs = default_sample_points(p, q_small, res_bits);
    residuals.clear();
    v.residuals_ok = true;
    for (const Real& e : polished) {
      const SeriesSolution sol = coefficients_numeric(p, e, q_small, res_bits);
      residuals.push_back(residual_check(p, sol, xs, res_bits));
      if (!(residuals.back() < Real(kResidualThreshold, 53))) v.residuals_ok = false;
    }
    if (v.residuals_ok || res_bits >= kMaxResidualBits) break;
    res_bits = std::min<mpfr_prec_t>(2 * res_bits, kMaxResidualBits);
    const RootSet finer = spectral_roots(spectral, v.q_small, p.t1(), p.t2(), res_bits, small.roots);
    if (finer.roots.size() != polished.size()) break;
    polished = finer.roots;
  }

  for (std::size_t i = 0; i < est.size(); ++i) {
    VerifiedRoot vr{est[i].value, est[i].est_exponent, std::nullopt, report.entries[i], residuals[i]};
    if (est[i].matched) vr.prediction = v.predictions[*est[i].matched];
    v.roots.push_back(std::move(vr));
  }
  return v;
}

std::string verification_csv(const Verification& v) {
  std::ostringstream os;
  os << "index,q,root_value,est_exponent,pred_exponent,pred_sign,prefactor_ratio,abs_exponent_err,residual\n";
  for (std::size_t i = 0; i < v.roots.size(); ++i) {
    const VerifiedRoot& r = v.roots[i];
    os << i + 1 << ',' << to_string(v.q_small) << ',' << fmt_real(r.value) << ',' << fmt_double(r.est_exponent)
       << ',';
    if (r.prediction) {
      os << fmt_rational(r.prediction->d) << ',' << (r.prediction->sign < 0 ? "-" : "+") << ',';
    } else {
      os << ",,";
    }
    if (r.match.prefactor_ratio) os << fmt_double(*r.match.prefactor_ratio);
    os << ',';
    if (r.prediction) os << fmt_double(r.match.abs_exponent_err);
    os << ',' << fmt_real(r.residual) << '\n';
  }
  return os.str();
}

CommandResult cmd_analyze(const RunConfig& cfg) {
  return guarded([&] {
    const HeunParams p = derive(load_raw(cfg));
    const CaseTag tag = classify(p);
    CommandResult r;
    std::ostringstream os;
    os << "lambda1=" << to_string(p.lambda1) << " N=" << p.N << ' ' << to_string(tag) << '\n';
    if (!tag.classified()) os << tag.reason << '\n';
    nlohmann::json j;
    j["lambda1"] = to_string(p.lambda1);
    j["N"] = p.N;
    j["regime"] = to_string(tag.regime);
    j["family"] = to_string(tag.family);
    if (tag.regime == Regime::R31 || tag.regime == Regime::R32) j["subcase"] = to_string(tag.subcase);
    if (tag.subcase == Subcase::III1 || tag.subcase == Subcase::III2) j["m"] = tag.m;
    if (tag.family == Regime::R33) j["K"] = tag.K;
    if (!tag.reason.empty()) j["reason"] = tag.reason;
    j["warnings"] = nlohmann::json::array();
    for (const BoundaryProximity& b : boundary_proximity(p, Rational(1, 4))) {
      const std::string w = b.quantity + " = " + to_string(b.value) + " is within " + to_string(b.distance) +
                            " of the boundary value " + to_string(b.boundary);
      os << "warning: " << w << '\n';
      j["warnings"].push_back(w);
    }
    r.out = os.str();
    r.files["analyze.json"] = j.dump(2) + "\n";
    r.exit_code = tag.classified() ? exit_code::kOk : exit_code::kExcluded;
    return r;
  });
}

CommandResult cmd_predict(const RunConfig& cfg) {
  return guarded([&] {
    const HeunParams p = derive(load_raw(cfg));
    const CaseTag tag = classify(p);
    require_classified(tag);
    const std::vector<PredictedRoot> preds = refined_predictions(p, tag);
    CommandResult r;
    std::ostringstream os, csv;
    os << "lambda1=" << to_string(p.lambda1) << " N=" << p.N << ' ' << to_string(tag) << '\n';
    csv << "index,sign,exponent,prefactor,explicit_prefactor,multiplicity,sharp\n";
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const PredictedRoot& pr = preds[i];
      os << "E ~ " << to_string(pr) << '\n';
      csv << i + 1 << ',' << (pr.sign < 0 ? "-" : "+") << ',' << to_string(pr.d) << ',' << to_string(pr.prefactor)
          << ',' << (pr.explicit_prefactor ? fmt_double(*pr.explicit_prefactor) : "") << ',' << pr.multiplicity
          << ',' << (pr.sharp ? "true" : "false") << '\n';
    }
    r.out = os.str();
    r.files["predictions.csv"] = csv.str();
    return r;
  });
}

CommandResult cmd_roots(const RunConfig& cfg) {
  return guarded([&] {
    const HeunParams p = derive(load_raw(cfg));
    const EPoly spectral = spectral_polynomial(p);
    CommandResult r;
    std::ostringstream os, csv;
    csv << "q,index,root_value,log10_q,log10_abs_root\n";
    for (const Rational& q : q_values(cfg)) {
      const RootSet rs = spectral_roots(spectral, q, p.t1(), p.t2(), cfg.bits);
      const Real log10q = log10(Real(q, rs.bits_used));
      os << "q=" << to_string(q) << " bits=" << rs.bits_used << '\n';
      for (std::size_t i = 0; i < rs.roots.size(); ++i) {
        const Real& e = rs.roots[i];
        os << "  E_" << i + 1 << " = " << e.to_string(20) << '\n';
        csv << to_string(q) << ',' << i + 1 << ',' << fmt_real(e) << ',' << fmt_real(log10q) << ','
            << (e.is_zero() ? std::string() : fmt_real(log10(abs(e)))) << '\n';
      }
    }
    r.out = os.str();
    r.files["roots_by_q.csv"] = csv.str();
    return r;
  });
}

CommandResult cmd_verify(const RunConfig& cfg) {
  return guarded([&] {
    const HeunParams p = derive(load_raw(cfg));
    const Verification v = run_verification(p, q_values(cfg), cfg.bits, cfg.tol_exponent, cfg.tol_prefactor);
    CommandResult r;
    std::ostringstream os;
    os << "lambda1=" << to_string(p.lambda1) << " N=" << p.N << ' ' << to_string(v.tag) << '\n';
    os << "slopes over q=" << to_string(v.q_large) << ", " << to_string(v.q_small) << '\n';
    for (std::size_t i = 0; i < v.roots.size(); ++i) {
      const VerifiedRoot& vr = v.roots[i];
      os << "  E_" << i + 1 << " = " << vr.value.to_string(12) << "  slope " << vr.est_exponent;
      if (vr.prediction) os << "  predicted " << to_string(*vr.prediction);
      if (vr.match.prefactor_ratio) os << "  ratio " << *vr.match.prefactor_ratio;
      os << "  residual " << vr.residual.to_string(3) << (vr.match.ok ? "" : "  MISMATCH " + vr.match.note)
         << '\n';
    }
    os << (v.pass() ? "verification passed" : "verification FAILED") << '\n';
    r.out = os.str();
    r.files["roots.csv"] = verification_csv(v);
    r.exit_code = v.pass() ? exit_code::kOk : exit_code::kVerifyFailed;
    return r;
  });
}

CommandResult cmd_sweep(const RunConfig& cfg) {
  return guarded([&] {
    const RawParams base = load_raw(cfg);
    if (std::find(kParamNames.begin(), kParamNames.end(), cfg.axis) == kParamNames.end()) {
      throw DomainError("--axis must name one of the nine parameters");
    }
    const Rational from = parse_flag("--from", cfg.from);
    const Rational to = parse_flag("--to", cfg.to);
    const Rational step = parse_flag("--step", cfg.step);
    if (!(step > 0)) throw DomainError("--step must be positive");
    Rational ratio(0);
    if (!cfg.compensate.empty()) {
      if (cfg.compensate == cfg.axis) throw DomainError("--compensate must differ from --axis");
      const Rational dc = degree_derivative(cfg.compensate);
      if (dc == 0) throw DomainError("--compensate " + cfg.compensate + " does not move N");
      ratio = -degree_derivative(cfg.axis) / dc;
    }
    const std::vector<Rational> qs = q_values(cfg);

    std::vector<Rational> grid;
    for (Rational v = from; v <= to; v += step) grid.push_back(v);

    std::vector<std::string> rows(grid.size());
    auto run_point = [&](std::size_t i) {
      RawParams raw = base;
      param_by_name(raw, cfg.axis) = grid[i];
      std::string comp;
      if (!cfg.compensate.empty()) {
        const Rational shift = ratio * (grid[i] - param_by_name(base, cfg.axis));
        param_by_name(raw, cfg.compensate) += shift;
        comp = to_string(param_by_name(raw, cfg.compensate));
      }
      std::string lambda1 = to_string(lambda1_of(raw)), n, regime, detail, predicted, verified, note;
      try {
        const HeunParams p = derive(raw);
        n = std::to_string(p.N);
        const CaseTag tag = classify(p);
        regime = to_string(tag.regime);
        if (tag.regime == Regime::R31 || tag.regime == Regime::R32) {
          detail = to_string(tag.subcase);
          if (tag.m > 0 || tag.subcase == Subcase::III1) detail += " m=" + std::to_string(tag.m);
        } else if (tag.regime == Regime::R33) {
          detail = "K=" + std::to_string(tag.K);
        } else {
          detail = "family=" + to_string(tag.family);
          note = tag.reason;
        }
        if (tag.classified()) {
          predicted = predictions_line(refined_predictions(p, tag));
          try {
            const Verification v = run_verification(p, qs, cfg.bits, cfg.tol_exponent, cfg.tol_prefactor);
            verified = v.pass() ? "true" : "false";
          } catch (const Error& e) {
            verified = "false";
            note = e.what();
          }
        }
      } catch (const ParameterError& e) {
        regime = "Invalid";
        note = e.what();
      } catch (const Error& e) {
        note = e.what();
      }
      std::ostringstream row;
      row << i + 1 << ',' << to_string(grid[i]) << ',' << comp << ',' << lambda1 << ',' << n << ',' << regime << ','
          << csv_field(detail) << ',' << csv_field(predicted) << ',' << verified << ',' << csv_field(note) << '\n';
      rows[i] = row.str();
    };

    std::atomic<std::size_t> next{0};
    const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                              static_cast<unsigned>(grid.size())));
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers && !grid.empty(); ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) run_point(i);
      });
    }
    pool.clear();

    CommandResult r;
    std::string csv = "index," + cfg.axis + "," + (cfg.compensate.empty() ? "compensated" : cfg.compensate) +
                      ",lambda1,N,regime,detail,predicted_exponents,verified,note\n";
    for (const std::string& row : rows) csv += row;
    r.files["sweep.csv"] = csv;
    r.out = std::to_string(grid.size()) + " grid points\n";
    return r;
  });
}

CommandResult cmd_selftest(const RunConfig& cfg) {
  return guarded([&] {
    CommandResult r;
    std::ostringstream os;
    bool all = true;
    for (const BuiltinCase& c : builtin_cases()) {
      bool ok = false;
      std::string detail;
      try {
        const HeunParams p = derive(c.raw);
        const Verification v =
            run_verification(p, default_q_values(), cfg.bits, cfg.tol_exponent, cfg.tol_prefactor);
        ok = v.pass();
        detail = to_string(v.tag) + " roots=" + std::to_string(v.roots.size());
      } catch (const Error& e) {
        detail = e.what();
      }
      all = all && ok;
      os << (ok ? "PASS " : "FAIL ") << c.name << ' ' << detail << '\n';
    }
    r.out = os.str();
    r.exit_code = all ? exit_code::kOk : exit_code::kVerifyFailed;
    return r;
  });
}

CommandResult run_command(std::string_view name, const RunConfig& cfg) {
  if (name == "analyze") return cmd_analyze(cfg);
  if (name == "predict") return cmd_predict(cfg);
  if (name == "roots") return cmd_roots(cfg);
  if (name == "verify") return cmd_verify(cfg);
  if (name == "sweep") return cmd_sweep(cfg);
  if (name == "selftest") return cmd_selftest(cfg);
  CommandResult r;
  r.exit_code = exit_code::kUsage;
  r.err = "unknown command '" + std::string(name) + "'\n";
  return r;
}

void write_files(const CommandResult& r, const std::string& dir) {
  if (r.files.empty()) return;
  const std::filesystem::path root = dir.empty() ? std::filesystem::path(".") : std::filesystem::path(dir);
  std::filesystem::create_directories(root);
  for (const auto& [name, content] : r.files) {
    std::ofstream out(root / name, std::ios::binary);
    if (!out) throw DomainError("cannot write " + (root / name).string());
    out << content;
  }
}

}  // namespace qheun
