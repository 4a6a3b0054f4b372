#include "krylovflow/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "krylovflow/bound.hpp"
#include "krylovflow/csv.hpp"
#include "krylovflow/lindbladian.hpp"
#include "krylovflow/version.hpp"

namespace krylovflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------- config

[[noreturn]] void config_error(const std::string& what) {
  fail(ErrorKind::kInvalidArgument, "config: " + what);
}

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.count(item.key())) config_error("unknown key '" + where + "." + item.key() + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    config_error("'" + where + "." + key + "' has the wrong type");
  }
}

// JSON numbers only; integers are accepted for doubles.
void read_number(const json& obj, const char* key, const std::string& where, double& out) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_number()) config_error("'" + where + "." + key + "' must be a number");
  out = obj.at(key).get<double>();
}

void read_int(const json& obj, const char* key, const std::string& where, int& out) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_number_integer()) config_error("'" + where + "." + key + "' must be an integer");
  out = obj.at(key).get<int>();
}

ContinuumCase parse_case(const std::string& s) {
  if (s == "linear_a") return ContinuumCase::kLinearA;
  if (s == "constant_a") return ContinuumCase::kConstantA;
  config_error("continuum case must be 'linear_a' or 'constant_a', got '" + s + "'");
}

std::vector<ContinuumSpec> default_continuum_cases() {
  std::vector<ContinuumSpec> out;
  for (ContinuumCase k : {ContinuumCase::kLinearA, ContinuumCase::kConstantA}) {
    for (double alpha : {0.01, 3.0}) out.push_back({k, alpha, 2.0, 1.0});
  }
  return out;
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty()) return path;
  fs::path p(path);
  if (p.is_absolute()) return p.lexically_normal().string();
  return (fs::path(base_dir) / p).lexically_normal().string();
}

json config_to_json(const RunConfig& c) {
  json j;
  j["config_version"] = kConfigVersion;
  j["model"] = {{"sites", c.model.sites},
                {"g", c.model.g},
                {"h", c.model.h},
                {"alpha", c.model.alpha},
                {"gamma", c.model.gamma},
                {"boundary_sites", c.model.boundary_sites},
                {"bulk_sites", c.model.bulk_sites},
                {"allow_overlap", c.model.allow_overlap}};
  j["seed"] = {{"kind", c.seed_kind == SeedKind::kUniform ? "uniform" : "custom"},
               {"file", c.seed_file}};
  j["bilanczos"] = {{"max_iter", c.bilanczos.max_iter},
                    {"breakdown_tol", c.bilanczos.breakdown_tol},
                    {"reorth_passes", c.bilanczos.reorth_passes},
                    {"store_bases", c.bilanczos.store_bases}};
  j["structure"] = {{"coefficients", c.structure_coefficients}, {"tol", c.structure_tol}};
  j["evolution"] = {{"t_max", c.t_max},
                    {"n_samples", c.n_samples},
                    {"rel_tol", c.step.rel_tol},
                    {"tail_cutoff", c.step.tail_cutoff},
                    {"max_halvings", c.step.max_halvings}};
  j["bound"] = {{"tol", c.bound_tol}, {"mt_tol", c.mt_tol}, {"mt_floor", c.mt_floor}};
  j["oracle"] = {{"t_compare", c.oracle_t_compare}};
  j["filter"] = {{"outlier_window", c.filter.outlier_window},
                 {"outlier_k", c.filter.outlier_k},
                 {"smooth_window", c.filter.smooth_window},
                 {"input", c.filter_input}};
  json cases = json::array();
  for (const auto& s : c.continuum_cases) {
    cases.push_back({{"case", to_string(s.kind)}, {"alpha", s.alpha}, {"beta", s.beta}, {"c", s.c}});
  }
  j["continuum"] = {{"t_max", c.continuum_t_max},
                    {"n_samples", c.continuum_samples},
                    {"rel_tol", c.continuum_rel_tol},
                    {"cases", cases}};
  j["saturation"] = {{"alpha0", c.saturation_alpha0},
                     {"gamma0", c.saturation_gamma0},
                     {"krylov_dim", c.saturation_krylov_dim},
                     {"t_max", c.saturation_t_max},
                     {"n_samples", c.saturation_samples}};
  j["output_dir"] = c.output_dir;
  return j;
}

// ---------------------------------------------------------------- output

// Folds -0.0 into 0.0 throughout, so a value's text does not depend on how
// a zero was reached (fresh run vs. coefficients reread from CSV).
json canonical(json j) {
  if (j.is_number_float()) {
    if (j.get<double>() == 0.0) j = 0.0;
  } else if (j.is_structured()) {
    for (auto& v : j) v = canonical(std::move(v));
  }
  return j;
}

/// Writes artifacts atomically, each with a `<name>.meta.json` sidecar, and
/// remembers them so a failed run can remove what it produced.
class ArtifactWriter {
 public:
  ArtifactWriter(fs::path dir, json config, std::string command)
      : dir_(std::move(dir)), config_(std::move(config)), command_(std::move(command)) {}

  const fs::path& dir() const { return dir_; }
  const std::vector<std::string>& written() const { return written_; }

  void csv(const std::string& name, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& columns, json extra = json::object()) {
    std::ostringstream out;
    write_csv(out, header, columns);
    extra["columns"] = header;
    extra["number_format"] = "%.17g";
    file(name, out.str(), std::move(extra));
  }

  void json_doc(const std::string& name, const json& doc, json extra = json::object()) {
    file(name, canonical(doc).dump(2) + "\n", std::move(extra));
  }

  /// Pre-formatted content; `extra` should describe the format.
  void text(const std::string& name, const std::string& content, json extra) {
    file(name, content, std::move(extra));
  }

  /// Removes every file this writer produced.
  void remove_all() noexcept {
    for (const auto& name : written_) {
      std::error_code ec;
      fs::remove(dir_ / name, ec);
    }
    written_.clear();
  }

 private:
  void file(const std::string& name, const std::string& content, json extra) {
    put(name, content);
    json meta;
    meta["artifact"] = name;
    meta["software"] = "krylovflow";
    meta["version"] = kVersion;
    meta["command"] = command_;
    meta["config"] = config_;
    meta["details"] = std::move(extra);
    put(name + ".meta.json", canonical(std::move(meta)).dump(2) + "\n");
  }

  void put(const std::string& name, const std::string& content) {
    const fs::path target = dir_ / name;
    const fs::path tmp = dir_ / (name + ".partial");
    std::error_code ec;
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) fail(ErrorKind::kIo, "cannot write " + tmp.string());
      out << content;
      out.flush();
      if (!out) {
        out.close();
        fs::remove(tmp, ec);
        fail(ErrorKind::kIo, "write failed for " + tmp.string());
      }
    }
    fs::rename(tmp, target, ec);
    if (ec) {
      fs::remove(tmp, ec);
      fail(ErrorKind::kIo, "cannot rename into " + target.string());
    }
    if (std::find(written_.begin(), written_.end(), name) == written_.end()) {
      written_.push_back(name);
    }
  }

  fs::path dir_;
  json config_;
  std::string command_;
  std::vector<std::string> written_;
};

std::optional<json> read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  try {
    return json::parse(in);
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

json finite_or_null(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x == 0.0 ? 0.0 : x;  // no "-0.0" in summaries
}

std::string seconds(std::chrono::steady_clock::time_point since) {
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f s", s);
  return buf;
}

double rel_dev(double x, double ref) {
  const double d = std::abs(x - ref);
  return d == 0.0 ? 0.0 : d / std::max(std::abs(ref), 1e-12);
}

// ---------------------------------------------------------------- stages

struct Problem {
  Superoperator op;
  ComplexVector seed;
  bool closed = false;
};

class Pipeline {
 public:
  Pipeline(const RunConfig& cfg, ArtifactWriter& out, std::ostream* log)
      : cfg_(cfg), out_(out), log_(log) {}

  void run(Command c) {
    switch (c) {
      case Command::kLanczos: lanczos(); break;
      case Command::kEvolve: evolve(); break;
      case Command::kBound: bound(); break;
      case Command::kOracle: oracle(); break;
      case Command::kContinuum: continuum(); break;
      case Command::kSaturation: saturation(); break;
      case Command::kFilter: filter(); break;
      case Command::kFull:
        lanczos();
        evolve();
        bound();
        if (cfg_.model.sites <= kMaxOracleSites) {
          oracle();
        } else {
          note("oracle: skipped, N = " + std::to_string(cfg_.model.sites) + " exceeds " +
               std::to_string(kMaxOracleSites));
        }
        continuum();
        saturation();
        filter();
        break;
    }
  }

 private:
  void note(const std::string& line) {
    if (log_) *log_ << line << "\n";
  }

  const Problem& problem() {
    if (!problem_) {
      cfg_.model.validate();
      Problem p;
      const ComplexMatrix H = build_tfim(cfg_.model);
      const auto jumps = build_jump_operators(cfg_.model);
      p.closed = jumps.empty();
      p.op = build_lindbladian(H, jumps);
      p.seed = cfg_.seed_kind == SeedKind::kUniform ? uniform_seed(cfg_.model.hilbert_dim())
                                                     : custom_seed();
      problem_ = std::move(p);
    }
    return *problem_;
  }

  ComplexVector custom_seed() const {
    std::ifstream in(cfg_.seed_file);
    if (!in) fail(ErrorKind::kIo, "cannot open seed file " + cfg_.seed_file);
    const CsvTable t = read_csv(in);
    const auto r = t.column("row"), c = t.column("col"), re = t.column("re"), im = t.column("im");
    const int d = cfg_.model.hilbert_dim();
    ComplexMatrix m = ComplexMatrix::Zero(d, d);
    for (const auto& row : t.rows) {
      const double ri = parse_double(row[r]);
      const double ci = parse_double(row[c]);
      require(ri == std::floor(ri) && ci == std::floor(ci) && ri >= 0 && ci >= 0 && ri < d && ci < d,
              "seed file: index out of range");
      m(static_cast<int>(ri), static_cast<int>(ci)) += Complex(parse_double(row[re]), parse_double(row[im]));
    }
    ComplexVector v = vectorize(m);
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) fail(ErrorKind::kInvalidArgument, "seed file: zero or non-finite operator");
    return v / n;
  }

  json lanczos_key() const {
    const json j = config_to_json(cfg_);
    return {{"model", j["model"]}, {"seed", j["seed"]}, {"bilanczos", j["bilanczos"]}};
  }

  json evolve_key() const {
    json k = lanczos_key();
    k["evolution"] = config_to_json(cfg_)["evolution"];
    return k;
  }

  bool sidecar_matches(const std::string& name, const json& key) const {
    auto meta = read_json_file(out_.dir() / (name + ".meta.json"));
    return meta && meta->contains("details") && (*meta)["details"].value("stage_key", json()) == key &&
           (*meta)["version"] == kVersion;
  }

  TridiagonalData run_lanczos(bool need_bases) {
    const Problem& p = problem();
    BiLanczosConfig bc = cfg_.bilanczos;
    if (need_bases) bc.store_bases = true;
    auto t0 = std::chrono::steady_clock::now();
    TridiagonalData tri = p.closed ? hermitian_lanczos(p.op, p.seed, bc) : bilanczos(p.op, p.seed, p.seed, bc);
    note("lanczos: K = " + std::to_string(tri.krylov_dim()) + ", " + to_string(tri.termination) + ", " +
         seconds(t0));
    if (tri.residual_biortho > 1e-6) {
      fail(ErrorKind::kInvariant, "lanczos: bi-orthogonality lost (max |Q^dag P - I| = " +
                                      format_double(tri.residual_biortho) + ")");
    }
    return tri;
  }

  void lanczos() {
    TridiagonalData tri = run_lanczos(false);
    const StructureReport s = check_open_structure(tri, cfg_.structure_tol, cfg_.structure_coefficients);
    std::ostringstream csv;
    write_coefficients_csv(csv, tri);
    const json key = lanczos_key();
    json details = {{"stage_key", key},
                    {"termination", to_string(tri.termination)},
                    {"krylov_dim", tri.krylov_dim()},
                    {"columns", {"n", "a_re", "a_im", "b_re", "b_im", "c_re", "c_im"}},
                    {"number_format", "%.17g"}};
    out_.text("coefficients.csv", csv.str(), details);

    int im_negative = 0;
    for (int n = 0; n < s.coefficients_checked; ++n) {
      if (tri.a[n].imag() < -1e-10) ++im_negative;
    }
    json doc = {{"label", s.label},
                {"dissipative_structure", s.dissipative},
                {"closed_structure", s.closed},
                {"coefficients_checked", s.coefficients_checked},
                {"tol", cfg_.structure_tol},
                {"max_abs_b_minus_c", s.max_bc_diff},
                {"max_abs_b", s.max_abs_b},
                {"max_abs_re_a", s.max_re_a},
                {"max_abs_im_a", s.max_im_a},
                {"min_im_a", s.min_im_a},
                {"count_im_a_below_minus_1e-10", im_negative},
                {"krylov_dim", tri.krylov_dim()},
                {"termination", to_string(tri.termination)},
                {"residual_biortho", tri.residual_biortho},
                {"residual_tridiag", tri.residual_tridiag},
                {"closed_system", problem().closed}};
    out_.json_doc("structure.json", doc, {{"stage_key", key}});
    tri_ = std::move(tri);
  }

  const TridiagonalData& tri() {
    if (tri_) return *tri_;
    const std::string name = "coefficients.csv";
    if (sidecar_matches(name, lanczos_key())) {
      std::ifstream in(out_.dir() / name);
      TridiagonalData t = read_coefficients_csv(in);
      auto meta = read_json_file(out_.dir() / (name + ".meta.json"));
      const std::string term = (*meta)["details"].value("termination", "max_iter");
      t.termination = term == "breakdown"           ? Termination::kBreakdown
                      : term == "serious_breakdown" ? Termination::kSeriousBreakdown
                                                    : Termination::kMaxIter;
      note("lanczos: reusing " + (out_.dir() / name).string());
      tri_ = std::move(t);
      return *tri_;
    }
    lanczos();
    return *tri_;
  }

  struct Evolved {
    MomentSeries m;
    json summary;
  };

  void evolve() {
    const TridiagonalData& t = tri();
    const Series grid = uniform_grid(cfg_.t_max, cfg_.n_samples);
    auto t0 = std::chrono::steady_clock::now();
    ChainTrajectory traj = evolve_chain(t, grid, cfg_.step);
    MomentSeries m = moments(traj);
    note("evolve: " + std::to_string(traj.steps_per_interval) + " steps per interval, " + seconds(t0));

    double max_tail = 0.0, max_cim = 0.0;
    for (double x : traj.tail_mass) max_tail = std::max(max_tail, x);
    for (double x : m.C_imag) max_cim = std::max(max_cim, std::abs(x));
    const auto peak = std::max_element(m.C.begin(), m.C.end());
    const std::size_t ip = static_cast<std::size_t>(peak - m.C.begin());
    const double c_end = m.C.back();
    json summary = {{"samples", m.size()},
                    {"steps_per_interval", traj.steps_per_interval},
                    {"exact_krylov", traj.exact_krylov},
                    {"truncation_safe", traj.truncation_safe},
                    {"max_tail_mass", max_tail},
                    {"max_abs_C_imag", max_cim},
                    {"bilinear_gap", m.bilinear_gap()},
                    {"C_peak", *peak},
                    {"t_peak", m.t[ip]},
                    {"C_final", c_end},
                    {"decay_from_peak", *peak > 0.0 ? (*peak - c_end) / *peak : 0.0},
                    {"warnings", m.warnings}};
    const json key = evolve_key();
    out_.csv("moments.csv", {"t", "C", "P", "M2", "Ctilde"}, {m.t, m.C, m.P, m.M2, m.Ctilde},
             {{"stage_key", key}});
    out_.csv("moments_derivatives.csv", {"t", "dC", "dP"}, {m.t, *m.dC, *m.dP},
             {{"stage_key", key}, {"source", "chain recursion"}});
    if (m.bilinear_gap() > 1e-8) {
      out_.csv("moments_bilinear.csv", {"t", "P_bilinear", "C_imag"}, {m.t, m.P_bilinear, m.C_imag},
               {{"stage_key", key}});
    }
    out_.json_doc("moments.json", summary, {{"stage_key", key}});
    moments_ = Evolved{std::move(m), std::move(summary)};
  }

  const Evolved& evolved() {
    if (moments_) return *moments_;
    const json key = evolve_key();
    if (sidecar_matches("moments.csv", key) && sidecar_matches("moments_derivatives.csv", key) &&
        sidecar_matches("moments.json", key)) {
      std::ifstream in(out_.dir() / "moments.csv");
      std::ifstream din(out_.dir() / "moments_derivatives.csv");
      const CsvTable a = read_csv(in);
      const CsvTable d = read_csv(din);
      require(a.rows.size() == d.rows.size(), "moments: derivative file length mismatch");
      MomentSeries m;
      Series dc, dp;
      for (std::size_t i = 0; i < a.rows.size(); ++i) {
        m.t.push_back(parse_double(a.rows[i][a.column("t")]));
        m.C.push_back(parse_double(a.rows[i][a.column("C")]));
        m.P.push_back(parse_double(a.rows[i][a.column("P")]));
        m.M2.push_back(parse_double(a.rows[i][a.column("M2")]));
        m.Ctilde.push_back(parse_double(a.rows[i][a.column("Ctilde")]));
        dc.push_back(parse_double(d.rows[i][d.column("dC")]));
        dp.push_back(parse_double(d.rows[i][d.column("dP")]));
      }
      m.dC = std::move(dc);
      m.dP = std::move(dp);
      auto summary = read_json_file(out_.dir() / "moments.json");
      note("evolve: reusing " + (out_.dir() / "moments.csv").string());
      moments_ = Evolved{std::move(m), summary.value_or(json::object())};
      return *moments_;
    }
    evolve();
    return *moments_;
  }

  void bound() {
    const Evolved& e = evolved();
    const TridiagonalData& t = tri();
    require(t.krylov_dim() >= 2, "bound: need a chain with at least one hopping coefficient");
    const Complex b1 = t.b[0];
    const BoundReport rep = dispersion_bound_check(e.m, b1, cfg_.bound_tol);
    json renorm;
    try {
      const RenormalizedBound rb = renormalized_bound_check(e.m, b1, cfg_.bound_tol);
      renorm = {{"identity_residual", rb.identity_residual}, {"holds", rb.report.holds()}};
    } catch (const Error& err) {
      if (err.kind() == ErrorKind::kInvariant) throw;
      renorm = {{"error", err.what()}};
    }
    const auto [rlo, rhi] = rep.saturation_range();
    json doc = {{"verdict", rep.holds() ? "holds" : "violated"},
                {"max_violation", finite_or_null(rep.max_violation)},
                {"max_rhs", rep.max_rhs},
                {"max_violation_over_max_rhs", finite_or_null(rep.max_rhs > 0 ? rep.max_violation / rep.max_rhs : 0.0)},
                {"tol", rep.tol},
                {"violations", rep.violations.size()},
                {"noise_violations", rep.noise_violations.size()},
                {"saturation_ratio_range", {finite_or_null(rlo), finite_or_null(rhi)}},
                {"b1", {b1.real(), b1.imag()}},
                {"liouvillian_variance_t0",
                 [&] {
                   const Complex v = liouvillian_variance_t0(t.a[0], t.b[0], t.c[0]);
                   return json{v.real(), v.imag()};
                 }()},
                {"derivatives", to_string(rep.derivatives)},
                {"renormalized", renorm},
                {"truncation_safe", e.summary.value("truncation_safe", false)}};
    if (!rep.violations.empty()) {
      doc["first_violation_t"] = rep.t[rep.violations.front()];
      doc["last_violation_t"] = rep.t[rep.violations.back()];
    }
    if (problem().closed) {
      const MandelstamTamm mt = mandelstam_tamm_tau(rep, b1, cfg_.mt_tol, cfg_.mt_floor);
      doc["mandelstam_tamm"] = {{"min_tau_b1", finite_or_null(mt.min_product)},
                                {"holds", mt.holds},
                                {"noise_floor", mt.noise_floor}};
    }
    note(std::string("bound: ") + (rep.holds() ? "holds" : "violated") + ", max violation " +
         format_double(rep.max_violation));
    out_.csv("bound.csv", {"t", "lhs", "rhs", "margin", "tau_K"},
             {rep.t, rep.lhs, rep.rhs, rep.margin, rep.tau_K});
    out_.json_doc("bound.json", doc);
  }

  void oracle() {
    const int n = cfg_.model.sites;
    if (n > kMaxOracleSites) {
      fail(ErrorKind::kInvalidArgument, "oracle: N = " + std::to_string(n) + " exceeds the oracle limit of " +
                                            std::to_string(kMaxOracleSites));
    }
    if (!tri_ || !tri_->p_basis) tri_ = run_lanczos(true);
    const TridiagonalData& t = *tri_;
    const Problem& p = problem();
    const Series grid = uniform_grid(cfg_.t_max, cfg_.n_samples);
    const MomentSeries chain = moments(evolve_chain(t, grid, cfg_.step));
    const MomentSeries direct = direct_evolution_oracle(p.op, p.seed, t, grid);
    Series relC, relP, relM2;
    double wC = 0, wP = 0, wM = 0, aC = 0, aP = 0, aM = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      relC.push_back(rel_dev(chain.C[i], direct.C[i]));
      relP.push_back(rel_dev(chain.P[i], direct.P[i]));
      relM2.push_back(rel_dev(chain.M2[i], direct.M2[i]));
      aC = std::max(aC, relC.back());
      aP = std::max(aP, relP.back());
      aM = std::max(aM, relM2.back());
      if (grid[i] <= cfg_.oracle_t_compare) {
        wC = std::max(wC, relC.back());
        wP = std::max(wP, relP.back());
        wM = std::max(wM, relM2.back());
      }
    }
    out_.csv("oracle.csv",
             {"t", "C_chain", "P_chain", "M2_chain", "C_oracle", "P_oracle", "M2_oracle", "relC", "relP", "relM2"},
             {grid, chain.C, chain.P, chain.M2, direct.C, direct.P, direct.M2, relC, relP, relM2},
             {{"relative_floor", 1e-12}});
    out_.json_doc("oracle.json", {{"t_compare", cfg_.oracle_t_compare},
                                  {"max_relC_window", wC},
                                  {"max_relP_window", wP},
                                  {"max_relM2_window", wM},
                                  {"max_relC_all", aC},
                                  {"max_relP_all", aP},
                                  {"max_relM2_all", aM}});
    note("oracle: max rel dev (t <= " + format_double(cfg_.oracle_t_compare) + ") C " + format_double(wC) +
         ", P " + format_double(wP));
  }

  void continuum() {
    const Series grid = uniform_grid(cfg_.continuum_t_max, cfg_.continuum_samples);
    json cases = json::array();
    for (std::size_t k = 0; k < cfg_.continuum_cases.size(); ++k) {
      const ContinuumSpec& s = cfg_.continuum_cases[k];
      const ContinuumReport r = continuum_vs_closed_form_report(s, grid, cfg_.continuum_rel_tol);
      const std::string name = "continuum_" + std::to_string(k) + "_" + to_string(s.kind) + ".csv";
      const json spec = {{"case", to_string(s.kind)}, {"alpha", s.alpha}, {"beta", s.beta}, {"c", s.c}};
      out_.csv(name, {"t", "C_closed", "P_closed", "C_char", "P_char", "relC", "relP"},
               {r.t, r.C_closed, r.P_closed, r.C_char, r.P_char, r.relC, r.relP}, {{"case", spec}});
      cases.push_back({{"file", name}, {"case", spec}, {"max_relC", r.max_relC}, {"max_relP", r.max_relP}});
    }
    out_.json_doc("continuum.json", {{"cases", cases}});
    note("continuum: " + std::to_string(cfg_.continuum_cases.size()) + " case(s)");
  }

  void saturation() {
    const TridiagonalData t =
        saturating_coefficients(cfg_.saturation_alpha0, cfg_.saturation_gamma0, cfg_.saturation_krylov_dim);
    const Series grid = uniform_grid(cfg_.saturation_t_max, cfg_.saturation_samples);
    const ChainTrajectory traj = evolve_chain(t, grid, cfg_.step);
    const BoundReport rep = dispersion_bound_check(moments(traj), t.b[0], cfg_.bound_tol);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t used = 0;
    double t_trusted = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!(traj.tail_mass[i] < cfg_.step.tail_cutoff)) break;
      t_trusted = grid[i];
      const double r = rep.saturation_ratio[i];
      if (!std::isfinite(r)) continue;
      lo = std::min(lo, r);
      hi = std::max(hi, r);
      ++used;
    }
    out_.csv("saturation.csv", {"t", "lhs", "rhs", "margin", "tau_K"},
             {rep.t, rep.lhs, rep.rhs, rep.margin, rep.tau_K});
    out_.json_doc("saturation.json", {{"ratio_min", used ? json(lo) : json(nullptr)},
                                      {"ratio_max", used ? json(hi) : json(nullptr)},
                                      {"samples_used", used},
                                      {"t_trusted", t_trusted},
                                      {"tail_cutoff", cfg_.step.tail_cutoff},
                                      {"derivatives", to_string(rep.derivatives)},
                                      {"b1", t.b[0].real()}});
    note("saturation: lhs/rhs in [" + format_double(lo) + ", " + format_double(hi) + "] over " +
         std::to_string(used) + " samples");
  }

  void filter() {
    TridiagonalData t;
    if (!cfg_.filter_input.empty()) {
      std::ifstream in(cfg_.filter_input);
      if (!in) fail(ErrorKind::kIo, "filter: cannot open " + cfg_.filter_input);
      t = read_coefficients_csv(in);
    } else {
      t = tri();
    }
    Series b, a;
    for (const Complex& x : t.b) b.push_back(std::abs(x));
    for (const Complex& x : t.a) a.push_back(std::abs(x));
    const FilteredSeries fb = filter_series(b, cfg_.filter);
    const FilteredSeries fa = filter_series(a, cfg_.filter);
    const json params = {{"outlier_window", cfg_.filter.outlier_window},
                         {"outlier_k", cfg_.filter.outlier_k},
                         {"smooth_window", cfg_.filter.smooth_window},
                         {"mad_scale", 1.4826}};
    auto index_column = [](std::size_t n, int first) {
      Series idx(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = first + static_cast<double>(i);
      return idx;
    };
    out_.csv("filter_b.csv", {"n", "raw", "cleaned", "smoothed"},
             {index_column(fb.raw.size(), 1), fb.raw, fb.cleaned, fb.smoothed},
             {{"series", "|b_n|"}, {"filter", params}});
    out_.csv("filter_a.csv", {"n", "raw", "cleaned", "smoothed"},
             {index_column(fa.raw.size(), 0), fa.raw, fa.cleaned, fa.smoothed},
             {{"series", "|a_n|"}, {"filter", params}});
    auto shift = [](const std::vector<std::size_t>& v, int first) {
      std::vector<long long> out;
      for (auto i : v) out.push_back(static_cast<long long>(i) + first);
      return out;
    };
    out_.json_doc("filter.json", {{"filter", params},
                                  {"b_outliers", shift(fb.outliers, 1)},
                                  {"a_outliers", shift(fa.outliers, 0)}});
    note("filter: " + std::to_string(fb.outliers.size()) + " b outliers, " + std::to_string(fa.outliers.size()) +
         " a outliers");
  }

  const RunConfig& cfg_;
  ArtifactWriter& out_;
  std::ostream* log_;
  std::optional<Problem> problem_;
  std::optional<TridiagonalData> tri_;
  std::optional<Evolved> moments_;
};

}  // namespace

// ---------------------------------------------------------------- public

void RunConfig::validate() const {
  model.validate();
  require(model.sites <= kMaxDenseSites,
          "config: model.sites must be <= " + std::to_string(kMaxDenseSites));
  bilanczos.validate();
  require(structure_coefficients >= 0, "config: structure.coefficients must be >= 0");
  require(structure_tol >= 0.0, "config: structure.tol must be >= 0");
  require(std::isfinite(t_max) && t_max > 0.0, "config: evolution.t_max must be > 0");
  require(n_samples >= 3, "config: evolution.n_samples must be >= 3");
  require(step.rel_tol > 0.0 && step.tail_cutoff > 0.0 && step.max_halvings >= 0,
          "config: evolution step control out of range");
  require(bound_tol >= 0.0 && mt_tol >= 0.0 && mt_floor >= 0.0, "config: bound tolerances must be >= 0");
  require(oracle_t_compare >= 0.0, "config: oracle.t_compare must be >= 0");
  filter.validate();
  for (const auto& c : continuum_cases) c.validate();
  require(std::isfinite(continuum_t_max) && continuum_t_max > 0.0, "config: continuum.t_max must be > 0");
  require(continuum_samples >= 2, "config: continuum.n_samples must be >= 2");
  require(continuum_rel_tol > 0.0 && continuum_rel_tol < 1e-3, "config: continuum.rel_tol out of range");
  require(saturation_krylov_dim >= 2, "config: saturation.krylov_dim must be >= 2");
  require(std::isfinite(saturation_t_max) && saturation_t_max > 0.0, "config: saturation.t_max must be > 0");
  require(saturation_samples >= 3, "config: saturation.n_samples must be >= 3");
  require(!output_dir.empty(), "config: output_dir must not be empty");
  if (seed_kind == SeedKind::kCustom) require(!seed_file.empty(), "config: seed.file required for custom seed");
}

std::string RunConfig::to_json_text() const { return config_to_json(*this).dump(2); }

RunConfig parse_config(const std::string& json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    config_error(std::string("malformed JSON: ") + e.what());
  }
  reject_unknown(j, "", {"config_version", "model", "seed", "bilanczos", "structure", "evolution", "bound",
                         "oracle", "filter", "continuum", "saturation", "output_dir"});
  if (!j.contains("config_version")) config_error("missing config_version");
  int version = 0;
  read_int(j, "config_version", "", version);
  if (version != kConfigVersion) {
    config_error("unsupported config_version " + std::to_string(version) + " (expected " +
                 std::to_string(kConfigVersion) + ")");
  }
  RunConfig c;
  if (!j.contains("model")) config_error("missing model section");
  {
    const json& m = j["model"];
    reject_unknown(m, "model", {"sites", "g", "h", "alpha", "gamma", "boundary_sites", "bulk_sites", "allow_overlap"});
    if (!m.contains("sites")) config_error("missing model.sites");
    int sites = 0;
    double g = c.model.g, h = c.model.h, alpha = c.model.alpha, gamma = c.model.gamma;
    read_int(m, "sites", "model", sites);
    read_number(m, "g", "model", g);
    read_number(m, "h", "model", h);
    read_number(m, "alpha", "model", alpha);
    read_number(m, "gamma", "model", gamma);
    require(sites >= 1 && sites <= kMaxDenseSites,
            "config: model.sites must be in 1.." + std::to_string(kMaxDenseSites));
    c.model = ModelSpec::with_default_placement(sites, g, h, alpha, gamma);
    read(m, "boundary_sites", "model", c.model.boundary_sites);
    read(m, "bulk_sites", "model", c.model.bulk_sites);
    read(m, "allow_overlap", "model", c.model.allow_overlap);
  }
  if (j.contains("seed")) {
    const json& s = j["seed"];
    reject_unknown(s, "seed", {"kind", "file"});
    std::string kind = "uniform";
    read(s, "kind", "seed", kind);
    if (kind == "uniform") {
      c.seed_kind = SeedKind::kUniform;
    } else if (kind == "custom") {
      c.seed_kind = SeedKind::kCustom;
      read(s, "file", "seed", c.seed_file);
      c.seed_file = resolve(c.seed_file, base_dir);
    } else {
      config_error("seed.kind must be 'uniform' or 'custom'");
    }
  }
  if (j.contains("bilanczos")) {
    const json& b = j["bilanczos"];
    reject_unknown(b, "bilanczos", {"max_iter", "breakdown_tol", "reorth_passes", "store_bases"});
    read_int(b, "max_iter", "bilanczos", c.bilanczos.max_iter);
    read_number(b, "breakdown_tol", "bilanczos", c.bilanczos.breakdown_tol);
    read_int(b, "reorth_passes", "bilanczos", c.bilanczos.reorth_passes);
    read(b, "store_bases", "bilanczos", c.bilanczos.store_bases);
  }
  if (j.contains("structure")) {
    const json& s = j["structure"];
    reject_unknown(s, "structure", {"coefficients", "tol"});
    read_int(s, "coefficients", "structure", c.structure_coefficients);
    read_number(s, "tol", "structure", c.structure_tol);
  }
  if (j.contains("evolution")) {
    const json& e = j["evolution"];
    reject_unknown(e, "evolution", {"t_max", "n_samples", "rel_tol", "tail_cutoff", "max_halvings"});
    read_number(e, "t_max", "evolution", c.t_max);
    read_int(e, "n_samples", "evolution", c.n_samples);
    read_number(e, "rel_tol", "evolution", c.step.rel_tol);
    read_number(e, "tail_cutoff", "evolution", c.step.tail_cutoff);
    read_int(e, "max_halvings", "evolution", c.step.max_halvings);
  }
  if (j.contains("bound")) {
    const json& b = j["bound"];
    reject_unknown(b, "bound", {"tol", "mt_tol", "mt_floor"});
    read_number(b, "tol", "bound", c.bound_tol);
    read_number(b, "mt_tol", "bound", c.mt_tol);
    read_number(b, "mt_floor", "bound", c.mt_floor);
  }
  if (j.contains("oracle")) {
    const json& o = j["oracle"];
    reject_unknown(o, "oracle", {"t_compare"});
    read_number(o, "t_compare", "oracle", c.oracle_t_compare);
  }
  if (j.contains("filter")) {
    const json& f = j["filter"];
    reject_unknown(f, "filter", {"outlier_window", "outlier_k", "smooth_window", "input"});
    read_int(f, "outlier_window", "filter", c.filter.outlier_window);
    read_number(f, "outlier_k", "filter", c.filter.outlier_k);
    read_int(f, "smooth_window", "filter", c.filter.smooth_window);
    read(f, "input", "filter", c.filter_input);
    c.filter_input = resolve(c.filter_input, base_dir);
  }
  c.continuum_cases = default_continuum_cases();
  if (j.contains("continuum")) {
    const json& k = j["continuum"];
    reject_unknown(k, "continuum", {"t_max", "n_samples", "rel_tol", "cases"});
    read_number(k, "t_max", "continuum", c.continuum_t_max);
    read_int(k, "n_samples", "continuum", c.continuum_samples);
    read_number(k, "rel_tol", "continuum", c.continuum_rel_tol);
    if (k.contains("cases")) {
      if (!k["cases"].is_array()) config_error("continuum.cases must be an array");
      c.continuum_cases.clear();
      for (const json& e : k["cases"]) {
        reject_unknown(e, "continuum.cases[]", {"case", "alpha", "beta", "c"});
        ContinuumSpec s;
        std::string kind;
        read(e, "case", "continuum.cases[]", kind);
        s.kind = parse_case(kind);
        read_number(e, "alpha", "continuum.cases[]", s.alpha);
        read_number(e, "beta", "continuum.cases[]", s.beta);
        read_number(e, "c", "continuum.cases[]", s.c);
        c.continuum_cases.push_back(s);
      }
    }
  }
  if (j.contains("saturation")) {
    const json& s = j["saturation"];
    reject_unknown(s, "saturation", {"alpha0", "gamma0", "krylov_dim", "t_max", "n_samples"});
    read_number(s, "alpha0", "saturation", c.saturation_alpha0);
    read_number(s, "gamma0", "saturation", c.saturation_gamma0);
    read_int(s, "krylov_dim", "saturation", c.saturation_krylov_dim);
    read_number(s, "t_max", "saturation", c.saturation_t_max);
    read_int(s, "n_samples", "saturation", c.saturation_samples);
  }
  read(j, "output_dir", "", c.output_dir);
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kInvalidArgument, "config: cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  const fs::path base = fs::path(path).parent_path();
  return parse_config(text.str(), base.empty() ? std::string(".") : base.string());
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"lanczos",    "evolve",     "bound",  "oracle",
                                                 "continuum", "saturation", "filter", "full"};
  return names;
}

std::optional<Command> parse_command(const std::string& name) {
  const auto& names = command_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<Command>(i);
  }
  return std::nullopt;
}

const char* to_string(Command c) noexcept {
  return command_names()[static_cast<std::size_t>(c)].c_str();
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kNumerical: return 2;
    case ErrorKind::kInvariant: return 3;
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kIo: return 1;
  }
  return 1;
}

std::string error_json(ErrorKind kind, const std::string& message, const std::string& command) {
  const json j = {{"error",
                   {{"kind", to_string(kind)},
                    {"message", message},
                    {"command", command},
                    {"exit_code", exit_code_for(kind)}}},
                  {"software", "krylovflow"},
                  {"version", kVersion}};
  return j.dump();
}

RunResult run_pipeline(const RunConfig& cfg_in, Command command, const RunOptions& options) {
  RunConfig cfg = cfg_in;
  if (options.out_dir) cfg.output_dir = *options.out_dir;
  cfg.validate();
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(ErrorKind::kIo, "cannot create output directory " + dir.string());
  fs::remove(dir / "error.json", ec);

  std::ostream* log = options.quiet ? nullptr : (options.log ? options.log : &std::clog);
  ArtifactWriter writer(dir, config_to_json(cfg), to_string(command));
  try {
    Pipeline(cfg, writer, log).run(command);
  } catch (const Error& e) {
    writer.remove_all();
    std::ofstream(dir / "error.json", std::ios::binary) << error_json(e.kind(), e.what(), to_string(command))
                                                         << "\n";
    throw;
  } catch (const std::exception& e) {
    writer.remove_all();
    std::ofstream(dir / "error.json", std::ios::binary)
        << error_json(ErrorKind::kNumerical, e.what(), to_string(command)) << "\n";
    throw Error(ErrorKind::kNumerical, e.what());
  }
  return {dir.string(), writer.written()};
}

}  // namespace krylovflow
