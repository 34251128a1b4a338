#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "qmslab/errors.hpp"
#include "qmslab/holley_stroock.hpp"
#include "qmslab/random.hpp"
#include "qmslab/sdpi.hpp"
#include "qmslab/stateprep.hpp"
#include "qmslab/thermal.hpp"

namespace qmslab::cli {

const char* const kCommands[6] = {"check-model", "decay", "estimate", "hs-verify", "stateprep", "thermal"};

namespace {

// A YAML map with its field path, for error messages. Scalars are file paths to such maps.
class Section {
 public:
  Section(YAML::Node n, std::string path, const std::string& base_dir) : path_(std::move(path)), base_(base_dir) {
    if (n && n.IsScalar() && !n.IsNull()) {
      const auto file = std::filesystem::path(base_dir) / n.as<std::string>();
      try {
        n = YAML::LoadFile(file.string());
      } catch (const YAML::Exception& e) {
        throw ConfigError(path_ + ": cannot load " + file.string() + ": " + e.what());
      }
      base_ = file.parent_path().string();
    }
    present_ = n && !n.IsNull();
    if (present_ && !n.IsMap()) throw ConfigError(path_ + ": expected a map");
    if (present_) node_ = n;
  }

  explicit operator bool() const { return present_; }
  const std::string& path() const { return path_; }
  bool has(const char* key) const { return present_ && node_[key]; }

  void allow(std::initializer_list<const char*> keys) const {
    if (!present_) return;
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& kv : node_) {
      const std::string k = kv.first.as<std::string>();
      if (!ok.count(k)) throw ConfigError(field(k.c_str()) + ": unknown key");
    }
  }

  std::string field(const char* key) const { return path_ + "." + key; }

  double num(const char* key) const {
    require(key);
    return as_double(node_[key], field(key));
  }
  double num(const char* key, double def) const { return has(key) ? num(key) : def; }
  int integer(const char* key, int def) const {
    if (!has(key)) return def;
    try {
      return node_[key].as<int>();
    } catch (const YAML::Exception&) {
      throw ConfigError(field(key) + ": expected an integer");
    }
  }
  std::string str(const char* key, const std::string& def) const {
    if (!has(key)) return def;
    if (!node_[key].IsScalar()) throw ConfigError(field(key) + ": expected a string");
    return node_[key].as<std::string>();
  }
  std::vector<double> nums(const char* key) const {
    require(key);
    const YAML::Node n = node_[key];
    if (!n.IsSequence()) throw ConfigError(field(key) + ": expected a list of numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < n.size(); ++i) v.push_back(as_double(n[i], field(key) + "[" + std::to_string(i) + "]"));
    return v;
  }
  Mat matrix(const char* key) const {
    require(key);
    return parse_matrix(node_[key], field(key));
  }
  std::vector<Mat> matrices(const char* key) const {
    require(key);
    const YAML::Node n = node_[key];
    if (!n.IsSequence()) throw ConfigError(field(key) + ": expected a list of matrices");
    std::vector<Mat> v;
    for (std::size_t i = 0; i < n.size(); ++i) v.push_back(parse_matrix(n[i], field(key) + "[" + std::to_string(i) + "]"));
    return v;
  }
  YAML::Node raw(const char* key) const { return present_ ? node_[key] : YAML::Node(); }
  Section sub(const char* key) const { return Section(has(key) ? node_[key] : YAML::Node(), field(key), base_); }

 private:
  void require(const char* key) const {
    if (!has(key)) throw ConfigError(field(key) + ": required");
  }
  static double as_double(const YAML::Node& n, const std::string& p) {
    try {
      const double x = n.as<double>();
      if (!std::isfinite(x)) throw ConfigError(p + ": expected a finite number");
      return x;
    } catch (const YAML::Exception&) {
      throw ConfigError(p + ": expected a number");
    }
  }

  YAML::Node node_;
  bool present_ = false;
  std::string path_;
  std::string base_;
};

Section section(const ExperimentConfig& cfg, const YAML::Node& n, const char* name, bool required) {
  Section s(n, name, cfg.base_dir);
  if (required && !s) throw ConfigError(std::string(name) + ": required for " + cfg.command);
  return s;
}

SamplerConfig sampler(const ExperimentConfig& cfg, const Section& est = Section(YAML::Node(), "estimate", ".")) {
  SamplerConfig sc;
  sc.samples = est.has("samples") ? static_cast<std::size_t>(std::max(1, est.integer("samples", 1))) : cfg.samples;
  sc.seed = cfg.seed;
  sc.workers = cfg.workers;
  sc.refine_top = est.integer("refine_top", sc.refine_top);
  sc.refine_steps = est.integer("refine_steps", sc.refine_steps);
  sc.boundary_fraction = est.num("boundary_fraction", sc.boundary_fraction);
  return sc;
}

// Reports grouped by check id, in insertion order.
struct Collector {
  std::vector<std::string> order;
  std::map<std::string, std::vector<InequalityReport>> groups;

  void add(const std::string& id, const InequalityReport& r) {
    if (!groups.count(id)) order.push_back(id);
    groups[id].push_back(r);
  }
  void add(const std::string& id, const std::vector<InequalityReport>& rs) {
    if (!groups.count(id)) order.push_back(id);
    auto& g = groups[id];
    g.insert(g.end(), rs.begin(), rs.end());
  }
  void info(const std::string& id, InequalityReport r) {
    r.informational = true;
    add(id, r);
  }
};

struct Outcome {
  Collector reports;
  json results = json::object();
  std::vector<Artifact> files;
};

json number(double x) { return std::isfinite(x) ? json(x) : json(fmt17(x)); }

// ---------------------------------------------------------------- builders

FullRankState state_from(const Section& s, const char* key) {
  const YAML::Node n = s.raw(key);
  if (n && n.IsSequence() && n.size() > 0 && n[0].IsScalar()) return diagonal_state(s.nums(key));
  return FullRankState(s.matrix(key));
}

LindbladModel build_model(const Section& s, std::uint64_t seed) {
  s.allow({"preset", "p0", "d", "stream", "sigma", "jumps", "omegas", "degenerate_probability"});
  const std::string preset = s.str("preset", s.has("jumps") ? "explicit" : "");
  if (preset == "amplitude_damping") return presets::amplitude_damping(s.num("p0", 0.75));
  if (preset == "depolarizing") return presets::depolarizing(s.integer("d", 2));
  if (preset == "stabilizing") return presets::stabilizing(state_from(s, "sigma"));
  if (preset == "random") {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(s.integer("stream", 0)));
    presets::RandomModelOptions opt;
    opt.degenerate_probability = s.num("degenerate_probability", opt.degenerate_probability);
    return presets::random_model(rng, s.integer("d", 2), opt);
  }
  if (preset == "explicit") {
    const FullRankState sigma = state_from(s, "sigma");
    auto jumps = make_jump_set(s.matrices("jumps"));
    if (s.has("omegas")) return make_model(std::move(jumps), sigma, s.nums("omegas"));
    return make_model(std::move(jumps), sigma);
  }
  throw ConfigError(s.field("preset") + ": unknown model preset '" + preset + "'");
}

Mat build_rho(const Section& s, const FullRankState& sigma, std::uint64_t seed) {
  s.allow({"preset", "stream", "matrix", "rank"});
  const int d = sigma.dim();
  const std::string preset = s.str("preset", s.has("matrix") ? "matrix" : "random");
  Rng rng = make_rng(seed, 1000 + static_cast<std::uint64_t>(s.integer("stream", 0)));
  if (preset == "sigma") return sigma.matrix();
  if (preset == "maximally_mixed") return identity(d) / double(d);
  if (preset == "random") return random_density(rng, d, s.integer("rank", -1));
  if (preset == "pure") return random_pure(rng, d);
  if (preset == "boundary") return random_boundary_state(rng, d);
  if (preset == "matrix") {
    const Mat rho = s.matrix("matrix");
    require_density(rho, "rho.matrix");
    return rho;
  }
  throw ConfigError(s.field("preset") + ": unknown state preset '" + preset + "'");
}

KrausChannel build_channel(const Section& s, std::uint64_t seed) {
  s.allow({"preset", "d", "p", "stream", "kraus", "picture", "sigma"});
  const std::string preset = s.str("preset", s.has("kraus") ? "explicit" : "");
  if (preset == "identity") return channels::identity(s.integer("d", 2));
  if (preset == "depolarizing") return channels::depolarizing(s.integer("d", 2), s.num("p", 0.5));
  if (preset == "random_gns") {
    Rng rng = make_rng(seed, 2000 + static_cast<std::uint64_t>(s.integer("stream", 0)));
    return channels::random_gns(rng, s.integer("d", 2));
  }
  if (preset == "explicit") {
    const std::string pic = s.str("picture", "schrodinger");
    if (pic != "schrodinger" && pic != "heisenberg") throw ConfigError(s.field("picture") + ": schrodinger or heisenberg");
    std::optional<FullRankState> sigma;
    if (s.has("sigma")) sigma = state_from(s, "sigma");
    return make_channel(s.matrices("kraus"), pic == "schrodinger" ? Picture::schrodinger : Picture::heisenberg, sigma);
  }
  throw ConfigError(s.field("preset") + ": unknown channel preset '" + preset + "'");
}

GraphSpec build_graph(const Section& s) {
  const std::string kind = s.str("kind", "complete");
  const int m = s.integer("m", 0);
  GraphSpec g;
  if (kind == "complete") g = complete_graph(m);
  else if (kind == "path") g = path_graph(m);
  else if (kind == "cyclic") g = cyclic_graph(m);
  else if (kind == "explicit") {
    g.m = m;
    const YAML::Node e = s.raw("edges");
    if (!e || !e.IsSequence()) throw ConfigError(s.field("edges") + ": expected a list of [r, s] pairs");
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (!e[i].IsSequence() || e[i].size() != 2)
        throw ConfigError(s.field("edges") + "[" + std::to_string(i) + "]: expected [r, s]");
      g.edges.push_back({e[i][0].as<int>(), e[i][1].as<int>()});
    }
  } else
    throw ConfigError(s.field("kind") + ": complete, path, cyclic or explicit");
  if (s.has("weights")) {
    const YAML::Node w = s.raw("weights");
    if (!w.IsSequence()) throw ConfigError(s.field("weights") + ": expected a list");
    YAML::Node row(YAML::NodeType::Sequence);
    row.push_back(w);
    const Mat W = parse_matrix(row, s.field("weights"));
    for (int i = 0; i < W.cols(); ++i) g.weights.push_back(W(0, i));
  }
  validate_graph(g);
  return g;
}

std::vector<Mat> random_states(std::uint64_t seed, std::uint64_t base, int n, int d) {
  std::vector<Mat> v;
  for (int i = 0; i < n; ++i) {
    Rng rng = make_rng(seed, base + i);
    v.push_back(random_density(rng, d));
  }
  return v;
}

std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << fmt17(r[i]);
    os << "\n";
  }
  return os.str();
}

json estimate_json(const ConstantEstimate& e) {
  return {{"value", number(e.value)},   {"n_samples", e.n_samples},       {"n_valid", e.n_valid},
          {"method", e.method},         {"refined_gain", number(e.refined_gain)},
          {"certificate", matrix_json(e.argmin)}};
}

// ---------------------------------------------------------------- commands

void check_model(const ExperimentConfig& cfg, Outcome& o) {
  const auto model = build_model(section(cfg, cfg.model, "model", true), cfg.seed);
  const int d = model.dim();
  const Generator G = build_generator(model);
  const auto db = check_detailed_balance(G.heisenberg, model.sigma);
  o.reports.add("detailed_balance",
                make_report("detailed balance", std::max(db.kms_deviation, db.modular_deviation), db.threshold, {0, 0}));
  o.reports.add("stationarity", make_report("L_*(sigma) = 0", max_abs(apply_generator_dual(model, model.sigma.matrix())),
                                            0.0, cfg.tol));
  o.reports.add("unitality", make_report("L(I) = 0", max_abs(apply_generator(model, identity(d))), 0.0, cfg.tol));
  const auto fpa = fixed_point_algebra(model.jumps, model.sigma);
  o.reports.add("conditional_expectation",
                make_report("E idempotent", max_abs(fpa.E * fpa.E - fpa.E), 0.0, cfg.tol));
  o.reports.add("conditional_expectation",
                make_report("E_*(sigma) = sigma", max_abs(fpa.apply_E_star(model.sigma.matrix()) - model.sigma.matrix()),
                            0.0, cfg.tol));
  o.reports.add("generator_kills_fixed_points",
                make_report("L E = 0", max_abs(G.heisenberg * fpa.E), 0.0, cfg.tol));
  o.reports.info("primitivity", make_report("commutant dimension - 1", fpa.algebra_dim - 1, 0.0, {0, 0}));

  const std::vector<double> times = cfg.times.empty() ? std::vector<double>{0.1, 1.0, 10.0} : cfg.times;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Mat S = propagator(G.schrodinger, times[k]);
    o.reports.add("cptp", make_report("Choi min eigenvalue", -choi_min_eigenvalue(S), 1e-9, {0, 0}, long(k)));
    o.reports.add("cptp", make_report("trace preservation", max_abs(apply_super(trace_dual(S), identity(d)) - identity(d)),
                                      0.0, cfg.tol, long(k)));
  }
  json omegas = json::array();
  for (double w : model.omegas) omegas.push_back(w);
  o.results = {{"dim", d},
               {"jumps", model.jumps.size()},
               {"omegas", omegas},
               {"algebra_dim", fpa.algebra_dim},
               {"primitive", fpa.primitive()},
               {"spectral_gap", number(spectral_gap(G.heisenberg))}};
  if (fpa.primitive()) {
    const auto f = hs_factor_primitive(model);
    o.results["hs_factor"] = {{"entropy", f.entropy_factor}, {"ep", f.ep_factor}, {"total", f.total}};
  }
}

void decay(const ExperimentConfig& cfg, Outcome& o) {
  const auto model = build_model(section(cfg, cfg.model, "model", true), cfg.seed);
  const Mat rho = build_rho(section(cfg, cfg.rho, "rho", false), model.sigma, cfg.seed);
  const auto fpa = fixed_point_algebra(model.jumps, model.sigma);
  const std::vector<double> times = cfg.times.empty() ? geometric_time_grid(10.0, 40) : cfg.times;
  const auto tr = decay_trace(model, fpa, rho, times);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < tr.times.size(); ++k) rows.push_back({tr.times[k], tr.entropies[k], tr.eps[k]});
  o.files.push_back({"decay.csv", csv({"t", "relative_entropy", "entropy_production"}, rows)});
  o.reports.add("monotone_decay", make_report("max increase of D", tr.max_increase, 0.0, cfg.tol));
  o.results = {{"points", tr.times.size()},
               {"initial_entropy", number(tr.entropies.front())},
               {"final_entropy", number(tr.entropies.back())},
               {"regularized", tr.regularized}};
}

void estimate(const ExperimentConfig& cfg, Outcome& o) {
  const Section est = section(cfg, cfg.estimate, "estimate", true);
  est.allow({"kind", "ancilla_dim", "samples", "refine_top", "refine_steps", "boundary_fraction", "estimator_slack"});
  const std::string kind = est.str("kind", "");
  const SamplerConfig sc = sampler(cfg, est);
  if (kind == "mlsi" || kind == "clsi") {
    const auto model = build_model(section(cfg, cfg.model, "model", true), cfg.seed);
    const auto fpa = fixed_point_algebra(model.jumps, model.sigma);
    const auto mlsi = estimate_mlsi(model, fpa, sc);
    o.reports.add("valid_samples", make_report("valid samples >= 1", 1.0, double(mlsi.n_valid), {0, 0}));
    o.results = {{"kind", kind}, {"mlsi", estimate_json(mlsi)}};
    if (fpa.primitive()) {
      o.results["spectral_gap_reference"] = number(spectral_gap_mlsi_reference(model));
      o.results["hs_factor"] = hs_factor_primitive(model).total;
    }
    if (kind == "clsi") {
      const auto clsi = estimate_clsi_witness(model, fpa, est.integer("ancilla_dim", 2), sc);
      o.reports.add("clsi_below_mlsi", make_report("CLSI witness <= MLSI estimate", clsi.value, mlsi.value, cfg.tol));
      o.results["clsi"] = estimate_json(clsi);
    }
  } else if (kind == "sdpi") {
    const auto phi = build_channel(section(cfg, cfg.channel, "channel", true), cfg.seed);
    const auto b = check_sdpi_bound(phi, sc, cfg.tol, est.num("estimator_slack", 0.02));
    o.reports.add("sdpi_bound", b.report);
    o.reports.add("sdpi_chain", b.chain);
    o.reports.add("sdpi_at_most_one", make_report("c(Phi) <= 1", b.c_phi, 1.0, {1e-9, 0}));
    o.results = {{"kind", kind},          {"c_phi", number(b.c_phi)}, {"c_phi0", number(b.c_phi0)},
                 {"condition", b.condition}, {"bound", number(b.bound)}};
  } else if (kind == "alpha2") {
    const auto phi = build_channel(section(cfg, cfg.channel, "channel", true), cfg.seed);
    const auto phi0 = build_unital_counterpart(phi);
    const auto a = alpha2_unital(sdpi_semigroup_generator(phi0), sc);
    o.reports.add("valid_samples", make_report("valid samples >= 1", 1.0, double(a.n_valid), {0, 0}));
    o.results = {{"kind", kind}, {"alpha2", estimate_json(a)}};
    if (phi.sigma) o.results["sdpi_reference"] = number(sdpi_alpha2_bound(*phi.sigma, a.value));
  } else {
    throw ConfigError(est.field("kind") + ": mlsi, clsi, sdpi or alpha2");
  }
  o.files.push_back({"estimate.json", o.results.dump(2) + "\n"});
}

void hs_verify(const ExperimentConfig& cfg, Outcome& o) {
  const auto model = build_model(section(cfg, cfg.model, "model", true), cfg.seed);
  const Section ps = section(cfg, cfg.model_prime, "model_prime", false);
  const auto prime = ps ? build_model(ps, cfg.seed) : model;
  const Section est = section(cfg, cfg.estimate, "estimate", false);
  est.allow({"ancilla_dim", "samples", "refine_top", "refine_steps", "boundary_fraction"});
  const auto pair = make_model_pair(model, prime);
  const std::size_t n = cfg.samples;
  o.reports.add("entropy_comparison", entropy_comparison_suite(pair, n, cfg.seed, cfg.tol));
  o.reports.add("ep_comparison", ep_comparison_suite(pair, n, cfg.seed, cfg.tol));
  if (pair.fpa.primitive()) {
    const int dK = est.integer("ancilla_dim", 2);
    o.reports.add("entropy_comparison_primitive", entropy_comparison_suite(model, dK, n, cfg.seed, cfg.tol));
    o.reports.add("ep_comparison_primitive", ep_comparison_suite(model, dK, n, cfg.seed, cfg.tol));
  }
  SamplerConfig sc = sampler(cfg, est);
  if (!est.has("samples")) sc.samples = std::min<std::size_t>(cfg.samples, 100);
  const auto a = estimate_mlsi(model, pair.fpa, sc);
  const auto b = estimate_mlsi(prime, pair.fpa_prime, sc);
  o.reports.add("hs_transfer", check_hs_transfer(a.value, b.value, pair.factor.total));
  o.results = {{"r", pair.r},
               {"R", pair.R},
               {"freq", pair.freq},
               {"factor", {{"entropy", pair.factor.entropy_factor}, {"ep", pair.factor.ep_factor}, {"total", pair.factor.total}}},
               {"mlsi_sigma", number(a.value)},
               {"mlsi_prime", number(b.value)}};
  o.files.push_back({"hs.json", o.results.dump(2) + "\n"});
}

void stateprep_graph(const ExperimentConfig& cfg, const Section& gs, Outcome& o) {
  gs.allow({"kind", "m", "edges", "weights", "probabilities", "rule", "samples"});
  const GraphSpec g = build_graph(gs);
  const FullRankState sigma =
      gs.has("probabilities") ? diagonal_state(gs.nums("probabilities")) : maximally_mixed(g.m);
  const std::string rule = gs.str("rule", "reject");
  if (rule != "reject" && rule != "block") throw ConfigError(gs.field("rule") + ": reject or block");
  const auto model = build_graph_generator(g, sigma, rule == "block" ? DegenerateRule::block : DegenerateRule::reject);
  const bool irr = is_irreducible(g);
  const bool prim = check_primitivity(model.jumps);
  o.reports.add("connectivity_primitivity",
                make_report("primitive iff connected", irr == prim || rule == "block" ? 0.0 : 1.0, 0.0, {0, 0}));
  o.reports.add("diagonal_invariance", make_report("diagonal algebra invariant", diagonal_invariance_deviation(model), 0.0, cfg.tol));
  o.reports.add("stationarity", make_report("L_*(sigma) = 0", max_abs(apply_generator_dual(model, sigma.matrix())), 0.0, cfg.tol));
  o.results = {{"m", g.m}, {"edges", g.edges.size()}, {"irreducible", irr}, {"primitive", prim}};
  if (!prim) return;
  const auto f = graph_hs_bound(g, sigma);
  SamplerConfig sc = sampler(cfg);
  if (gs.has("samples")) sc.samples = static_cast<std::size_t>(gs.integer("samples", 100));
  const auto fpa = fixed_point_algebra(model.jumps, model.sigma);
  const auto mlsi = estimate_mlsi(model, fpa, sc);
  const auto clsi = estimate_clsi_witness(model, fpa, 2, sc);
  o.results["hs_factor"] = f.total;
  o.results["mlsi"] = number(mlsi.value);
  o.results["clsi_witness"] = number(clsi.value);
  if (const auto ref = graph_clsi_reference(g, sigma)) {
    o.results["clsi_reference"] = *ref;
    o.reports.info("clsi_reference", make_report("reference <= witness", *ref, clsi.value, cfg.tol));
  }
}

void stateprep_history(const ExperimentConfig& cfg, const Section& hs, Outcome& o) {
  hs.allow({"T", "gates", "gate_stream", "kappa", "s_grid", "m", "input", "states"});
  const auto logical = build_model(section(cfg, cfg.model, "model", true), cfg.seed);
  const int d = logical.dim();
  std::vector<Mat> gates;
  if (hs.has("gates")) {
    gates = hs.matrices("gates");
  } else {
    const int T = hs.integer("T", 2);
    if (T < 1) throw ConfigError(hs.field("T") + ": must be >= 1");
    Rng rng = make_rng(cfg.seed, 3000 + static_cast<std::uint64_t>(hs.integer("gate_stream", 0)));
    for (int k = 0; k < T; ++k) gates.push_back(random_unitary(rng, d));
  }
  HistoryModel hm;
  if (hs.has("kappa")) {
    hm = build_history_model(logical, gates, hs.num("kappa"));
  } else {
    HistoryOptions opt;
    opt.cfg = sampler(cfg);
    hm = build_history_model(logical, gates, opt);
  }
  const std::string in = hs.str("input", "conjugated_uniform");
  if (in != "conjugated_uniform" && in != "scaled_by_T") throw ConfigError(hs.field("input") + ": conjugated_uniform or scaled_by_T");
  const TimeInput input = in == "scaled_by_T" ? TimeInput::scaled_by_T : TimeInput::conjugated_uniform;
  std::vector<double> s_grid;
  if (hs.has("s_grid"))
    s_grid = hs.nums("s_grid");
  else
    for (int k = 1; k <= 10; ++k) s_grid.push_back(k * 0.5 / hm.kappa);
  const int m = hs.integer("m", 10);
  const auto states = random_states(cfg.seed, 4000, hs.integer("states", 3), d);

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < states.size(); ++i)
    for (std::size_t k = 0; k < s_grid.size(); ++k) {
      const long id = long(i * s_grid.size() + k);
      const auto p = run_preparation(hm, states[i], s_grid[k], input, cfg.tol);
      auto rep = p.report;
      rep.sample_id = id;
      if (input == TimeInput::scaled_by_T) rep.informational = true;
      o.reports.add("preparation", rep);
      auto tr = p.trace_report;
      tr.sample_id = id;
      o.reports.add("preparation_trace", tr);
      const auto st = run_stopping_time(hm, states[i], s_grid[k], m, cfg.tol);
      auto sr = st.report;
      sr.sample_id = id;
      o.reports.add("stopping_time", sr);
      auto pr = st.no_register_entropy_report;
      pr.sample_id = id;
      o.reports.add("stopping_time_no_register_entropy", pr);
      auto rr = st.renormalized_report;
      rr.sample_id = id;
      o.reports.add("stopping_time_renormalized", rr);
      rows.push_back({double(i), s_grid[k], p.report.lhs, p.report.rhs, p.success_prob, st.report.lhs, st.report.rhs,
                      st.success_prob});
    }
  o.files.push_back({"stateprep.csv", csv({"state", "s", "prep_lhs", "prep_rhs", "prep_success", "stop_lhs", "stop_rhs",
                                           "stop_success"},
                                          rows)});
  const double eps = std::pow(1.0 - 1.0 / (hm.T + 1), m);
  if (std::pow(hm.T + 1.0, m) <= 1e6)
    o.reports.add("failure_probability",
                  make_report("enumerated eps_m", std::abs(enumerate_failure_probability(hm.T, m) - eps), 0.0, {1e-12, 0}));
  o.results = {{"T", hm.T},
               {"kappa", hm.kappa},
               {"kappa_logical", hm.kappa_logical},
               {"kappa_time", hm.kappa_time},
               {"kappa_max", hm.kappa_max},
               {"c0", hm.c0},
               {"identity_deviation", hm.identity_deviation},
               {"m", m},
               {"eps_m", eps},
               {"eps_m_over_T", std::pow(1.0 - 1.0 / hm.T, m)}};
}

void stateprep(const ExperimentConfig& cfg, Outcome& o) {
  const Section gs = section(cfg, cfg.graph, "graph", false);
  const Section hs = section(cfg, cfg.history, "history", false);
  if (gs && hs) throw ConfigError("stateprep: give either graph or history, not both");
  if (gs)
    stateprep_graph(cfg, gs, o);
  else if (hs)
    stateprep_history(cfg, hs, o);
  else
    throw ConfigError("stateprep: graph or history section required");
  o.files.push_back({"stateprep.json", o.results.dump(2) + "\n"});
}

void thermal(const ExperimentConfig& cfg, Outcome& o) {
  const Section gs = section(cfg, cfg.gibbs, "gibbs", true);
  gs.allow({"energies", "beta", "beta_grid", "cutoff_index", "cutoff_energy", "crossing_weight", "t_grid", "states",
            "alpha0", "t1"});
  const GibbsSpec g{gs.nums("energies"), gs.num("beta", 1.0)};
  validate_gibbs(g);
  const int m = static_cast<int>(g.energies.size());

  std::vector<double> betas;
  if (gs.has("beta_grid"))
    betas = gs.nums("beta_grid");
  else
    for (int k = 0; k <= 30; ++k) betas.push_back(0.1 * k);
  std::vector<std::vector<double>> rows;
  double prev = 0.0;
  for (std::size_t k = 0; k < betas.size(); ++k) {
    const GibbsSpec gb{g.energies, betas[k]};
    const double f = thermal_hs_factor(gb).total;
    const double h = m > 1 ? hs_factor_primitive(gibbs_ladder_model(gb)).total : 1.0;
    o.reports.add("thermal_factor", make_report("|thermal - primitive factor|", std::abs(f - h), 1e-10 * h, {0, 0}, long(k)));
    if (k > 0 && betas[k] >= betas[k - 1])
      o.reports.add("thermal_factor_monotone", make_report("factor non-decreasing in beta", prev - f, 0.0, cfg.tol, long(k)));
    prev = f;
    rows.push_back({betas[k], f, h});
  }
  o.files.push_back({"thermal_factor.csv", csv({"beta", "thermal_factor", "primitive_factor"}, rows)});

  rows.clear();
  double prev_dist = 0.0;
  for (int l = 1; l <= m; ++l) {
    const auto t = truncated_gibbs(g, l, cfg.tol);
    o.reports.add("truncated_gibbs", t.report);
    o.reports.add("truncated_gibbs_first_order", t.first_order_report);
    o.reports.add("truncated_gibbs_two_ways", make_report("spectral vs diagonal distance",
                                                          std::abs(t.distance_actual - t.distance_diagonal), 1e-12, {0, 0}, l));
    if (l > 1)
      o.reports.add("truncated_gibbs_monotone", make_report("distance decreasing in cutoff", t.distance_actual - prev_dist,
                                                            0.0, cfg.tol, l));
    prev_dist = t.distance_actual;
    rows.push_back({double(l), g.energies[l - 1], t.distance_actual, t.bound, t.bound_first_order, t.factor,
                    t.factor_inclusive});
  }
  o.files.push_back({"truncated.csv", csv({"l", "E_l", "distance", "bound", "first_order_bound", "factor",
                                           "factor_inclusive"},
                                          rows)});

  const Section t1 = gs.sub("t1");
  t1.allow({"T1", "dB", "t", "eps"});
  const double T1v = t1.num("T1", 1.0), t1t = t1.num("t", 1.0);
  const int dB = t1.integer("dB", 2);
  const auto pure = t1_relaxation_check(T1v, dB, t1t, cfg.samples, cfg.seed, 0.0, cfg.tol);
  const auto reg = t1_relaxation_check(T1v, dB, t1t, cfg.samples, cfg.seed, t1.num("eps", 0.05), cfg.tol);
  o.reports.add("t1_pure", pure.reports);
  o.reports.add("t1_regularized", reg.reports);

  json out = {{"factor", thermal_hs_factor(g).total},
              {"shift", gibbs_shift(g)},
              {"partition_function", partition_function(g)},
              {"t1_finite", pure.finite},
              {"t1_skipped", pure.skipped}};

  // flag-free decay on a nearest-neighbour ladder with a weak crossing edge at the cutoff
  if (m >= 3) {
    for (int k = 1; k < m; ++k)
      if (!(g.energies[k] > g.energies[k - 1]))
        throw ConfigError(gs.field("energies") + ": the flag-free scenario needs strictly increasing energies");
    const int l = gs.integer("cutoff_index", m / 2);
    if (l < 1 || l >= m) throw ConfigError(gs.field("cutoff_index") + ": need 1 <= l < m");
    const double E0 = gs.num("cutoff_energy", g.energies[l - 1]);
    const double w = gs.num("crossing_weight", 1e-3);
    GraphSpec ladder = path_graph(m);
    const Mat P = low_energy_projector(g, E0);
    const int d0 = low_energy_dimension(g, E0);
    if (d0 < 1 || d0 >= m) throw ConfigError(gs.field("cutoff_energy") + ": must split the spectrum");
    ladder.weights.assign(m - 1, 1.0);
    ladder.weights[d0 - 1] = std::sqrt(w);
    const auto model = build_graph_generator(ladder, gibbs_state(g));
    const auto eff = effective_low_energy_model(model, g, E0);
    double alpha0 = gs.num("alpha0", 0.0);
    if (!gs.has("alpha0")) {
      const auto heat = heat_model(eff.model.jumps);
      SamplerConfig sc = sampler(cfg);
      sc.samples = std::min<std::size_t>(cfg.samples, 100);
      alpha0 = estimate_clsi_witness(heat, fixed_point_algebra(heat.jumps, heat.sigma), 2, sc).value;
    }
    const double alpha = alpha0 / eff.factor;
    std::vector<double> tgrid = gs.has("t_grid") ? gs.nums("t_grid") : std::vector<double>{0.0, 0.5, 1.0, 2.0, 4.0};
    const auto states = random_states(cfg.seed, 5000, gs.integer("states", 5), m);
    rows.clear();
    for (std::size_t i = 0; i < states.size(); ++i)
      for (std::size_t k = 0; k < tgrid.size(); ++k) {
        auto r = check_flag_free_decay(model, eff, P, states[i], tgrid[k], alpha, cfg.tol);
        r.conditional.sample_id = r.effective.sample_id = long(i * tgrid.size() + k);
        o.reports.add("flag_free_decay", r.conditional);
        o.reports.add("effective_decay", r.effective);
        rows.push_back({double(i), tgrid[k], r.conditional.lhs, r.conditional.rhs, r.effective.lhs, r.p_low});
      }
    o.files.push_back({"flag_free.csv", csv({"state", "t", "conditional_D", "bound", "effective_D", "p_low"}, rows)});
    Mat low = P * states[0] * P;
    low /= low.trace().real();
    const auto conv = p_low_doubling(model, P, low, tgrid.back(), 4, 1e-6);
    o.reports.info("p_low_doubling", make_report("m-doubling converged", conv.converged ? 0.0 : 1.0, 0.0, {0, 0}));
    out["flag_free"] = {{"cutoff_energy", E0},
                        {"low_dimension", d0},
                        {"crossing_weight", w},
                        {"alpha0", alpha0},
                        {"factor", eff.factor},
                        {"factor_rigorous", number(eff.factor_rigorous)},
                        {"alpha", alpha},
                        {"p_low_limit", p_low_limit(model, P, low, tgrid.back())},
                        {"p_low_doubling_m", conv.m.back()},
                        {"p_low_doubling", conv.p_low.back()}};
  }
  o.results = out;
  o.files.push_back({"thermal.json", o.results.dump(2) + "\n"});
}

json report_json(const std::string& id, const InequalityReport& r) {
  json j = {{"id", id},          {"name", r.name},   {"lhs", number(r.lhs)}, {"rhs", number(r.rhs)},
            {"slack", number(r.slack)}, {"pass", r.pass}, {"informational", r.informational}};
  if (r.sample_id >= 0) j["sample_id"] = r.sample_id;
  if (!r.witness.empty()) j["witness"] = r.witness;
  return j;
}

}  // namespace

RunResult run(const ExperimentConfig& cfg) {
  Outcome o;
  const std::string& c = cfg.command;
  if (c == "check-model") check_model(cfg, o);
  else if (c == "decay") decay(cfg, o);
  else if (c == "estimate") estimate(cfg, o);
  else if (c == "hs-verify") hs_verify(cfg, o);
  else if (c == "stateprep") stateprep(cfg, o);
  else if (c == "thermal") thermal(cfg, o);
  else throw ConfigError("command: unknown '" + c + "'");

  RunResult r;
  json checks = json::array(), reports = json::array();
  for (const auto& id : o.reports.order) {
    const auto& g = o.reports.groups.at(id);
    bool informational = true;
    for (const auto& x : g) informational = informational && x.informational;
    std::size_t failed = 0, hard_failed = 0, worst = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      failed += !g[k].pass;
      hard_failed += !g[k].pass && !g[k].informational;
      if (g[k].slack < g[worst].slack) worst = k;
    }
    checks.push_back({{"id", id},
                      {"total", g.size()},
                      {"failed", failed},
                      {"hard_failed", hard_failed},
                      {"worst_slack", number(g.empty() ? 0.0 : g[worst].slack)},
                      {"worst_id", id + "/" + std::to_string(worst)},
                      {"informational", informational}});
    if (hard_failed > 0) r.failed = true;
    for (std::size_t k = 0; k < g.size(); ++k) reports.push_back(report_json(id + "/" + std::to_string(k), g[k]));
  }
  json outputs = json::array();
  for (const auto& f : o.files) outputs.push_back(f.name);
  r.manifest = {{"tool", "qmslab"},
                {"code_version", QMSLAB_VERSION},
                {"command", c},
                {"config_hash", config_hash(cfg)},
                {"seed", cfg.seed},
                {"samples", cfg.samples},
                {"status", r.failed ? "fail" : "pass"},
                {"results", o.results},
                {"checks", checks},
                {"outputs", outputs},
                {"reports", reports}};
  r.files = std::move(o.files);
  return r;
}

}  // namespace qmslab::cli
