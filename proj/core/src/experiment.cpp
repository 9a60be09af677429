#include <enkfmc/errors.hpp>
#include <enkfmc/experiment.hpp>
#include <enkfmc/mchol.hpp>
#include <enkfmc/rng.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

namespace enkfmc {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void apply_model_defaults(ExperimentConfig& c) {
  switch (c.model) {
    case ModelKind::lorenz96:
      break;
    case ModelKind::advdiff2d:
      c.grid = GridKind::grid2d;
      c.nx = 32;
      c.ny = 32;
      c.boundary = Boundary::periodic;
      c.dt = 0.5;
      c.window = 5.0;
      c.reference_spinup = 50.0;
      c.background_spinup = 10.0;
      c.ensemble_spinup = 10.0;
      c.nens = 40;
      break;
    case ModelKind::identity:
      c.dt = 1.0;
      c.window = 1.0;
      c.reference_spinup = 0.0;
      c.background_spinup = 0.0;
      c.ensemble_spinup = 0.0;
      break;
  }
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"grid", [](auto& c, auto&, auto& v) { c.grid = parse_grid_kind(v); }},
      {"nx", [](auto& c, auto& k, auto& v) { c.nx = parse_int(k, v); }},
      {"ny", [](auto& c, auto& k, auto& v) { c.ny = parse_int(k, v); }},
      {"ordering", [](auto& c, auto&, auto& v) { c.ordering = parse_ordering(v); }},
      {"boundary", [](auto& c, auto&, auto& v) { c.boundary = parse_boundary(v); }},
      {"model", [](auto& c, auto&, auto& v) { c.model = parse_model_kind(v); }},
      {"forcing", [](auto& c, auto& k, auto& v) { c.forcing = parse_double(k, v); }},
      {"dt", [](auto& c, auto& k, auto& v) { c.dt = parse_double(k, v); }},
      {"ux", [](auto& c, auto& k, auto& v) { c.ux = parse_double(k, v); }},
      {"uy", [](auto& c, auto& k, auto& v) { c.uy = parse_double(k, v); }},
      {"kappa", [](auto& c, auto& k, auto& v) { c.kappa = parse_double(k, v); }},
      {"window", [](auto& c, auto& k, auto& v) { c.window = parse_double(k, v); }},
      {"reference_spinup",
       [](auto& c, auto& k, auto& v) { c.reference_spinup = parse_double(k, v); }},
      {"background_spinup",
       [](auto& c, auto& k, auto& v) { c.background_spinup = parse_double(k, v); }},
      {"ensemble_spinup",
       [](auto& c, auto& k, auto& v) { c.ensemble_spinup = parse_double(k, v); }},
      {"nens", [](auto& c, auto& k, auto& v) { c.nens = parse_int(k, v); }},
      {"cycles", [](auto& c, auto& k, auto& v) { c.cycles = parse_int(k, v); }},
      {"obs_fraction", [](auto& c, auto& k, auto& v) { c.obs_fraction = parse_double(k, v); }},
      {"background_factor",
       [](auto& c, auto& k, auto& v) { c.background_factor = parse_double(k, v); }},
      {"obs_noise_factor",
       [](auto& c, auto& k, auto& v) { c.obs_noise_factor = parse_double(k, v); }},
      {"observe", [](auto& c, auto& k, auto& v) { c.observe = parse_bool(k, v); }},
      {"methods",
       [](auto& c, auto&, auto& v) {
         c.methods.clear();
         for (const auto& m : split_list(v)) c.methods.push_back(parse_method(m));
       }},
      {"zeta", [](auto& c, auto& k, auto& v) { c.assimilation.zeta = parse_int(k, v); }},
      {"delta",
       [](auto& c, auto& k, auto& v) { c.assimilation.delta = static_cast<int>(parse_int(k, v)); }},
      {"workers",
       [](auto& c, auto& k, auto& v) {
         c.assimilation.workers = static_cast<int>(parse_int(k, v));
       }},
      {"inflation",
       [](auto& c, auto& k, auto& v) { c.assimilation.inflation = parse_double(k, v); }},
      {"seed", [](auto& c, auto& k, auto& v) { c.assimilation.seed = parse_u64(k, v); }},
      {"dense_cap", [](auto& c, auto& k, auto& v) { c.assimilation.dense_cap = parse_int(k, v); }},
      {"out_dir", [](auto& c, auto&, auto& v) { c.out_dir = v; }},
  };
  return table;
}

Vector ensemble_mean(const Matrix& x) { return row_means(x); }

}  // namespace

const std::vector<std::string>& experiment_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

ExperimentConfig ExperimentConfig::from_keys(const KeyValueConfig& kv) {
  for (const auto& [key, value] : kv.values()) {
    const auto& keys = experiment_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError("unknown configuration key '" + key + "'");
    }
  }
  ExperimentConfig c;
  if (auto it = kv.values().find("model"); it != kv.values().end()) {
    c.model = parse_model_kind(it->second);
    apply_model_defaults(c);
  }
  for (const auto& [name, setter] : setters()) {
    if (auto it = kv.values().find(name); it != kv.values().end()) setter(c, name, it->second);
  }
  if (c.grid == GridKind::ring1d) {
    c.ny = 1;
    c.boundary = Boundary::periodic;
  }
  c.validate();
  return c;
}

GridGeometry ExperimentConfig::geometry() const {
  return GridGeometry(grid, nx, ny, ordering, boundary);
}

ModelHandle ExperimentConfig::make_model() const {
  const GridGeometry g = geometry();
  switch (model) {
    case ModelKind::lorenz96: return ModelHandle::lorenz96(g, {forcing, dt});
    case ModelKind::advdiff2d: return ModelHandle::advdiff2d(g, {ux, uy, kappa, dt});
    case ModelKind::identity: return ModelHandle::identity(g, dt);
  }
  throw ConfigError("unsupported model");
}

void ExperimentConfig::validate() const {
  if (nens < 2) throw ConfigError("nens must be >= 2");
  if (cycles < 1) throw ConfigError("cycles must be >= 1");
  if (!(obs_fraction > 0.0 && obs_fraction <= 1.0)) {
    throw ConfigError("obs_fraction must lie in (0, 1]");
  }
  if (!(background_factor > 0.0)) throw ConfigError("background_factor must be positive");
  if (!(obs_noise_factor >= 0.0)) throw ConfigError("obs_noise_factor must be nonnegative");
  if (methods.empty()) throw ConfigError("at least one method is required");
  assimilation.validate();
  const ModelHandle m = make_model();  // checks model/geometry compatibility and stability
  for (double w : {window, reference_spinup, background_spinup, ensemble_spinup}) {
    try {
      m.steps_for(w);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  choose_tiling(geometry(), assimilation.delta);
}

std::string ExperimentConfig::echo() const {
  std::ostringstream os;
  os << "grid = " << to_string(grid) << '\n'
     << "nx = " << nx << '\n'
     << "ny = " << ny << '\n'
     << "ordering = " << to_string(ordering) << '\n'
     << "boundary = " << to_string(boundary) << '\n'
     << "model = " << to_string(model) << '\n'
     << "forcing = " << fmt_double(forcing) << '\n'
     << "dt = " << fmt_double(dt) << '\n'
     << "ux = " << fmt_double(ux) << '\n'
     << "uy = " << fmt_double(uy) << '\n'
     << "kappa = " << fmt_double(kappa) << '\n'
     << "window = " << fmt_double(window) << '\n'
     << "reference_spinup = " << fmt_double(reference_spinup) << '\n'
     << "background_spinup = " << fmt_double(background_spinup) << '\n'
     << "ensemble_spinup = " << fmt_double(ensemble_spinup) << '\n'
     << "nens = " << nens << '\n'
     << "cycles = " << cycles << '\n'
     << "obs_fraction = " << fmt_double(obs_fraction) << '\n'
     << "background_factor = " << fmt_double(background_factor) << '\n'
     << "obs_noise_factor = " << fmt_double(obs_noise_factor) << '\n'
     << "observe = " << (observe ? "true" : "false") << '\n'
     << "methods = ";
  for (std::size_t i = 0; i < methods.size(); ++i) {
    os << (i ? "," : "") << to_string(methods[i]);
  }
  os << '\n'
     << "zeta = " << assimilation.zeta << '\n'
     << "delta = " << assimilation.delta << '\n'
     << "workers = " << assimilation.workers << '\n'
     << "inflation = " << fmt_double(assimilation.inflation) << '\n'
     << "seed = " << assimilation.seed << '\n'
     << "dense_cap = " << assimilation.dense_cap << '\n';
  if (!out_dir.empty()) os << "out_dir = " << out_dir.string() << '\n';
  return os.str();
}

Vector initial_reference(const ExperimentConfig& cfg) {
  const GridGeometry g = cfg.geometry();
  Vector x(g.nstate());
  if (cfg.model == ModelKind::lorenz96) {
    x.setConstant(cfg.forcing);
    x[0] += 0.01;
    return x;
  }
  const double two_pi = 2.0 * std::numbers::pi;
  for (Index label = 0; label < g.nstate(); ++label) {
    const Cell c = g.cell_of(label);
    const double u = static_cast<double>(c.col) / static_cast<double>(g.nx());
    const double v = static_cast<double>(c.row) / static_cast<double>(g.ny());
    x[label] = 10.0 + 2.0 * std::sin(two_pi * u) * std::cos(two_pi * v) +
               std::sin(2.0 * two_pi * (u + v)) + 0.5 * std::cos(3.0 * two_pi * u);
  }
  return x;
}

IndexList observation_lattice(const GridGeometry& geometry, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("observation fraction must lie in (0, 1]");
  const Index n = geometry.nstate();
  const auto target = static_cast<Index>(
      std::ceil(p * static_cast<double>(n) - 1e-9 * static_cast<double>(n)));
  const Index m = std::clamp<Index>(target, 1, n);

  IndexList candidates;
  if (geometry.kind() == GridKind::ring1d || geometry.ny() == 1) {
    for (Index i = 0; i < m; ++i) candidates.push_back(geometry.linear_index(0, i * geometry.nx() / m));
    std::sort(candidates.begin(), candidates.end());
    return candidates;
  }

  const Index nx = geometry.nx(), ny = geometry.ny();
  Index rx = std::min<Index>(nx, static_cast<Index>(std::ceil(std::sqrt(p) * static_cast<double>(nx) - 1e-9)));
  rx = std::max<Index>(rx, 1);
  Index ry = std::min<Index>(ny, (m + rx - 1) / rx);
  while (rx * ry < m) {
    if (rx < nx) ++rx;
    else ++ry;
  }
  for (Index a = 0; a < ry; ++a) {
    for (Index b = 0; b < rx; ++b) {
      candidates.push_back(geometry.linear_index(a * ny / ry, b * nx / rx));
    }
  }
  std::sort(candidates.begin(), candidates.end());
  const Index total = static_cast<Index>(candidates.size());
  IndexList out;
  out.reserve(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) out.push_back(candidates[static_cast<std::size_t>(i * total / m)]);
  return out;
}

ObservationNetwork build_observation_network(const GridGeometry& geometry, double p,
                                             const Vector& xref, double noise_factor,
                                             std::uint64_t seed, std::uint64_t cycle) {
  if (xref.size() != geometry.nstate()) {
    throw DomainError("reference state does not match the geometry");
  }
  ObservationNetwork net;
  net.indices = observation_lattice(geometry, p);
  const Index nobs = net.size();
  net.r_diag.resize(nobs);
  net.y.resize(nobs);
  RngStream stream(seed, StreamTag::observation_noise, {cycle});
  for (Index k = 0; k < nobs; ++k) {
    const double hx = xref[net.indices[static_cast<std::size_t>(k)]];
    const double sd = noise_factor * hx;
    net.r_diag[k] = std::max(sd * sd, kObservationVarianceFloor);
    net.y[k] = hx + std::sqrt(net.r_diag[k]) * stream.normal();
  }
  return net;
}

SpinUp spin_up(const ModelHandle& model, const Vector& xref0, double factor, Index nens,
               std::uint64_t seed, double background_window, double ensemble_window,
               int workers) {
  if (!(factor > 0.0)) throw ConfigError("spin-up perturbation factor must be positive");
  if (nens < 2) throw ConfigError("spin-up needs nens >= 2");

  auto perturb = [factor](const Vector& x, RngStream& stream) {
    Vector out(x.size());
    for (Index i = 0; i < x.size(); ++i) {
      const double sd = std::sqrt(factor * factor * x[i] * x[i] + kPerturbationVarianceFloor);
      out[i] = x[i] + sd * stream.normal();
    }
    return out;
  };

  try {
    RngStream ref_stream(seed, StreamTag::reference_perturbation);
    const Vector background =
        propagate(model, perturb(xref0, ref_stream), background_window);

    Matrix members(xref0.size(), nens);
    for (Index i = 0; i < nens; ++i) {
      RngStream s(seed, StreamTag::member_perturbation, {static_cast<std::uint64_t>(i)});
      members.col(i) = perturb(background, s);
    }
    SpinUp out;
    out.ensemble = EnsembleState{propagate_ensemble(model, members, ensemble_window, workers),
                                 EnsembleRole::background};
    out.reference = propagate(model, xref0, background_window + ensemble_window);
    return out;
  } catch (const Error&) {
    rethrow_with_context("spin-up: ");
  }
}

RmseSeries rmse(std::span<const Vector> xref, std::span<const Vector> xa) {
  if (xref.size() != xa.size()) {
    throw DomainError("rmse: " + std::to_string(xref.size()) + " reference states for " +
                      std::to_string(xa.size()) + " analyses");
  }
  RmseSeries out;
  if (xref.empty()) return out;
  double sum = 0.0, sum_norm = 0.0;
  for (std::size_t k = 0; k < xref.size(); ++k) {
    if (xref[k].size() != xa[k].size() || xref[k].size() == 0) {
      throw DomainError("rmse: state dimension mismatch at cycle " + std::to_string(k));
    }
    const double ee = (xref[k] - xa[k]).squaredNorm();
    const double ee_norm = ee / static_cast<double>(xref[k].size());
    out.raw.push_back(std::sqrt(ee));
    out.normalized.push_back(std::sqrt(ee_norm));
    sum += ee;
    sum_norm += ee_norm;
  }
  const double n = static_cast<double>(xref.size());
  out.raw_total = std::sqrt(sum / n);
  out.normalized_total = std::sqrt(sum_norm / n);
  return out;
}

namespace {

// Removes every file it created unless release() is called.
class OutputGuard {
 public:
  explicit OutputGuard(std::filesystem::path dir) : dir_(std::move(dir)) {}
  ~OutputGuard() {
    if (released_) return;
    std::error_code ec;
    for (const auto& f : files_) std::filesystem::remove(f, ec);
  }
  OutputGuard(const OutputGuard&) = delete;
  OutputGuard& operator=(const OutputGuard&) = delete;

  void write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    files_.push_back(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out) throw Error("failed writing " + path.string());
  }
  void release() { released_ = true; }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> files_;
  bool released_ = false;
};

void append_rmse_rows(std::ostringstream& os, std::string_view tag, const RmseSeries& s) {
  for (std::size_t k = 0; k < s.raw.size(); ++k) {
    os << k << ',' << tag << ',' << fmt_double(s.raw[k]) << ','
       << fmt_double(s.normalized[k]) << '\n';
  }
}

}  // namespace

ExperimentResult run_twin_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const GridGeometry geometry = cfg.geometry();
  const ModelHandle model = cfg.make_model();
  const std::uint64_t seed = cfg.assimilation.seed;
  const int workers = cfg.assimilation.workers;

  const Vector truth_start =
      propagate(model, initial_reference(cfg), cfg.reference_spinup);
  const SpinUp spin = spin_up(model, truth_start, cfg.background_factor, cfg.nens, seed,
                              cfg.background_spinup, cfg.ensemble_spinup, workers);

  const auto ncycles = static_cast<std::size_t>(cfg.cycles);
  std::vector<Vector> truth;
  truth.reserve(ncycles);
  truth.push_back(spin.reference);
  for (std::size_t k = 1; k < ncycles; ++k) truth.push_back(propagate(model, truth.back(), cfg.window));

  std::vector<ScheduleEntry> schedule(ncycles);
  for (std::size_t k = 0; k < ncycles; ++k) {
    schedule[k].window = cfg.window;
    if (cfg.observe) {
      schedule[k].net = build_observation_network(geometry, cfg.obs_fraction, truth[k],
                                                  cfg.obs_noise_factor, seed, k);
    }
  }

  ExperimentResult result;
  result.nobs = schedule.front().net.size();

  {
    std::vector<Vector> means;
    means.reserve(ncycles);
    Matrix x = spin.ensemble.x;
    for (std::size_t k = 0; k < ncycles; ++k) {
      means.push_back(ensemble_mean(x));
      if (k + 1 < ncycles) x = propagate_ensemble(model, x, cfg.window, workers);
    }
    result.free_run = rmse(truth, means);
  }

  for (Method method : cfg.methods) {
    AssimilationConfig acfg = cfg.assimilation;
    acfg.method = method;
    FilterResult filtered = run_filter(spin.ensemble, model, schedule, acfg, geometry);
    std::vector<Vector> means;
    means.reserve(ncycles);
    for (const auto& a : filtered.analyses) means.push_back(ensemble_mean(a.x));
    result.methods.push_back({method, rmse(truth, means), std::move(filtered.reports)});
  }

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    OutputGuard guard(cfg.out_dir);

    std::ostringstream rm;
    rm << kRmseHeader << '\n';
    for (const auto& m : result.methods) append_rmse_rows(rm, to_string(m.method), m.rmse);
    append_rmse_rows(rm, kFreeRunTag, result.free_run);
    guard.write("rmse.csv", rm.str());

    std::ostringstream tm;
    tm << kTimingsHeader << '\n';
    for (const auto& m : result.methods) {
      for (const auto& r : m.reports) tm << timings_row(r) << '\n';
    }
    guard.write("timings.csv", tm.str());
    guard.write("config.txt", cfg.echo());
    guard.release();
  }
  return result;
}

std::vector<ExperimentResult> run_sweep(const ExperimentConfig& base, std::string_view param,
                                        const std::vector<long long>& values) {
  if (param != "zeta" && param != "delta" && param != "workers") {
    throw ConfigError("sweep parameter must be zeta, delta or workers (got '" +
                      std::string(param) + "')");
  }
  if (values.empty()) throw ConfigError("sweep needs at least one value");

  std::vector<ExperimentResult> results;
  std::ostringstream os;
  os << kSweepHeader << '\n';
  for (long long v : values) {
    ExperimentConfig cfg = base;
    if (param == "zeta") cfg.assimilation.zeta = v;
    if (param == "delta") cfg.assimilation.delta = static_cast<int>(v);
    if (param == "workers") cfg.assimilation.workers = static_cast<int>(v);
    if (!base.out_dir.empty()) {
      cfg.out_dir = base.out_dir / (std::string(param) + "_" + std::to_string(v));
    }
    ExperimentResult r;
    try {
      r = run_twin_experiment(cfg);
    } catch (const Error&) {
      rethrow_with_context(std::string(param) + "=" + std::to_string(v) + ": ");
    }
    for (const auto& m : r.methods) {
      double t = 0.0;
      for (const auto& rep : m.reports) t += rep.total;
      if (!m.reports.empty()) t /= static_cast<double>(m.reports.size());
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6f", t);
      os << param << ',' << v << ',' << to_string(m.method) << ','
         << fmt_double(m.rmse.raw_total) << ',' << fmt_double(m.rmse.normalized_total) << ','
         << buf << '\n';
    }
    os << param << ',' << v << ',' << kFreeRunTag << ',' << fmt_double(r.free_run.raw_total)
       << ',' << fmt_double(r.free_run.normalized_total) << ",0.000000\n";
    results.push_back(std::move(r));
  }

  if (!base.out_dir.empty()) {
    std::filesystem::create_directories(base.out_dir);
    OutputGuard guard(base.out_dir);
    guard.write("sweep.csv", os.str());
    guard.release();
  }
  return results;
}

PrecisionFactors dump_precision(const ExperimentConfig& cfg, int subdomain) {
  cfg.validate();
  const GridGeometry geometry = cfg.geometry();
  const ModelHandle model = cfg.make_model();
  const auto& a = cfg.assimilation;
  const std::vector<Subdomain> subs = decompose(geometry, a.delta, a.zeta);
  if (subdomain < 0 || subdomain >= static_cast<int>(subs.size())) {
    throw ConfigError("subdomain " + std::to_string(subdomain) + " out of range [0, " +
                      std::to_string(subs.size()) + ")");
  }

  const Vector truth_start = propagate(model, initial_reference(cfg), cfg.reference_spinup);
  const SpinUp spin = spin_up(model, truth_start, cfg.background_factor, cfg.nens, a.seed,
                              cfg.background_spinup, cfg.ensemble_spinup, a.workers);

  const Subdomain& sd = subs[static_cast<std::size_t>(subdomain)];
  const LocalProblem local = slice_subdomain(sd, spin.ensemble.x, ObservationNetwork{}, Matrix());
  PrecisionFactors f = fit_factors(deviations(local.xb, row_means(local.xb)), geometry,
                                   sd.local_order, a.zeta);

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    OutputGuard guard(cfg.out_dir);
    std::ostringstream t, d;
    write_t_triplets(t, f);
    write_d_vector(d, f);
    guard.write("T_subdomain" + std::to_string(subdomain) + ".txt", t.str());
    guard.write("D_subdomain" + std::to_string(subdomain) + ".txt", d.str());
    guard.release();
  }
  return f;
}

}  // namespace enkfmc
