#include "mixdc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/beta.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <sstream>
#include <thread>

#include "mixdc/data_io.hpp"
#include "mixdc/errors.hpp"
#include "mixdc/lowerbound.hpp"

namespace mixdc {

using nlohmann::json;

namespace {

DgpInstance mixture_instance(const MixtureParams& theta, const GridSpec& grid) {
  if (theta.d() != grid.d()) throw ConfigError("dgp: mixture dimension does not match the grid");
  DgpInstance inst{bin(theta, grid), {}, {}};
  inst.simulate = [truth = inst.truth, grid](std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset data{grid, {}};
    data.rows.reserve(n);
    for (std::size_t r = 0; r < n; ++r) data.rows.push_back(truth.sample(rng));
    return data;
  };
  const auto box = effective_box(theta, 10.0);
  inst.x_box.assign(box.begin() + grid.d_y(), box.end());
  return inst;
}

void check_beta_shapes(const std::vector<std::pair<double, double>>& shapes, const GridSpec& grid) {
  if (static_cast<int>(shapes.size()) != grid.d()) throw ConfigError("dgp: need one Beta shape pair per coordinate");
  for (const auto& [a, b] : shapes)
    if (!(a >= 1.0 && b >= 1.0)) throw ConfigError("dgp: Beta shapes must be at least 1 (bounded density)");
}

DgpInstance beta_instance(const std::vector<std::pair<double, double>>& shapes, const GridSpec& grid) {
  check_beta_shapes(shapes, grid);
  auto laws = std::make_shared<std::vector<boost::math::beta_distribution<double>>>();
  for (const auto& [a, b] : shapes) laws->emplace_back(a, b);
  const int dy = grid.d_y();

  auto mass = [laws, grid, dy](const GridPoint& y, std::span<const double> x) {
    double p = 1.0;
    for (int j = 0; j < dy; ++j) {
      const Interval c = grid.cell_interval(j, y.levels[static_cast<std::size_t>(j)]);
      const double lo = std::clamp(c.lo, 0.0, 1.0), hi = std::clamp(c.hi, 0.0, 1.0);
      const auto& law = (*laws)[static_cast<std::size_t>(j)];
      p *= hi > lo ? boost::math::cdf(law, hi) - boost::math::cdf(law, lo) : 0.0;
    }
    for (int i = 0; i < grid.d_x(); ++i) {
      const double v = x[static_cast<std::size_t>(i)];
      if (v < 0.0 || v > 1.0) return 0.0;
      p *= boost::math::pdf((*laws)[static_cast<std::size_t>(dy + i)], v);
    }
    return p;
  };
  LatentDensity latent;
  latent.d = grid.d();
  latent.density = [laws](std::span<const double> z) {
    double p = 1.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (z[i] < 0.0 || z[i] > 1.0) return 0.0;
      p *= boost::math::pdf((*laws)[i], z[i]);
    }
    return p;
  };
  latent.sample = [shapes](Rng& rng, std::span<double> z) {
    for (std::size_t i = 0; i < z.size(); ++i) {
      std::gamma_distribution<double> ga(shapes[i].first, 1.0), gb(shapes[i].second, 1.0);
      const double u = ga(rng), v = gb(rng);
      z[i] = u / (u + v);
    }
  };
  latent.support.assign(static_cast<std::size_t>(grid.d()), Interval{0.0, 1.0});
  auto sampler = [draw = latent.sample, grid](Rng& rng) {
    std::vector<double> z(static_cast<std::size_t>(grid.d()));
    draw(rng, z);
    return bin_sample(grid, z);
  };
  DgpInstance inst{MixedDistribution(grid, mass, sampler, latent), {}, {}};
  inst.simulate = [truth = inst.truth, grid](std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset data{grid, {}};
    for (std::size_t r = 0; r < n; ++r) data.rows.push_back(truth.sample(rng));
    return data;
  };
  inst.x_box.assign(static_cast<std::size_t>(grid.d_x()), Interval{0.0, 1.0});
  return inst;
}

DgpInstance hypothesis_instance(const DgpSpec& dgp, const GridSpec& grid, double n,
                                const std::optional<SmoothnessSpec>& smoothness) {
  if (!smoothness) throw ConfigError("dgp: hypothesis data need a smoothness specification");
  RateInputs in;
  in.grid = grid;
  in.smoothness = *smoothness;
  in.n = n;
  auto fam = std::make_shared<const HypothesisFamily>(HypothesisFamily::build(in, dgp.hypothesis));
  if (dgp.hypothesis_index >= fam->hypotheses())
    throw ConfigError("dgp: hypothesis index " + std::to_string(dgp.hypothesis_index) + " exceeds the codebook size " +
                      std::to_string(fam->hypotheses()));
  const std::size_t j = dgp.hypothesis_index;
  DgpInstance inst{fam->binned(j), {}, {}};
  inst.simulate = [fam, j, grid](std::size_t size, std::uint64_t seed) {
    return Dataset{grid, sample_hypothesis(*fam, j, size, seed).observations};
  };
  inst.x_box.assign(static_cast<std::size_t>(grid.d_x()), Interval{0.0, 1.0});
  return inst;
}

std::string n_text(const std::vector<int>& N) {
  std::string s;
  for (std::size_t j = 0; j < N.size(); ++j) s += (j ? "x" : "") + std::to_string(N[j]);
  return s;
}

std::string opt_text(const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; }

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return key == k; }) == keys.end())
      throw ConfigError(where + ": unknown key \"" + key + "\"");
  }
}

}  // namespace

DgpInstance instantiate(const DgpSpec& dgp, const GridSpec& grid, double n,
                        const std::optional<SmoothnessSpec>& smoothness) {
  switch (dgp.kind) {
    case DgpKind::Mixture: return mixture_instance(dgp.mixture, grid);
    case DgpKind::Beta: return beta_instance(dgp.beta_shapes, grid);
    case DgpKind::Hypothesis: return hypothesis_instance(dgp, grid, n, smoothness);
  }
  throw ConfigError("dgp: unknown kind");
}

void ExperimentConfig::validate() const {
  if (replications < 1) throw ConfigError("replications must be at least 1");
  if (schedule.empty()) throw ConfigError("schedule is empty");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (mcmc.iters <= mcmc.burnin) throw ConfigError("mcmc: iters must exceed burnin");
  if (mcmc.thin < 1) throw ConfigError("mcmc: thin must be at least 1");
  prior.validate();
  for (const auto& e : schedule) {
    if (e.n < 1) throw ConfigError("schedule: n must be positive");
    const GridSpec g = grid_for(e);
    if (smoothness) smoothness->validate(g.d());
  }
  if (frequency_baseline && base_grid.d_x() > 0)
    throw ConfigError("frequency_baseline needs a purely discrete grid");
  switch (dgp.kind) {
    case DgpKind::Mixture:
      if (dgp.mixture.d() != base_grid.d()) throw ConfigError("dgp: mixture dimension does not match the grid");
      break;
    case DgpKind::Beta: check_beta_shapes(dgp.beta_shapes, base_grid); break;
    case DgpKind::Hypothesis:
      if (!smoothness) throw ConfigError("dgp: hypothesis data need a smoothness specification");
      break;
  }
}

GridSpec ExperimentConfig::grid_for(const ScheduleEntry& e) const {
  const int dy = base_grid.d_y();
  std::vector<int> N;
  switch (e.N.kind) {
    case NSpec::Kind::Const: N = base_grid.N(); break;
    case NSpec::Kind::SqrtN: N.assign(static_cast<std::size_t>(dy), static_cast<int>(std::ceil(std::sqrt(double(e.n)) - 1e-9))); break;
    case NSpec::Kind::Fixed:
      N = e.N.fixed.size() == 1 ? std::vector<int>(static_cast<std::size_t>(dy), e.N.fixed[0]) : e.N.fixed;
      break;
  }
  if (static_cast<int>(N.size()) != dy) throw ConfigError("schedule: N has the wrong number of entries");
  for (int v : N)
    if (v < 1) throw ConfigError("schedule: N entries must be positive");
  return GridSpec(dy, base_grid.d_x(), N);
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  ExperimentConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  try {
    reject_unknown(j,
                   {"grid", "dgp", "smoothness", "schedule", "replications", "mcmc", "prior", "quadrature",
                    "frequency_baseline", "seed", "threads", "out_dir"},
                   "experiment config");
    const json& g = j.at("grid");
    if (g.is_string()) c.base_grid = GridSpec::parse(g.get<std::string>());
    else c.base_grid = GridSpec(g.at("d_y").get<int>(), g.at("d_x").get<int>(), get_or(g, "N", std::vector<int>{}));

    const json& d = j.at("dgp");
    const std::string type = d.at("type").get<std::string>();
    if (type == "mixture") {
      reject_unknown(d, {"type", "weights", "means", "scales"}, "dgp");
      c.dgp.kind = DgpKind::Mixture;
      c.dgp.mixture.weights = d.at("weights").get<std::vector<double>>();
      c.dgp.mixture.means = d.at("means").get<std::vector<std::vector<double>>>();
      c.dgp.mixture.scales = d.at("scales").get<std::vector<double>>();
      try {
        c.dgp.mixture.validate(c.base_grid.d());
      } catch (const Error& e) {
        throw ConfigError(std::string("dgp: ") + e.what());
      }
    } else if (type == "hypothesis") {
      reject_unknown(d, {"type", "index", "c0", "codebook_seed"}, "dgp");
      c.dgp.kind = DgpKind::Hypothesis;
      c.dgp.hypothesis_index = get_or<std::size_t>(d, "index", 1);
      if (d.contains("c0")) c.dgp.hypothesis.c0 = d.at("c0").get<double>();
      c.dgp.hypothesis.seed = get_or<std::uint64_t>(d, "codebook_seed", 1);
    } else if (type == "beta") {
      reject_unknown(d, {"type", "shapes"}, "dgp");
      c.dgp.kind = DgpKind::Beta;
      for (const auto& p : d.at("shapes")) c.dgp.beta_shapes.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    } else {
      throw ConfigError("dgp: unknown type \"" + type + "\"");
    }

    if (j.contains("smoothness")) {
      const json& s = j.at("smoothness");
      reject_unknown(s, {"beta", "L"}, "smoothness");
      c.smoothness = SmoothnessSpec{s.at("beta").get<std::vector<double>>(), get_or(s, "L", 1.0)};
    }

    for (const auto& e : j.at("schedule")) {
      reject_unknown(e, {"n", "N"}, "schedule");
      ScheduleEntry entry;
      entry.n = e.at("n").get<long>();
      if (!e.contains("N")) entry.N.kind = NSpec::Kind::Const;
      else if (e.at("N").is_string()) {
        const std::string tag = e.at("N").get<std::string>();
        if (tag == "sqrt_n") entry.N.kind = NSpec::Kind::SqrtN;
        else if (tag == "const") entry.N.kind = NSpec::Kind::Const;
        else throw ConfigError("schedule: unknown N tag \"" + tag + "\"");
      } else if (e.at("N").is_number_integer()) {
        entry.N.kind = NSpec::Kind::Fixed;
        entry.N.fixed = {e.at("N").get<int>()};
      } else {
        entry.N.kind = NSpec::Kind::Fixed;
        entry.N.fixed = e.at("N").get<std::vector<int>>();
      }
      c.schedule.push_back(entry);
    }

    c.replications = get_or(j, "replications", 1);
    if (j.contains("mcmc")) {
      const json& m = j.at("mcmc");
      reject_unknown(m, {"iters", "burnin", "thin", "initial_m"}, "mcmc");
      c.mcmc.iters = get_or(m, "iters", c.mcmc.iters);
      c.mcmc.burnin = get_or(m, "burnin", c.mcmc.burnin);
      c.mcmc.thin = get_or(m, "thin", c.mcmc.thin);
      c.mcmc.initial_m = get_or(m, "initial_m", c.mcmc.initial_m);
    }
    if (j.contains("prior")) c.prior = prior_from_json(j.at("prior").dump());
    if (j.contains("quadrature")) {
      const json& q = j.at("quadrature");
      reject_unknown(q, {"x_box", "panels", "order"}, "quadrature");
      c.quad.panels = get_or(q, "panels", c.quad.panels);
      c.quad.order = get_or(q, "order", c.quad.order);
      if (q.contains("x_box")) {
        for (const auto& side : q.at("x_box")) c.quad.x_box.push_back({side.at(0).get<double>(), side.at(1).get<double>()});
        c.quad_box_given = true;
      }
    }
    c.frequency_baseline = get_or(j, "frequency_baseline", false);
    c.seed = get_or<std::uint64_t>(j, "seed", 1);
    c.threads = get_or(j, "threads", 1);
    c.out_dir = get_or<std::string>(j, "out_dir", ".");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

std::optional<LineFit> ols(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) return std::nullopt;
  const double slope = sxy / sxx;
  return LineFit{slope, my - slope * mx};
}

FitOutcome fit_and_score(const Dataset& data, const MixedDistribution& truth, const PriorConfig& prior,
                         const McmcOptions& mcmc, const DistanceQuad& quad) {
  FitOutcome out;
  out.sample = run_chain(data, prior, mcmc);
  if (out.sample.draws.empty()) throw Error("fit: no retained draws");
  for (const auto& th : out.sample.draws) out.m_posterior_mean += th.m();
  out.m_posterior_mean /= static_cast<double>(out.sample.draws.size());
  DistanceQuad q = quad;
  q.convention = TvConvention::L1;
  out.tv = mixed_distances(posterior_predictive(out.sample), truth, q).tv;
  return out;
}

std::vector<double> frequency_pmf(const Dataset& data) {
  std::vector<double> pmf(data.grid.support_size(), 0.0);
  if (data.size() == 0) throw DomainError("frequency_pmf: empty dataset");
  for (const auto& row : data.rows) pmf[data.grid.flat_index(row.y)] += 1.0;
  for (double& p : pmf) p /= static_cast<double>(data.size());
  return pmf;
}

MixedDistribution frequency_baseline(const Dataset& data) {
  if (data.grid.d_x() > 0) throw UnsupportedError("frequency_baseline: continuous coordinates present; compare y marginals via frequency_pmf");
  return pmf_distribution(data.grid, frequency_pmf(data));
}

RateFitResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  const std::size_t entries = config.schedule.size();
  const std::size_t reps = static_cast<std::size_t>(config.replications);
  RateFitResult result;
  result.rows.resize(entries * reps);

  // Rates and DGPs depend only on the schedule entry.
  std::vector<GridSpec> grids;
  std::vector<std::optional<double>> gammas(entries), exponents(entries);
  for (std::size_t e = 0; e < entries; ++e) {
    grids.push_back(config.grid_for(config.schedule[e]));
    if (config.smoothness) {
      RateInputs in;
      in.grid = grids.back();
      in.smoothness = *config.smoothness;
      in.n = static_cast<double>(config.schedule[e].n);
      const RateReport rep = gamma_n(in);
      gammas[e] = rep.gamma_n;
      exponents[e] = -rep.star().exponent;
    }
  }
  std::vector<std::optional<DgpInstance>> dgps(entries);
  std::vector<std::string> dgp_errors(entries);
  for (std::size_t e = 0; e < entries; ++e) {
    try {
      dgps[e] = instantiate(config.dgp, grids[e], static_cast<double>(config.schedule[e].n), config.smoothness);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& ex) {
      dgp_errors[e] = ex.what();
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < result.rows.size(); job = next++) {
      const std::size_t e = job / reps;
      const int rep = static_cast<int>(job % reps);
      ResultRow row;
      row.entry = e;
      row.n = config.schedule[e].n;
      row.N = grids[e].N();
      row.rep = rep;
      row.gamma_n = gammas[e];
      row.theory_exponent = exponents[e];
      const auto start = std::chrono::steady_clock::now();
      try {
        if (!dgps[e]) throw Error(dgp_errors[e]);
        const DgpInstance& dgp = *dgps[e];
        const Dataset data = dgp.simulate(static_cast<std::size_t>(row.n), stream_key(config.seed, {e, job % reps, 1}));
        McmcOptions mo = config.mcmc;
        mo.seed = stream_key(config.seed, {e, job % reps, 2});
        DistanceQuad quad = config.quad;
        if (!config.quad_box_given) quad.x_box = dgp.x_box;
        const FitOutcome fit = fit_and_score(data, dgp.truth, config.prior, mo, quad);
        row.tv = fit.tv;
        row.m_posterior_mean = fit.m_posterior_mean;
        if (config.frequency_baseline) row.tv_frequency = mixed_distances(frequency_baseline(data), dgp.truth, quad).tv;
        row.ok = true;
      } catch (const std::exception& ex) {
        row.ok = false;
        row.error = ex.what();
      }
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      result.rows[job] = row;
      if (progress) progress(row);
    }
  };
  const int workers = std::min<int>(config.threads, static_cast<int>(result.rows.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  }

  std::vector<double> log_n, log_tv, log_gamma;
  for (std::size_t e = 0; e < entries; ++e) {
    ScheduleSummary s;
    s.n = config.schedule[e].n;
    s.N = grids[e].N();
    s.gamma_n = gammas[e];
    std::vector<double> tvs;
    for (std::size_t r = 0; r < reps; ++r) {
      const ResultRow& row = result.rows[e * reps + r];
      if (row.ok) tvs.push_back(row.tv);
      else ++result.failures;
    }
    s.count = static_cast<int>(tvs.size());
    for (double v : tvs) s.mean_tv += v / static_cast<double>(tvs.size());
    if (tvs.size() > 1) {
      for (double v : tvs) s.sd_tv += (v - s.mean_tv) * (v - s.mean_tv);
      s.sd_tv = std::sqrt(s.sd_tv / static_cast<double>(tvs.size() - 1));
    }
    if (s.count > 0 && s.mean_tv > 0.0) {
      log_n.push_back(std::log(static_cast<double>(s.n)));
      log_tv.push_back(std::log(s.mean_tv));
    }
    result.table.push_back(s);
  }
  result.fit = ols(log_n, log_tv);
  if (config.smoothness) {
    std::vector<double> xs;
    for (std::size_t e = 0; e < entries; ++e) {
      xs.push_back(std::log(static_cast<double>(config.schedule[e].n)));
      log_gamma.push_back(std::log(*gammas[e]));
    }
    if (auto f = ols(xs, log_gamma)) result.theory_exponent = f->slope;
  }
  return result;
}

std::string results_csv(const RateFitResult& result) {
  std::ostringstream out;
  out << "n,N,rep,tv,tv_frequency,seconds,m_posterior_mean,gamma_n,theory_exponent,status\n";
  char secs[32];
  for (const auto& r : result.rows) {
    std::snprintf(secs, sizeof secs, "%.3f", r.seconds);
    out << r.n << "," << n_text(r.N) << "," << r.rep << "," << (r.ok ? format_double(r.tv) : "") << ","
        << opt_text(r.tv_frequency) << "," << secs << "," << (r.ok ? format_double(r.m_posterior_mean) : "") << ","
        << opt_text(r.gamma_n) << "," << opt_text(r.theory_exponent) << "," << (r.ok ? "ok" : "failed") << "\n";
  }
  return out.str();
}

std::string summary_json(const RateFitResult& result) {
  using ojson = nlohmann::ordered_json;
  ojson j;
  j["slope"] = result.fit ? ojson(result.fit->slope) : ojson(nullptr);
  j["intercept"] = result.fit ? ojson(result.fit->intercept) : ojson(nullptr);
  j["theory_exponent"] = result.theory_exponent ? ojson(*result.theory_exponent) : ojson(nullptr);
  ojson by_row = ojson::array();
  for (const auto& r : result.rows) by_row.push_back(r.gamma_n ? ojson(*r.gamma_n) : ojson(nullptr));
  j["gamma_n_by_row"] = by_row;
  ojson table = ojson::array();
  for (const auto& s : result.table) {
    ojson t;
    t["n"] = s.n;
    t["N"] = s.N;
    t["mean_tv"] = s.mean_tv;
    t["sd_tv"] = s.sd_tv;
    t["count"] = s.count;
    t["gamma_n"] = s.gamma_n ? ojson(*s.gamma_n) : ojson(nullptr);
    table.push_back(t);
  }
  j["table"] = table;
  j["rows"] = result.rows.size();
  j["failures"] = result.failures;
  ojson errors = ojson::array();
  for (const auto& r : result.rows)
    if (!r.ok) errors.push_back(ojson{{"n", r.n}, {"rep", r.rep}, {"error", r.error}});
  j["errors"] = errors;
  return j.dump(2) + "\n";
}

}  // namespace mixdc
