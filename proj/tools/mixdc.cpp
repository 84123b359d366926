// Command-line front end: rates, lower-bound construction, simulation,
// fitting, evaluation, experiments and the sampler self-test.
#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "mixdc/data_io.hpp"
#include "mixdc/distances.hpp"
#include "mixdc/errors.hpp"
#include "mixdc/experiment.hpp"
#include "mixdc/geweke.hpp"
#include "mixdc/lowerbound.hpp"
#include "mixdc/mcmc.hpp"
#include "mixdc/rates.hpp"

using namespace mixdc;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("not a number list: " + text);
    }
  }
  return out;
}

RateInputs rate_inputs(const std::string& grid, const std::string& beta, double L, double n) {
  RateInputs in;
  in.grid = GridSpec::parse(grid);
  in.smoothness = SmoothnessSpec{parse_list(beta), L};
  in.n = n;
  return in;
}

struct Globals {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = ".";
};

std::string out_path(const Globals& g, const std::string& name) {
  return (std::filesystem::path(g.out_dir) / name).string();
}

int cmd_rates(const RateInputs& in, bool as_json) {
  in.validate();
  const RateReport rep = gamma_n(in);
  const int dy = in.grid.d_y();
  if (as_json) {
    ojson j;
    j["gamma_n"] = rep.gamma_n;
    j["J_star"] = subset_to_string(rep.j_star, dy);
    ojson rows = ojson::array();
    for (const auto& r : rep.rows) {
      ojson row;
      row["J"] = subset_to_string(r.J, dy);
      row["N_J"] = r.N_J;
      row["beta_Jc"] = r.beta_Jc.infinite ? ojson("inf") : ojson(r.beta_Jc.value);
      row["exponent"] = r.exponent;
      row["value"] = r.value;
      row["t_J0"] = t_J0(in, r.J);
      row["is_min"] = r.is_min;
      rows.push_back(row);
    }
    j["subsets"] = rows;
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::printf("%-16s %12s %12s %10s %14s %10s\n", "J", "N_J", "beta_Jc", "exponent", "value", "t_J0");
  for (const auto& r : rep.rows) {
    const std::string beta = r.beta_Jc.infinite ? "inf" : format_double(r.beta_Jc.value);
    std::printf("%-16s %12.6g %12s %10.6g %14.8g %10.6g%s\n", subset_to_string(r.J, dy).c_str(), r.N_J, beta.c_str(),
                r.exponent, r.value, t_J0(in, r.J), r.is_min ? "  *" : "");
  }
  std::printf("gamma_n = %.12g at J* = %s\n", rep.gamma_n, subset_to_string(rep.j_star, dy).c_str());
  return 0;
}

int cmd_lb(const RateInputs& in, std::optional<double> c0, const Globals& g, bool check_kl, bool hex) {
  LowerBoundOptions opts;
  opts.c0 = c0;
  opts.seed = g.seed;
  const HypothesisFamily fam = HypothesisFamily::build(in, opts);
  const BandwidthSchedule& s = fam.schedule();
  ojson j;
  j["gamma_n"] = fam.gamma_n();
  j["J_star"] = subset_to_string(fam.rates().j_star, in.grid.d_y());
  j["c0"] = fam.c0();
  ojson coords = ojson::array();
  for (int i = 0; i < fam.d(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const char* role = s.role[k] == CoordinateRole::Continuous ? "continuous"
                       : s.role[k] == CoordinateRole::SmoothedDiscrete ? "smoothed" : "unsmoothed";
    ojson c;
    c["role"] = role;
    c["h"] = s.h[k];
    c["beta_star"] = s.beta_star[k];
    c["m"] = s.m[k];
    if (s.role[k] == CoordinateRole::SmoothedDiscrete) {
      c["R"] = s.R[k];
      c["rho"] = s.rho[k];
    }
    coords.push_back(c);
  }
  j["coordinates"] = coords;
  j["m_bar"] = s.m_bar;
  const Codebook& cb = fam.codebook();
  j["codebook"] = {{"size", cb.size()},
                   {"target", cb.target()},
                   {"target_reached", cb.target_reached()},
                   {"min_distance", cb.min_distance()},
                   {"threshold", cb.threshold()},
                   {"attempts", cb.attempts()}};
  if (hex) {
    ojson words = ojson::array();
    for (std::size_t w = 0; w < cb.size(); ++w) words.push_back(cb.hex(w));
    j["codewords"] = words;
  }
  j["min_density_bound"] = fam.min_density_bound();
  if (fam.hypotheses() > 2) j["tv_closed_form_1_2"] = tv_closed_form(fam, 1, 2);
  if (check_kl) {
    const KlCheck k = kl_bound_check(fam, 1, hypothesis_quad(fam));
    j["kl_check"] = {{"kl", k.kl},
                     {"bound", k.bound},
                     {"n_kl", k.n_kl},
                     {"vg_threshold", k.vg_threshold},
                     {"within_bound", k.within_bound},
                     {"vg_condition", k.vg_condition}};
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_simulate(const std::string& mixture_path, const std::string& config_path, long n, const std::string& out,
                 const Globals& g) {
  if (n < 1) throw ConfigError("simulate: --n must be positive");
  Dataset data;
  if (!mixture_path.empty()) {
    const MixtureDocument doc = mixture_from_json(read_file(mixture_path));
    DgpSpec dgp;
    dgp.mixture = doc.params;
    data = instantiate(dgp, doc.grid, static_cast<double>(n), std::nullopt).simulate(static_cast<std::size_t>(n), g.seed);
  } else if (!config_path.empty()) {
    const ExperimentConfig cfg = load_experiment_config(config_path);
    data = instantiate(cfg.dgp, cfg.base_grid, static_cast<double>(n), cfg.smoothness)
               .simulate(static_cast<std::size_t>(n), g.seed);
  } else {
    throw ConfigError("simulate: give --mixture or --config");
  }
  const std::string path = out.empty() ? out_path(g, "data.csv") : out;
  std::ostringstream ss;
  write_csv(ss, data);
  write_file(path, ss.str());
  std::cerr << "wrote " << data.size() << " rows to " << path << "\n";
  return 0;
}

int cmd_fit(const std::string& data_path, const std::string& grid, const std::string& prior_path, McmcOptions mo,
            const std::string& out, const Globals& g) {
  const GridSpec gs = GridSpec::parse(grid);
  const Dataset data = read_csv_file(data_path, gs);
  const PriorConfig prior = prior_path.empty() ? PriorConfig{} : prior_from_json(read_file(prior_path));
  mo.seed = g.seed;
  const PosteriorSample ps = run_chain(data, prior, mo);
  const std::string path = out.empty() ? out_path(g, "draws.jsonl") : out;
  write_file(path, draws_to_jsonl(ps));
  double m_mean = 0.0;
  for (const auto& th : ps.draws) m_mean += th.m();
  ojson j;
  j["draws"] = ps.draws.size();
  j["m_posterior_mean"] = ps.draws.empty() ? ojson(nullptr) : ojson(m_mean / static_cast<double>(ps.draws.size()));
  j["scale_acceptance"] = ps.scale_acceptance;
  j["birth_acceptance"] = ps.birth_acceptance;
  j["death_acceptance"] = ps.death_acceptance;
  j["allocation_underflows"] = ps.allocation_underflows;
  j["out"] = path;
  std::cout << j.dump(2) << "\n";
  return 0;
}

PosteriorSample read_draws(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  PosteriorSample ps;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    MixtureDocument doc = mixture_from_json(line);
    if (first) ps.grid = doc.grid;
    else if (!(doc.grid == ps.grid)) throw ConfigError("draws: inconsistent grids");
    first = false;
    ps.draws.push_back(std::move(doc.params));
  }
  if (ps.draws.empty()) throw ConfigError("draws: file holds no draws");
  return ps;
}

int cmd_eval(const std::string& draws_path, const std::string& truth_path, int panels, int order) {
  const PosteriorSample ps = read_draws(draws_path);
  const MixtureDocument truth = mixture_from_json(read_file(truth_path));
  if (!(truth.grid == ps.grid)) throw ConfigError("eval: truth and draws live on different grids");
  DistanceQuad quad;
  quad.panels = panels;
  quad.order = order;
  auto box = effective_box(truth.params, 10.0);
  for (const auto& th : ps.draws) {
    const auto b = effective_box(th, 10.0);
    for (std::size_t i = 0; i < box.size(); ++i) {
      box[i].lo = std::min(box[i].lo, b[i].lo);
      box[i].hi = std::max(box[i].hi, b[i].hi);
    }
  }
  quad.x_box.assign(box.begin() + truth.grid.d_y(), box.end());
  const DistanceSet s = mixed_distances(posterior_predictive(ps), bin(truth.params, truth.grid), quad);
  ojson j;
  j["draws"] = ps.draws.size();
  j["tv"] = s.tv;
  j["hellinger"] = s.hellinger;
  j["kl"] = std::isfinite(s.kl) ? ojson(s.kl) : ojson("inf");
  j["tail_mass_estimate"] = s.tail_mass_1;
  j["tail_mass_truth"] = s.tail_mass_2;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_experiment(const std::string& config_path, const Globals& g, bool seed_set, bool threads_set,
                   bool out_set, bool quiet) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (seed_set) cfg.seed = g.seed;
  if (threads_set) cfg.threads = g.threads;
  if (out_set) cfg.out_dir = g.out_dir;
  const RateFitResult res = run_experiment(cfg, [&](const ResultRow& r) {
    if (quiet) return;
    std::ostringstream line;
    line << "n=" << r.n << " rep=" << r.rep << " " << (r.ok ? "tv=" + format_double(r.tv) : "failed: " + r.error)
         << "\n";
    std::cerr << line.str();
  });
  write_file((std::filesystem::path(cfg.out_dir) / "results.csv").string(), results_csv(res));
  write_file((std::filesystem::path(cfg.out_dir) / "summary.json").string(), summary_json(res));
  std::cout << summary_json(res);
  return res.too_many_failures() ? kExitPartial : 0;
}

int cmd_geweke(GewekeOptions opts, const Globals& g) {
  opts.seed = g.seed;
  const GewekeReport rep = geweke_test(opts);
  ojson j = ojson::array();
  for (const auto& s : rep.stats)
    j.push_back(ojson{{"statistic", s.name},
                      {"mean_marginal", s.mean_marginal},
                      {"mean_successive", s.mean_successive},
                      {"z", s.z},
                      {"p_value", s.p_value}});
  std::cout << j.dump(2) << "\n";
  return rep.min_p_value() > 0.01 ? 0 : kExitPartial;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed discrete-continuous density estimation: rates, lower bounds, posterior sampling"};
  app.require_subcommand(1);
  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Root random seed")->capture_default_str();
  auto* threads_opt = app.add_option("--threads", g.threads, "Worker threads for experiments")->check(CLI::PositiveNumber);
  auto* out_opt = app.add_option("--out-dir", g.out_dir, "Directory for output files");
  (void)seed_opt;

  std::string grid, beta = "1", prior_path, data_path, out, mixture_path, config_path, draws_path, truth_path;
  double L = 1.0, n = 1000.0;
  bool as_json = false, check_kl = false, hex = false, quiet = false;
  std::optional<double> c0;
  long sim_n = 1000;
  int panels = 512, order = 8;
  McmcOptions mo;
  GewekeOptions gw;
  gw.n = 20;

  auto* rates = app.add_subcommand("rates", "Minimax rate over discrete-coordinate subsets");
  rates->add_option("--grid", grid, "Grid \"N1,N2;dx\"")->required();
  rates->add_option("--beta", beta, "Smoothness per coordinate, comma separated")->required();
  rates->add_option("--L", L, "Hoelder constant");
  rates->add_option("--n", n, "Sample size")->required();
  rates->add_flag("--json", as_json, "JSON output");

  auto* lb = app.add_subcommand("lb-construct", "Build the lower-bound hypothesis family");
  lb->add_option("--grid", grid, "Grid \"N1,N2;dx\"")->required();
  lb->add_option("--beta", beta, "Smoothness per coordinate")->required();
  lb->add_option("--L", L, "Hoelder constant");
  lb->add_option("--n", n, "Sample size")->required();
  lb->add_option("--c0", c0, "Bump amplitude constant");
  lb->add_flag("--check-kl", check_kl, "Evaluate KL(q_1, q_0) numerically");
  lb->add_flag("--hex", hex, "List codewords");

  auto* sim = app.add_subcommand("simulate", "Draw a dataset as CSV");
  sim->add_option("--mixture", mixture_path, "Mixture JSON (includes the grid)");
  sim->add_option("--config", config_path, "Experiment config; uses its DGP and base grid");
  sim->add_option("--n", sim_n, "Rows")->required();
  sim->add_option("--out", out, "Output CSV (default <out-dir>/data.csv)");

  auto* fit = app.add_subcommand("fit", "Run the posterior sampler");
  fit->add_option("--data", data_path, "CSV data")->required();
  fit->add_option("--grid", grid, "Grid \"N1,N2;dx\"")->required();
  fit->add_option("--prior", prior_path, "Prior config JSON");
  fit->add_option("--iters", mo.iters, "Total iterations")->capture_default_str();
  fit->add_option("--burnin", mo.burnin, "Burn-in iterations")->capture_default_str();
  fit->add_option("--thin", mo.thin, "Thinning")->capture_default_str();
  fit->add_option("--out", out, "Draws as JSON lines (default <out-dir>/draws.jsonl)");

  auto* ev = app.add_subcommand("eval", "Distances between posterior mean and a true mixture");
  ev->add_option("--draws", draws_path, "JSON-lines draws")->required();
  ev->add_option("--truth", truth_path, "True mixture JSON")->required();
  ev->add_option("--panels", panels, "Panels per continuous axis")->capture_default_str();
  ev->add_option("--order", order, "Gauss-Legendre order per panel")->capture_default_str();

  auto* exp = app.add_subcommand("experiment", "Simulation study from a JSON config");
  exp->add_option("--config", config_path, "Experiment config")->required();
  exp->add_flag("--quiet", quiet, "No per-job progress on stderr");

  auto* gew = app.add_subcommand("geweke", "Joint-distribution test of the sampler");
  gew->add_option("--rounds", gw.rounds, "Rounds")->capture_default_str();
  gew->add_option("--n", gw.n, "Rows per simulated dataset")->capture_default_str();
  gew->add_option("--grid", grid, "Grid \"N1,N2;dx\" (default \"3;1\")");
  gew->add_option("--prior", prior_path, "Prior config JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*rates) return cmd_rates(rate_inputs(grid, beta, L, n), as_json);
    if (*lb) return cmd_lb(rate_inputs(grid, beta, L, n), c0, g, check_kl, hex);
    if (*sim) return cmd_simulate(mixture_path, config_path, sim_n, out, g);
    if (*fit) return cmd_fit(data_path, grid, prior_path, mo, out, g);
    if (*ev) return cmd_eval(draws_path, truth_path, panels, order);
    if (*exp) return cmd_experiment(config_path, g, seed_opt->count() > 0, threads_opt->count() > 0, out_opt->count() > 0, quiet);
    if (*gew) {
      if (!grid.empty()) gw.grid = GridSpec::parse(grid);
      if (!prior_path.empty()) gw.prior = prior_from_json(read_file(prior_path));
      return cmd_geweke(gw, g);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidGridPoint& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
