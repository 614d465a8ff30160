#include "tordiff/cli.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tordiff/errors.hpp"
#include "tordiff/evo_hmm.hpp"
#include "tordiff/exec.hpp"
#include "tordiff/experiments.hpp"
#include "tordiff/fokker_planck.hpp"
#include "tordiff/inference.hpp"
#include "tordiff/io.hpp"
#include "tordiff/tpd.hpp"

namespace tordiff {

namespace {

struct ParamOptions {
  int p = 2;
  std::vector<double> alpha;
  std::vector<double> mu;
  std::vector<double> sigma;
  std::string file;

  void add(CLI::App* app) {
    app->add_option("--p", p, "Dimension (1 or 2)")->check(CLI::IsMember({1, 2}));
    app->add_option("--alpha", alpha, "alpha (p = 1) or alpha1,alpha2,alpha3 (p = 2)")->delimiter(',');
    app->add_option("--mu", mu, "Stationary mean, p values")->delimiter(',');
    app->add_option("--sigma", sigma, "Diffusion sd per coordinate, p values")->delimiter(',');
    app->add_option("--params", file, "WN parameter JSON file (overrides the flags above)");
  }

  WnParams get() const;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return read_all(in);
}

WnParams ParamOptions::get() const {
  if (!file.empty()) return wn_params_from_json(slurp(file));
  const auto need = [](const std::vector<double>& v, std::size_t n, const char* what) {
    if (v.size() != n) throw ConfigError(std::string("--") + what + " needs " + std::to_string(n) + " value(s)");
  };
  if (p == 1) {
    need(alpha, 1, "alpha");
    need(mu, 1, "mu");
    need(sigma, 1, "sigma");
    return WnParams::circular(alpha[0], mu[0], sigma[0]);
  }
  need(alpha, 3, "alpha");
  need(mu, 2, "mu");
  need(sigma, 2, "sigma");
  return WnParams::toroidal(alpha[0], alpha[1], alpha[2], TorusPoint(mu[0], mu[1]), sigma[0], sigma[1]);
}

TorusPoint point_of(const std::vector<double>& v, int dim, const char* what) {
  if (static_cast<int>(v.size()) != dim)
    throw ConfigError(std::string("--") + what + " needs " + std::to_string(dim) + " value(s)");
  return dim == 1 ? TorusPoint(v[0]) : TorusPoint(v[0], v[1]);
}

std::vector<TpdKind> kinds_of(const std::vector<std::string>& names) {
  std::vector<TpdKind> out;
  for (const auto& n : names) {
    try {
      out.push_back(parse_tpd_kind(n));
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  return out;
}

EvoModel load_model(const std::string& path) { return evo_model_from_json(slurp(path)); }

std::vector<AlignedPairData> load_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  auto pairs = read_pair_dataset(in);
  if (pairs.empty()) throw ConfigError("'" + path + "' holds no aligned pairs");
  return pairs;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diffusion models on the torus: simulation, transition densities, inference and a pairwise evolution HMM",
               "tordiff"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 1;
  int threads = 0;
  std::string out_path;
  bool paper_scale = false;
  app.add_option("--seed", seed, "Master random seed");
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)")->envname("TORDIFF_THREADS");
  app.add_option("--out", out_path, "Output file (default: standard output)");
  app.add_flag("--paper-scale", paper_scale, "re-bench: 1000 replicates instead of 200");

  std::function<void(std::ostream&)> action;

  // simulate
  auto* sim = app.add_subcommand("simulate", "Fine-step Euler-Maruyama trajectory as CSV");
  ParamOptions sim_p;
  sim_p.add(sim);
  double sim_delta = 0.05;
  int sim_n = 1000;
  int sim_refine = 0;
  std::vector<double> sim_start;
  sim->add_option("--delta", sim_delta, "Observation spacing");
  sim->add_option("--n", sim_n, "Number of transitions");
  sim->add_option("--refine", sim_refine, "Euler steps per observation (default: delta / 0.001)");
  sim->add_option("--start", sim_start, "Start point (default: stationary draw)")->delimiter(',');
  sim->callback([&] {
    action = [&](std::ostream& os) {
      const WnParams params = sim_p.get();
      if (!(sim_delta > 0.0) || sim_n < 1) throw ConfigError("simulate needs --delta > 0 and --n >= 1");
      const long refine = sim_refine > 0 ? sim_refine : std::max(1L, std::lround(sim_delta / 0.001));
      Rng rng(seed);
      const TorusPoint start = sim_start.empty() ? sample_stationary(params, rng) : point_of(sim_start, params.dim(), "start");
      write_trajectory_csv(os, simulate_euler(params, start, sim_delta, static_cast<std::size_t>(sim_n),
                                              static_cast<std::size_t>(refine), rng, default_truncation(params)));
    };
  });

  // fit
  auto* fit = app.add_subcommand("fit", "Approximate maximum likelihood fit of a trajectory CSV");
  std::string fit_in, fit_kind = "WOU";
  std::vector<double> fit_sigma;
  bool fit_no_start = false;
  FitConfig fit_cfg;
  fit->add_option("--in", fit_in, "Trajectory CSV")->required();
  fit->add_option("--kind", fit_kind, "E, SO or WOU");
  fit->add_option("--fix-sigma", fit_sigma, "Known diffusion sds")->delimiter(',');
  fit->add_flag("--no-stationary-start", fit_no_start, "Drop the stationary density of the first point");
  fit->add_option("--ftol", fit_cfg.ftol, "Relative tolerance of the simplex");
  fit->add_option("--max-evals", fit_cfg.max_evaluations, "Likelihood evaluation budget");
  fit->callback([&] {
    action = [&](std::ostream& os) {
      std::ifstream in(fit_in);
      if (!in) throw ConfigError("cannot open '" + fit_in + "'");
      const Trajectory traj = read_trajectory_csv(in);
      FitConfig cfg = fit_cfg;
      cfg.kind = kinds_of({fit_kind})[0];
      cfg.include_stationary_start = !fit_no_start;
      if (!fit_sigma.empty()) {
        if (static_cast<int>(fit_sigma.size()) != traj.dim()) throw ConfigError("--fix-sigma needs one value per coordinate");
        cfg.fix_sigma = std::array<double, 2>{fit_sigma[0], traj.dim() == 2 ? fit_sigma[1] : 1.0};
      }
      os << fit_result_to_json(fit_mle(traj, cfg)) << "\n";
    };
  });

  // tpd-grid
  auto* grid = app.add_subcommand("tpd-grid", "Transition density on a grid (E, SO, WOU or PDE) as CSV");
  ParamOptions grid_p;
  grid_p.add(grid);
  std::string grid_kind = "WOU";
  std::vector<double> grid_from;
  double grid_t = 1.0;
  FpeConfig grid_cfg;
  grid_cfg.mx = grid_cfg.my = 120;
  grid->add_option("--kind", grid_kind, "E, SO, WOU or PDE");
  grid->add_option("--from", grid_from, "Start point")->delimiter(',')->required();
  grid->add_option("--t", grid_t, "Time");
  grid->add_option("--mx", grid_cfg.mx, "Grid cells along theta1");
  grid->add_option("--my", grid_cfg.my, "Grid cells along theta2");
  grid->add_option("--mt", grid_cfg.mt_per_unit, "PDE time steps per unit time");
  grid->add_option("--sigma0", grid_cfg.sigma0, "PDE: sd of the initial wrapped normal");
  grid->callback([&] {
    action = [&](std::ostream& os) {
      const WnParams params = grid_p.get();
      const TorusPoint from = point_of(grid_from, params.dim(), "from");
      if (!(grid_t > 0.0)) throw ConfigError("--t must be positive");
      std::string upper = grid_kind;
      for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (upper == "PDE") {
        write_grid_csv(os, solve_fpe(params, from, grid_t, grid_cfg));
      } else {
        write_grid_csv(os, tpd_grid(kinds_of({grid_kind})[0], params, from, grid_t, default_truncation(params),
                                    grid_cfg.mx, params.dim() == 1 ? 1 : grid_cfg.my));
      }
    };
  });

  // kl-curves
  auto* kl = app.add_subcommand("kl-curves", "Divergence of each approximation from the PDE solution over time");
  ParamOptions kl_p;
  kl_p.add(kl);
  std::vector<std::string> kl_kinds{"E", "SO", "WOU"};
  std::vector<double> kl_times{0.2, 0.5, 1.0, 2.0, 3.0};
  FpeConfig kl_cfg;
  kl_cfg.mx = kl_cfg.my = 120;
  kl->add_option("--kinds", kl_kinds, "Approximations")->delimiter(',');
  kl->add_option("--times", kl_times, "Increasing times")->delimiter(',');
  kl->add_option("--mx", kl_cfg.mx, "Grid cells along theta1");
  kl->add_option("--my", kl_cfg.my, "Grid cells along theta2");
  kl->add_option("--mt", kl_cfg.mt_per_unit, "PDE time steps per unit time");
  kl->add_option("--sigma0", kl_cfg.sigma0, "sd of the smoothed start");
  kl->add_option("--gh-nodes", kl_cfg.gh_nodes, "Gauss-Hermite nodes per coordinate");
  kl->callback([&] {
    action = [&](std::ostream& os) {
      const WnParams params = kl_p.get();
      const auto kinds = kinds_of(kl_kinds);
      run_kl_curves(os, params, kinds, kl_times, kl_cfg);
    };
  });

  // re-bench
  auto* re = app.add_subcommand("re-bench", "Relative-efficiency Monte Carlo as CSV");
  std::string re_scenario;
  bool re_table = false;
  std::vector<double> re_deltas{0.2, 1.0};
  int re_reps = 0;
  re->add_option("--scenario", re_scenario, "Scenario JSON file");
  re->add_flag("--table", re_table, "Run the four standard scenarios instead of --scenario");
  re->add_option("--deltas", re_deltas, "--table: observation spacings")->delimiter(',');
  re->add_option("--replicates", re_reps, "Override the replicate count");
  re->callback([&] {
    action = [&](std::ostream& os) {
      std::vector<Scenario> scns;
      const int reps = re_reps > 0 ? re_reps : (paper_scale ? kFullReplicates : 0);
      if (re_table) {
        scns = table_scenarios(re_deltas, reps > 0 ? reps : kDefaultReplicates, seed);
      } else {
        if (re_scenario.empty()) throw ConfigError("re-bench needs --scenario or --table");
        scns.push_back(scenario_from_json(slurp(re_scenario)));
        if (reps > 0) scns.back().replicates = reps;
      }
      const ReTable table = run_re_experiments(scns);
      for (const auto& w : table.warnings) err << "warning: " << w << "\n";
      write_re_table_csv(os, table);
    };
  });

  // hmm-simulate
  auto* hsim = app.add_subcommand("hmm-simulate", "Aligned pairs drawn from an evolution model as JSON lines");
  std::string hsim_model;
  int hsim_pairs = 10, hsim_len = 50;
  double hsim_t = 1.0;
  hsim->add_option("--model", hsim_model, "Model JSON")->required();
  hsim->add_option("--pairs", hsim_pairs, "Number of aligned pairs");
  hsim->add_option("--length", hsim_len, "Sites per pair");
  hsim->add_option("--t", hsim_t, "Evolutionary time");
  hsim->callback([&] {
    action = [&](std::ostream& os) {
      const EvoModel m = load_model(hsim_model);
      if (hsim_pairs < 1 || hsim_len < 1) throw ConfigError("--pairs and --length must be positive");
      std::vector<AlignedPairData> pairs;
      for (int k = 0; k < hsim_pairs; ++k)
        pairs.push_back(simulate_pair(m, static_cast<std::size_t>(hsim_len), hsim_t,
                                      Rng::derive_seed(seed, static_cast<std::uint64_t>(k)))
                            .data);
      write_pair_dataset(os, pairs);
    };
  });

  // hmm-train
  auto* train = app.add_subcommand("hmm-train", "Stochastic EM training; writes the trained model JSON");
  std::string train_model, train_data, train_log;
  int train_iters = 50;
  TrainConfig train_cfg;
  train->add_option("--model", train_model, "Initial model JSON")->required();
  train->add_option("--data", train_data, "Aligned pairs, JSON lines")->required();
  train->add_option("--iters", train_iters, "StEM iterations");
  train->add_option("--prior-rate", train_cfg.prior_rate, "Rate of the exponential prior on t");
  train->add_option("--mh-steps", train_cfg.mh_steps, "MH moves per pair and iteration");
  train->add_option("--mstep-evals", train_cfg.mstep_evaluations, "Simplex budget per M-step block");
  train->add_flag("--train-exchange", train_cfg.train_exchange, "Also fit the exchangeabilities");
  train->add_option("--log", train_log, "Training log CSV");
  train->callback([&] {
    action = [&](std::ostream& os) {
      const EvoModel m = load_model(train_model);
      const auto pairs = load_pairs(train_data);
      const TrainResult r = stem_train(m, pairs, train_iters, seed, train_cfg);
      for (const auto& n : r.notes) err << "note: " << n << "\n";
      if (!train_log.empty()) {
        std::ofstream log(train_log);
        if (!log) throw ConfigError("cannot write '" + train_log + "'");
        log << kCsvVersionLine << "\niteration,mean_complete_loglik\n";
        for (std::size_t k = 0; k < r.log.size(); ++k) log << k + 1 << ',' << format_double(r.log[k]) << "\n";
      }
      os << evo_model_to_json(r.model) << "\n";
    };
  });

  // hmm-loglik
  auto* hll = app.add_subcommand("hmm-loglik", "Forward-algorithm log-likelihood of each pair at time t");
  std::string hll_model, hll_data;
  double hll_t = 1.0;
  hll->add_option("--model", hll_model, "Model JSON")->required();
  hll->add_option("--data", hll_data, "Aligned pairs, JSON lines")->required();
  hll->add_option("--t", hll_t, "Evolutionary time");
  hll->callback([&] {
    action = [&](std::ostream& os) {
      const EvoModel m = load_model(hll_model);
      const auto pairs = load_pairs(hll_data);
      os << kCsvVersionLine << "\npair,loglik\n";
      for (std::size_t k = 0; k < pairs.size(); ++k) os << k << ',' << format_double(pair_loglik(m, pairs[k], hll_t)) << "\n";
    };
  });

  // hmm-predict
  auto* pred = app.add_subcommand("hmm-predict", "Posterior draws of the missing angle chain X_b");
  std::string pred_model, pred_data;
  int pred_samples = 100;
  double pred_rate = 0.1;
  pred->add_option("--model", pred_model, "Model JSON")->required();
  pred->add_option("--data", pred_data, "Aligned pairs with X_b missing, JSON lines")->required();
  pred->add_option("--samples", pred_samples, "Draws per pair");
  pred->add_option("--prior-rate", pred_rate, "Rate of the exponential prior on t");
  pred->callback([&] {
    action = [&](std::ostream& os) {
      const EvoModel m = load_model(pred_model);
      const auto pairs = load_pairs(pred_data);
      if (pred_samples < 1) throw ConfigError("--samples must be positive");
      os << kCsvVersionLine << "\npair,sample,site,theta1,theta2\n";
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto draws = predict_missing_chain(m, pairs[k], pred_rate, static_cast<std::size_t>(pred_samples),
                                                 Rng::derive_seed(seed, k));
        for (std::size_t s = 0; s < draws.size(); ++s)
          for (std::size_t i = 0; i < draws[s].size(); ++i)
            os << k << ',' << s << ',' << i << ',' << format_double(draws[s][i][0]) << ','
               << format_double(draws[s][i][1]) << "\n";
      }
    };
  });

  // hmm-time-posterior
  auto* tpost = app.add_subcommand("hmm-time-posterior", "Metropolis-Hastings draws of the evolutionary time");
  std::string tpost_model, tpost_data;
  int tpost_samples = 1000;
  double tpost_rate = 0.1;
  tpost->add_option("--model", tpost_model, "Model JSON")->required();
  tpost->add_option("--data", tpost_data, "Aligned pairs, JSON lines")->required();
  tpost->add_option("--samples", tpost_samples, "Post-burn-in draws per pair");
  tpost->add_option("--prior-rate", tpost_rate, "Rate of the exponential prior on t");
  tpost->callback([&] {
    action = [&](std::ostream& os) {
      const EvoModel m = load_model(tpost_model);
      const auto pairs = load_pairs(tpost_data);
      if (tpost_samples < 1) throw ConfigError("--samples must be positive");
      os << kCsvVersionLine << "\npair,sample,t\n";
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto ts = mh_time_posterior(m, pairs[k], tpost_rate, static_cast<std::size_t>(tpost_samples),
                                          Rng::derive_seed(seed, k));
        for (std::size_t s = 0; s < ts.size(); ++s) os << k << ',' << s << ',' << format_double(ts[s]) << "\n";
      }
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    err << app.help();
    return kExitConfig;
  }

  try {
    if (threads > 0) set_threads(threads);
    std::ostringstream buffer;
    action(buffer);
    if (out_path.empty()) {
      out << buffer.str();
    } else {
      std::ofstream file(out_path, std::ios::binary);
      if (!file) throw ConfigError("cannot write '" + out_path + "'");
      file << buffer.str();
    }
    return kExitOk;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const InitDegenerate& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace tordiff
