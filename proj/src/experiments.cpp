#include "tordiff/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "json.hpp"
#include "tordiff/detail/parallel.hpp"
#include "tordiff/errors.hpp"
#include "tordiff/inference.hpp"
#include "tordiff/io.hpp"

namespace tordiff {

using nlohmann::json;

namespace {

long stride_of(double delta, double fine) { return std::lround(delta / fine); }

std::vector<double> components_of(const WnParams& p) {
  if (p.dim() == 1) return {p.alpha1(), p.mu()[0]};
  return {p.alpha1(), p.alpha2(), p.alpha3(), p.mu()[0], p.mu()[1]};
}

bool is_angle(int dim, std::size_t c) { return dim == 1 ? c == 1 : c >= 3; }

json params_json(const WnParams& p) { return json::parse(wn_params_to_json(p)); }

}  // namespace

void Scenario::validate() const {
  if (replicates < 1) throw ConfigError("replicates must be at least 1");
  if (n_obs < 10) throw ConfigError("n_obs must be at least 10");
  if (!(fine_step > 0.0) || !std::isfinite(fine_step)) throw ConfigError("fine_step must be positive");
  if (deltas.empty()) throw ConfigError("delta list must be nonempty");
  for (double d : deltas) {
    if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("deltas must be positive");
    const long k = stride_of(d, fine_step);
    if (k < 1 || std::abs(static_cast<double>(k) * fine_step - d) > 1e-9 * std::max(1.0, d))
      throw ConfigError("every delta must be a multiple of fine_step");
  }
  if (kinds.empty()) throw ConfigError("kind list must be nonempty");
  if (std::set<TpdKind>(kinds.begin(), kinds.end()).size() != kinds.size()) throw ConfigError("kinds must be distinct");
}

std::string scenario_to_json(const Scenario& scn) {
  json kinds = json::array();
  for (TpdKind k : scn.kinds) kinds.push_back(std::string(to_string(k)));
  const json j = {{"name", scn.name},     {"params", params_json(scn.params)}, {"deltas", scn.deltas},
                  {"n_obs", scn.n_obs},   {"replicates", scn.replicates},      {"kinds", kinds},
                  {"seed", scn.seed},     {"fine_step", scn.fine_step}};
  return j.dump(2);
}

Scenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  Scenario s;
  try {
    s.name = j.value("name", s.name);
    s.params = wn_params_from_json(j.at("params").dump());
    s.deltas = j.at("deltas").get<std::vector<double>>();
    s.n_obs = j.value("n_obs", s.n_obs);
    s.replicates = j.value("replicates", s.replicates);
    if (j.contains("kinds")) {
      s.kinds.clear();
      for (const auto& k : j.at("kinds")) s.kinds.push_back(parse_tpd_kind(k.get<std::string>()));
    }
    s.seed = j.value("seed", s.seed);
    s.fine_step = j.value("fine_step", s.fine_step);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  s.validate();
  return s;
}

std::vector<Scenario> table_scenarios(std::span<const double> deltas, int replicates, std::uint64_t seed) {
  std::vector<Scenario> out;
  for (double a : {1.0, 2.0})
    for (double s : {1.0, 2.0}) {
      Scenario scn;
      scn.name = "alpha" + std::to_string(static_cast<int>(a)) + "_sigma" + std::to_string(static_cast<int>(s));
      scn.params = WnParams::toroidal(a, a, a / 2.0, TorusPoint(kPi / 2.0, -kPi / 2.0), s, s);
      scn.deltas.assign(deltas.begin(), deltas.end());
      scn.replicates = replicates;
      scn.seed = Rng::derive_seed(seed, out.size());
      out.push_back(scn);
    }
  return out;
}

std::vector<std::string> re_components(int dim) {
  if (dim == 1) return {"alpha", "mu"};
  return {"alpha1", "alpha2", "alpha3", "mu1", "mu2"};
}

const ReCell& ReTable::cell(const std::string& scenario, double delta, TpdKind kind) const {
  for (const auto& c : cells)
    if (c.scenario == scenario && c.delta == delta && c.kind == kind) return c;
  throw InvalidArgument("no such cell in the relative-efficiency table");
}

std::size_t best_kind(std::span<const TpdKind> kinds, std::span<const double> mse) {
  if (kinds.empty() || kinds.size() != mse.size()) throw InvalidArgument("best_kind: kinds and MSEs must match");
  std::size_t best = 0;
  for (std::size_t k = 1; k < kinds.size(); ++k)
    if (mse[k] < mse[best] || (mse[k] == mse[best] && to_string(kinds[k]) < to_string(kinds[best]))) best = k;
  return best;
}

ReTable run_re_experiment(const Scenario& scn, Exec exec) {
  scn.validate();
  const int dim = scn.params.dim();
  const std::size_t nd = scn.deltas.size(), nk = scn.kinds.size(), reps = static_cast<std::size_t>(scn.replicates);
  std::vector<long> strides;
  for (double d : scn.deltas) strides.push_back(stride_of(d, scn.fine_step));
  const long g = std::accumulate(strides.begin(), strides.end(), 0L, [](long a, long b) { return std::gcd(a, b); });
  const long max_stride = *std::max_element(strides.begin(), strides.end());
  const double base = static_cast<double>(g) * scn.fine_step;
  const WindingTruncation trunc = default_truncation(scn.params);

  // est[(r * nd + d) * nk + k]
  std::vector<std::optional<WnParams>> est(reps * nd * nk);
  detail::for_range(exec, reps, [&](std::size_t r) {
    Rng rng(Rng::derive_seed(scn.seed, r));
    const TorusPoint start = sample_stationary(scn.params, rng);
    const Trajectory path = simulate_euler(scn.params, start, base,
                                           static_cast<std::size_t>(scn.n_obs) * static_cast<std::size_t>(max_stride / g),
                                           static_cast<std::size_t>(g), rng, trunc);
    for (std::size_t d = 0; d < nd; ++d) {
      const Trajectory obs = subsample(path, static_cast<std::size_t>(strides[d] / g), static_cast<std::size_t>(scn.n_obs));
      for (std::size_t k = 0; k < nk; ++k) {
        FitConfig cfg;
        cfg.kind = scn.kinds[k];
        cfg.fix_sigma = std::array<double, 2>{scn.params.sigma1(), scn.params.sigma2()};
        try {
          est[(r * nd + d) * nk + k] = fit_mle(obs, cfg).params;
        } catch (const NumericError&) {
        } catch (const InitDegenerate&) {
        }
      }
    }
  });

  ReTable table;
  table.components = re_components(dim);
  const std::size_t nc = table.components.size();
  const std::vector<double> truth = components_of(scn.params);
  if (scn.replicates < kLowReplicates)
    table.warnings.push_back(scn.name + ": only " + std::to_string(scn.replicates) +
                             " replicates; relative efficiencies are unreliable");

  for (std::size_t d = 0; d < nd; ++d) {
    std::vector<ReCell> cells(nk);
    for (std::size_t k = 0; k < nk; ++k) {
      ReCell& c = cells[k];
      c.scenario = scn.name;
      c.delta = scn.deltas[d];
      c.kind = scn.kinds[k];
      c.replicates = scn.replicates;
      c.mse.assign(nc, 0.0);
      int ok = 0;
      for (std::size_t r = 0; r < reps; ++r) {
        const auto& e = est[(r * nd + d) * nk + k];
        if (!e) {
          ++c.failures;
          continue;
        }
        ++ok;
        const auto v = components_of(*e);
        for (std::size_t i = 0; i < nc; ++i) {
          const double diff = is_angle(dim, i) ? wrap_angle(v[i] - truth[i]) : v[i] - truth[i];
          c.mse[i] += diff * diff;
        }
      }
      for (auto& m : c.mse) m = ok > 0 ? m / ok : std::numeric_limits<double>::infinity();
      c.flagged = static_cast<double>(c.failures) > kMaxFailureRate * static_cast<double>(scn.replicates);
      if (c.flagged)
        table.warnings.push_back(scn.name + " delta=" + format_double(c.delta) + " " + std::string(to_string(c.kind)) +
                                 ": " + std::to_string(c.failures) + " failed fits");
      c.re.assign(nc, 0.0);
      c.best.assign(nc, false);
    }
    for (std::size_t i = 0; i < nc; ++i) {
      std::vector<double> column(nk);
      for (std::size_t k = 0; k < nk; ++k) column[k] = cells[k].mse[i];
      const std::size_t best = best_kind(scn.kinds, column);
      int ties = 0;
      for (std::size_t k = 0; k < nk; ++k) ties += cells[k].mse[i] == cells[best].mse[i];
      if (ties > 1)
        table.warnings.push_back(scn.name + " delta=" + format_double(scn.deltas[d]) + " " + table.components[i] +
                                 ": tied minimum MSE, " + std::string(to_string(scn.kinds[best])) + " taken as best");
      cells[best].best[i] = true;
      for (std::size_t k = 0; k < nk; ++k) {
        const double m = cells[k].mse[i];
        cells[k].re[i] = k == best ? 1.0 : (std::isfinite(m) && m > 0.0 ? cells[best].mse[i] / m : 0.0);
      }
    }
    for (auto& c : cells) {
      c.re_mean = std::accumulate(c.re.begin(), c.re.end(), 0.0) / static_cast<double>(nc);
      table.cells.push_back(std::move(c));
    }
  }
  return table;
}

ReTable run_re_experiments(std::span<const Scenario> scns, Exec exec) {
  ReTable out;
  for (const auto& s : scns) {
    ReTable t = run_re_experiment(s, exec);
    if (!out.components.empty() && out.components != t.components)
      throw ConfigError("scenarios in one table must share the dimension");
    out.components = t.components;
    for (auto& c : t.cells) out.cells.push_back(std::move(c));
    for (auto& w : t.warnings) out.warnings.push_back(std::move(w));
  }
  return out;
}

void write_re_table_csv(std::ostream& os, const ReTable& table) {
  os << kCsvVersionLine << "\n";
  for (const auto& w : table.warnings) os << "# warning: " << w << "\n";
  os << "scenario,delta,kind,replicates,failures,flagged,re";
  for (const char* prefix : {"mse_", "re_", "best_"})
    for (const auto& c : table.components) os << ',' << prefix << c;
  os << "\n";
  for (const auto& c : table.cells) {
    os << c.scenario << ',' << format_double(c.delta) << ',' << to_string(c.kind) << ',' << c.replicates << ','
       << c.failures << ',' << (c.flagged ? 1 : 0) << ',' << format_double(c.re_mean);
    for (double v : c.mse) os << ',' << format_double(v);
    for (double v : c.re) os << ',' << format_double(v);
    for (bool b : c.best) os << ',' << (b ? 1 : 0);
    os << "\n";
  }
}

void run_kl_curves(std::ostream& os, const WnParams& params, std::span<const TpdKind> kinds,
                   std::span<const double> times, const FpeConfig& cfg, Exec exec) {
  const auto points = kl_curves(params, kinds, times, cfg, default_truncation(params), exec);
  os << kCsvVersionLine << "\nt,kind,divergence\n";
  for (const auto& p : points)
    os << format_double(p.t) << ',' << to_string(p.kind) << ',' << format_double(p.divergence) << "\n";
}

}  // namespace tordiff
