#include "tordiff/io.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "tordiff/errors.hpp"

namespace tordiff {

using nlohmann::json;

namespace {

constexpr const char* kModelSchema = "tordiff-evo-model-v1";

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

double parse_double(const std::string& s, const std::string& what) {
  if (s.empty()) throw ConfigError("empty number in " + what);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) throw ConfigError("bad number '" + s + "' in " + what);
  return v;
}

long parse_long(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) throw ConfigError("bad integer '" + s + "' in " + what);
  return v;
}

bool next_line(std::istream& is, std::string& line) {
  if (!std::getline(is, line)) return false;
  line = strip_cr(line);
  return true;
}

void expect_version(std::istream& is, const std::string& what) {
  std::string line;
  if (!next_line(is, line) || line != kCsvVersionLine) throw ConfigError(what + ": missing '# tordiff-v1' line");
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

template <typename F>
auto guarded(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

json point_json(const TorusPoint& p) {
  json a = json::array();
  for (double c : p.coords()) a.push_back(c);
  return a;
}

TorusPoint point_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() == 1) return TorusPoint(v[0]);
  if (v.size() == 2) return TorusPoint(v[0], v[1]);
  throw ConfigError("a torus point needs 1 or 2 coordinates");
}

json params_json(const WnParams& p) {
  if (p.dim() == 1)
    return {{"dim", 1}, {"alpha", {p.alpha1()}}, {"mu", point_json(p.mu())}, {"sigma", {p.sigma1()}}};
  return {{"dim", 2},
          {"alpha", {p.alpha1(), p.alpha2(), p.alpha3()}},
          {"mu", point_json(p.mu())},
          {"sigma", {p.sigma1(), p.sigma2()}}};
}

WnParams params_from(const json& j) {
  const int dim = j.at("dim").get<int>();
  const auto alpha = j.at("alpha").get<std::vector<double>>();
  const auto sigma = j.at("sigma").get<std::vector<double>>();
  const TorusPoint mu = point_from(j.at("mu"));
  if (dim == 1) {
    if (alpha.size() != 1 || sigma.size() != 1 || mu.dim() != 1) throw ConfigError("p = 1 parameters need one alpha, mu and sigma");
    return WnParams::circular(alpha[0], mu[0], sigma[0]);
  }
  if (dim != 2) throw ConfigError("dim must be 1 or 2");
  if (alpha.size() != 3 || sigma.size() != 2 || mu.dim() != 2)
    throw ConfigError("p = 2 parameters need alpha of length 3, mu and sigma of length 2");
  return WnParams::toroidal(alpha[0], alpha[1], alpha[2], mu, sigma[0], sigma[1]);
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j, const std::string& what) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) throw ConfigError(what + " is empty");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw ConfigError(what + " has ragged rows");
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return m;
}

template <typename T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<int> opt_int(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  const int v = j.at(key).get<int>();
  if (v < 0) throw ConfigError(std::string("negative symbol for '") + key + "'");
  return v;
}

std::optional<TorusPoint> opt_point(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return point_from(j.at(key));
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string read_all(std::istream& is) {
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  traj.validate();
  os << kCsvVersionLine << "\n# delta=" << format_double(traj.delta) << "\nindex,time,theta1";
  if (traj.dim() == 2) os << ",theta2";
  os << "\n";
  for (std::size_t k = 0; k < traj.points.size(); ++k) {
    os << k << ',' << format_double(static_cast<double>(k) * traj.delta);
    for (double c : traj.points[k].coords()) os << ',' << format_double(c);
    os << "\n";
  }
}

Trajectory read_trajectory_csv(std::istream& is) {
  const std::string what = "trajectory CSV";
  expect_version(is, what);
  std::string line;
  if (!next_line(is, line) || line.rfind("# delta=", 0) != 0) throw ConfigError(what + ": missing '# delta=' line");
  Trajectory traj;
  traj.delta = parse_double(line.substr(8), what);
  if (!next_line(is, line)) throw ConfigError(what + ": missing header");
  int dim = 0;
  if (line == "index,time,theta1")
    dim = 1;
  else if (line == "index,time,theta1,theta2")
    dim = 2;
  else
    throw ConfigError(what + ": unexpected header '" + line + "'");
  while (next_line(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (static_cast<int>(f.size()) != 2 + dim) throw ConfigError(what + ": wrong field count in '" + line + "'");
    if (parse_long(f[0], what) != static_cast<long>(traj.points.size())) throw ConfigError(what + ": indices out of order");
    if (dim == 1)
      traj.points.emplace_back(parse_double(f[2], what));
    else
      traj.points.emplace_back(parse_double(f[2], what), parse_double(f[3], what));
  }
  try {
    traj.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(what + ": " + e.what());
  }
  return traj;
}

void write_grid_csv(std::ostream& os, const GridDensity& grid) {
  os << kCsvVersionLine << "\n# p=" << grid.dim << ",mx=" << grid.mx << ",my=" << grid.my << "\n"
     << (grid.dim == 1 ? "i,theta1,density\n" : "i,j,theta1,theta2,density\n");
  for (int i = 0; i < grid.mx; ++i) {
    if (grid.dim == 1) {
      os << i << ',' << format_double(cell_centre(i, grid.mx)) << ','
         << format_double(grid.values[static_cast<std::size_t>(i)]) << "\n";
      continue;
    }
    for (int j = 0; j < grid.my; ++j)
      os << i << ',' << j << ',' << format_double(cell_centre(i, grid.mx)) << ',' << format_double(cell_centre(j, grid.my))
         << ',' << format_double(grid.values[static_cast<std::size_t>(i) * static_cast<std::size_t>(grid.my) + static_cast<std::size_t>(j)])
         << "\n";
  }
}

GridDensity read_grid_csv(std::istream& is) {
  const std::string what = "grid CSV";
  expect_version(is, what);
  std::string line;
  int p = 0, hx = 0, hy = 0;
  if (!next_line(is, line) || std::sscanf(line.c_str(), "# p=%d,mx=%d,my=%d", &p, &hx, &hy) != 3)
    throw ConfigError(what + ": missing '# p=..,mx=..,my=..' line");
  if (!next_line(is, line)) throw ConfigError(what + ": missing header");
  int dim = 0;
  if (line == "i,theta1,density")
    dim = 1;
  else if (line == "i,j,theta1,theta2,density")
    dim = 2;
  else
    throw ConfigError(what + ": unexpected header '" + line + "'");
  std::vector<std::array<long, 2>> idx;
  std::vector<double> values;
  while (next_line(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (static_cast<int>(f.size()) != 2 * dim + 1) throw ConfigError(what + ": wrong field count in '" + line + "'");
    idx.push_back({parse_long(f[0], what), dim == 2 ? parse_long(f[1], what) : 0});
    values.push_back(parse_double(f.back(), what));
  }
  if (values.empty()) throw ConfigError(what + ": no cells");
  const long mx = idx.back()[0] + 1, my = idx.back()[1] + 1;
  if (static_cast<long>(values.size()) != mx * my) throw ConfigError(what + ": cell count does not match the indices");
  for (std::size_t k = 0; k < idx.size(); ++k)
    if (idx[k][0] != static_cast<long>(k) / my || idx[k][1] != static_cast<long>(k) % my)
      throw ConfigError(what + ": cells out of order");
  if (p != dim || hx != mx || hy != my) throw ConfigError(what + ": size line does not match the cells");
  GridDensity g = GridDensity::zeros(dim, static_cast<int>(mx), static_cast<int>(my));
  g.values = std::move(values);
  return g;
}

std::string wn_params_to_json(const WnParams& params) { return params_json(params).dump(2); }

WnParams wn_params_from_json(const std::string& text) {
  const json j = parse_json(text, "parameters");
  return guarded("parameters", [&] { return params_from(j); });
}

std::string fit_result_to_json(const FitResult& fit) {
  const json j = {{"params", params_json(fit.params)},
                  {"loglik", fit.loglik},
                  {"converged", fit.converged},
                  {"evaluations", fit.evaluations}};
  return j.dump(2);
}

FitResult fit_result_from_json(const std::string& text) {
  const json j = parse_json(text, "fit result");
  return guarded("fit result", [&] {
    return FitResult{params_from(j.at("params")), j.at("loglik").get<double>(), j.at("converged").get<bool>(),
                     j.at("evaluations").get<int>()};
  });
}

std::string evo_model_to_json(const EvoModel& model) {
  json states = json::array();
  for (const auto& s : model.states) {
    json classes = json::array();
    for (const auto& c : s.classes)
      classes.push_back({{"char_freqs", c.char_freqs}, {"ss_freqs", c.ss_freqs}, {"wn", params_json(c.wn)}});
    states.push_back({{"gamma", s.gamma}, {"pi", s.pi}, {"classes", classes}});
  }
  std::vector<double> init(model.init.data(), model.init.data() + model.init.size());
  const json j = {{"schema", kModelSchema},
                  {"h", model.h()},
                  {"char_alphabet", model.char_alphabet()},
                  {"ss_alphabet", model.ss_alphabet()},
                  {"init", init},
                  {"trans", matrix_json(model.trans)},
                  {"char_exchange", matrix_json(model.char_exchange)},
                  {"ss_exchange", matrix_json(model.ss_exchange)},
                  {"states", states}};
  return j.dump(2);
}

EvoModel evo_model_from_json(const std::string& text) {
  const json j = parse_json(text, "model");
  EvoModel m = guarded("model", [&] {
    if (j.at("schema").get<std::string>() != kModelSchema) throw ConfigError("model: unsupported schema");
    EvoModel out;
    const auto init = j.at("init").get<std::vector<double>>();
    out.init = Eigen::Map<const Eigen::VectorXd>(init.data(), static_cast<Eigen::Index>(init.size()));
    out.trans = matrix_from(j.at("trans"), "trans");
    out.char_exchange = matrix_from(j.at("char_exchange"), "char_exchange");
    out.ss_exchange = matrix_from(j.at("ss_exchange"), "ss_exchange");
    for (const auto& s : j.at("states")) {
      HiddenStateParams st;
      st.gamma = s.at("gamma").get<double>();
      st.pi = s.at("pi").get<std::array<double, 2>>();
      const auto& classes = s.at("classes");
      if (classes.size() != 2) throw ConfigError("model: every state needs two site classes");
      for (std::size_t r = 0; r < 2; ++r) {
        st.classes[r].char_freqs = classes[r].at("char_freqs").get<std::vector<double>>();
        st.classes[r].ss_freqs = classes[r].at("ss_freqs").get<std::vector<double>>();
        st.classes[r].wn = params_from(classes[r].at("wn"));
      }
      out.states.push_back(st);
    }
    if (j.at("h").get<int>() != out.h() || j.at("char_alphabet").get<int>() != out.char_alphabet() ||
        j.at("ss_alphabet").get<int>() != out.ss_alphabet())
      throw ConfigError("model: h or alphabet sizes do not match the arrays");
    return out;
  });
  try {
    m.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return m;
}

std::string pair_to_json_line(const AlignedPairData& pair) {
  json sites = json::array();
  for (const auto& s : pair.sites) {
    const auto pt = [](const std::optional<TorusPoint>& x) { return x ? point_json(*x) : json(nullptr); };
    sites.push_back({{"char_a", opt_json(s.char_a)},
                     {"char_b", opt_json(s.char_b)},
                     {"x_a", pt(s.x_a)},
                     {"x_b", pt(s.x_b)},
                     {"ss_a", opt_json(s.ss_a)},
                     {"ss_b", opt_json(s.ss_b)}});
  }
  return json{{"sites", sites}}.dump();
}

AlignedPairData pair_from_json_line(const std::string& line) {
  const json j = parse_json(line, "aligned pair");
  return guarded("aligned pair", [&] {
    AlignedPairData d;
    for (const auto& s : j.at("sites")) {
      SiteObservation o;
      o.char_a = opt_int(s, "char_a");
      o.char_b = opt_int(s, "char_b");
      o.x_a = opt_point(s, "x_a");
      o.x_b = opt_point(s, "x_b");
      o.ss_a = opt_int(s, "ss_a");
      o.ss_b = opt_int(s, "ss_b");
      d.sites.push_back(o);
    }
    return d;
  });
}

void write_pair_dataset(std::ostream& os, const std::vector<AlignedPairData>& pairs) {
  for (const auto& p : pairs) os << pair_to_json_line(p) << "\n";
}

std::vector<AlignedPairData> read_pair_dataset(std::istream& is) {
  std::vector<AlignedPairData> out;
  std::string line;
  while (next_line(is, line))
    if (line.find_first_not_of(" \t") != std::string::npos) out.push_back(pair_from_json_line(line));
  return out;
}

}  // namespace tordiff
