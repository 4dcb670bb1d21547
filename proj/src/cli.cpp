#include "schro/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "schro/apps.hpp"
#include "schro/costs.hpp"
#include "schro/error.hpp"
#include "schro/oracle.hpp"
#include "schro/pipeline.hpp"

namespace schro::cli {

using nlohmann::json;
namespace fs = std::filesystem;

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

int line_at(const std::string& text, std::size_t pos) {
  int line = 1;
  for (std::size_t i = 0; i < pos && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

std::string join(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& p : path) {
    if (!out.empty()) out += '.';
    out += p;
  }
  return out.empty() ? "config" : out;
}

}  // namespace

int locate(const Config& config, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  std::optional<std::size_t> found;
  for (const auto& key : path) {
    const auto at = config.text.find("\"" + key + "\"", pos);
    if (at == std::string::npos) break;
    found = at;
    pos = at + key.size() + 2;
  }
  return found ? line_at(config.text, *found) : 1;
}

Config parse_config(const std::string& text, const std::string& source) {
  Config c;
  c.text = text;
  c.source = source;
  try {
    c.doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const int line = line_at(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError(source, line, std::string("malformed JSON: ") + e.what());
  }
  if (!c.doc.is_object()) throw ConfigError(source, 1, "top level must be a JSON object");
  return c;
}

Config load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), 1, "cannot read config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

namespace {

using Path = std::vector<std::string>;

class Reader {
 public:
  explicit Reader(const Config& c) : c_(c) {}

  [[noreturn]] void fail(const Path& path, const std::string& msg) const {
    throw ConfigError(c_.source, locate(c_, path), join(path) + " " + msg);
  }

  const json* at(const Path& path) const {
    for (std::size_t k = 1; k <= path.size(); ++k) seen_.insert(join(Path(path.begin(), path.begin() + static_cast<long>(k))));
    const json* node = &c_.doc;
    for (const auto& key : path) {
      if (!node->is_object()) return nullptr;
      auto it = node->find(key);
      if (it == node->end()) return nullptr;
      node = &*it;
    }
    return node;
  }

  bool has(const Path& path) const { return at(path) != nullptr; }

  const json& require(const Path& path) const {
    const json* n = at(path);
    if (!n) fail(path, "is required");
    return *n;
  }

  double number(const Path& path, std::optional<double> fallback = std::nullopt) const {
    const json* n = at(path);
    if (!n) {
      if (fallback) return *fallback;
      fail(path, "is required");
    }
    if (!n->is_number()) fail(path, "must be a number");
    const double v = n->get<double>();
    if (!std::isfinite(v)) fail(path, "must be finite");
    return v;
  }

  double positive(const Path& path, std::optional<double> fallback = std::nullopt) const {
    const double v = number(path, fallback);
    if (!(v > 0.0)) fail(path, "must be positive (got " + format_double(v) + ")");
    return v;
  }

  double nonnegative(const Path& path, std::optional<double> fallback = std::nullopt) const {
    const double v = number(path, fallback);
    if (!(v >= 0.0)) fail(path, "must be >= 0 (got " + format_double(v) + ")");
    return v;
  }

  double unit_open(const Path& path, std::optional<double> fallback = std::nullopt) const {
    const double v = number(path, fallback);
    if (!(v > 0.0 && v < 1.0)) fail(path, "must lie in (0, 1) (got " + format_double(v) + ")");
    return v;
  }

  long long integer(const Path& path, std::optional<long long> fallback = std::nullopt) const {
    const json* n = at(path);
    if (!n) {
      if (fallback) return *fallback;
      fail(path, "is required");
    }
    if (n->is_number_integer()) return n->get<long long>();
    if (n->is_number_float()) {
      const double v = n->get<double>();
      if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e15) return static_cast<long long>(v);
    }
    fail(path, "must be an integer");
  }

  std::size_t even_count(const Path& path, std::optional<long long> fallback = std::nullopt) const {
    const long long v = integer(path, fallback);
    if (v < 2 || v % 2 != 0) fail(path, "must be an even integer >= 2 (got " + std::to_string(v) + ")");
    return static_cast<std::size_t>(v);
  }

  std::string string(const Path& path, std::optional<std::string> fallback = std::nullopt) const {
    const json* n = at(path);
    if (!n) {
      if (fallback) return *fallback;
      fail(path, "is required");
    }
    if (!n->is_string()) fail(path, "must be a string");
    return n->get<std::string>();
  }

  std::vector<double> numbers(const Path& path) const {
    const json& n = require(path);
    if (!n.is_array()) fail(path, "must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : n) {
      if (!v.is_number()) fail(path, "must contain only numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }

  CMat matrix(const Path& path) const {
    const json& n = require(path);
    Path re = path, im = path;
    re.push_back("re");
    im.push_back("im");
    const json* real_part = n.is_array() ? &n : at(re);
    if (!real_part) fail(path, "needs a 're' array of rows");
    const Path& rpath = n.is_array() ? path : re;
    const RMat r = rows(*real_part, rpath);
    RMat i = RMat::Zero(r.rows(), r.cols());
    if (!n.is_array() && at(im)) {
      i = rows(*at(im), im);
      if (i.rows() != r.rows() || i.cols() != r.cols()) fail(im, "must have the same shape as 're'");
    }
    if (r.rows() != r.cols()) fail(path, "must be square");
    CMat m(r.rows(), r.cols());
    m.real() = r;
    m.imag() = i;
    return m;
  }

  CVec vector(const Path& path) const {
    const json& n = require(path);
    Path re = path, im = path;
    re.push_back("re");
    im.push_back("im");
    const std::vector<double> r = n.is_array() ? numbers(path) : numbers(re);
    std::vector<double> i(r.size(), 0.0);
    if (!n.is_array() && at(im)) {
      i = numbers(im);
      if (i.size() != r.size()) fail(im, "must have the same length as 're'");
    }
    CVec v(static_cast<Eigen::Index>(r.size()));
    for (std::size_t k = 0; k < r.size(); ++k) v[static_cast<Eigen::Index>(k)] = cd{r[k], i[k]};
    return v;
  }

  const Config& config() const { return c_; }

  /// Fails on the first key no accessor has asked for so far.
  void reject_unused() const { walk(c_.doc, {}); }

 private:
  void walk(const json& node, const Path& path) const {
    if (!node.is_object()) return;
    for (auto it = node.begin(); it != node.end(); ++it) {
      Path child = path;
      child.push_back(it.key());
      if (!seen_.count(join(child))) fail(child, "is not used by this experiment");
      walk(*it, child);
    }
  }

  RMat rows(const json& n, const Path& path) const {
    if (!n.is_array() || n.empty()) fail(path, "must be a non-empty array of rows");
    const std::size_t cols = n[0].is_array() ? n[0].size() : 0;
    if (cols == 0) fail(path, "rows must be non-empty arrays");
    RMat m(n.size(), cols);
    for (std::size_t a = 0; a < n.size(); ++a) {
      if (!n[a].is_array() || n[a].size() != cols) fail(path, "rows must all have length " + std::to_string(cols));
      for (std::size_t b = 0; b < cols; ++b) {
        if (!n[a][b].is_number()) fail(path, "entries must be numbers");
        m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = n[a][b].get<double>();
      }
    }
    return m;
  }

  const Config& c_;
  mutable std::set<std::string> seen_;
};

const std::vector<std::string> kExperiments = {"heat", "general", "ground_state", "gibbs", "transport", "cost"};
const std::vector<std::string> kTopKeys = {"experiment", "resolution", "physics", "recovery",
                                           "tolerance", "output", "description"};

json nullable(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? json(*v) : json(nullptr);
}

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }
  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_double(values[i]);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

struct Outputs {
  fs::path directory;
  bool json = true;
  bool csv = true;
};

// Solution rows: coordinates, value, reference, |value - reference|.
void write_solution(const Outputs& out, const std::vector<std::string>& coords,
                    const std::vector<std::vector<double>>& coord_values, const CVec& value, const CVec& ref) {
  if (!out.csv) return;
  std::vector<std::string> header = coords;
  for (const char* h : {"re", "im", "ref_re", "ref_im", "abs_error"}) header.emplace_back(h);
  Csv csv(out.directory / "solution.csv", header);
  for (Eigen::Index i = 0; i < value.size(); ++i) {
    std::vector<double> row = coord_values[static_cast<std::size_t>(i)];
    row.insert(row.end(), {value[i].real(), value[i].imag(), ref[i].real(), ref[i].imag(), std::abs(value[i] - ref[i])});
    csv.row(row);
  }
}

std::vector<std::vector<double>> grid_coordinates(const std::vector<Axis>& layout) {
  std::vector<std::size_t> shape;
  for (const auto& a : layout) shape.push_back(a.size());
  const std::size_t total = shape_product(shape);
  std::vector<std::vector<double>> out(total, std::vector<double>(layout.size()));
  std::vector<std::size_t> idx(shape.size(), 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    for (std::size_t a = 0; a < layout.size(); ++a) {
      out[flat][a] = layout[a].kind == AxisKind::index ? static_cast<double>(idx[a]) : layout[a].grid.point(idx[a]);
    }
    for (std::size_t a = shape.size(); a-- > 0;) {
      if (++idx[a] < shape[a]) break;
      idx[a] = 0;
    }
  }
  return out;
}

std::vector<std::string> axis_names(const std::vector<Axis>& layout) {
  std::vector<std::string> names;
  for (const auto& a : layout) names.push_back(a.name());
  return names;
}

struct Report {
  json summary = json::object();
  std::optional<double> tolerance;
  double check_value = 0.0;  // compared against tolerance
  std::string check_name;
};

PConfig read_pconfig(const Reader& r, std::optional<double> default_eps) {
  PConfig pc;
  const bool has_n = r.has({"resolution", "N"});
  const bool has_l = r.has({"resolution", "L"});
  if (has_l && !has_n) r.fail({"resolution", "L"}, "needs resolution.N as well");
  if (has_n) {
    const std::size_t n = r.even_count({"resolution", "N"});
    const double l = r.positive({"resolution", "L"}, 12.0);
    pc.p_grid = Grid1D(l, n);
  }
  if (r.has({"physics", "epsilon"})) {
    pc.epsilon = r.unit_open({"physics", "epsilon"});
  } else if (default_eps) {
    pc.epsilon = default_eps;
  }
  if (const json* rec = r.at({"recovery"})) {
    std::string method;
    if (rec->is_string()) {
      method = rec->get<std::string>();
    } else if (rec->is_object()) {
      method = r.string({"recovery", "method"});
      if (r.has({"recovery", "p_star"})) pc.p_star = r.positive({"recovery", "p_star"});
    } else {
      r.fail({"recovery"}, "must be a method name or an object");
    }
    try {
      pc.recovery = parse_recovery_method(method);
    } catch (const InvalidArgument&) {
      r.fail({"recovery"}, "must be one of projection, integration, point (got '" + method + "')");
    }
    if (*pc.recovery == RecoveryMethod::point && !pc.p_star) r.fail({"recovery"}, "point recovery needs p_star");
  }
  return pc;
}

std::vector<Grid1D> x_grids(const Reader& r, const char* count_key, int d) {
  const std::size_t m = r.even_count({"resolution", count_key});
  const double half = r.positive({"resolution", "x_half_width"}, 1.0);
  return std::vector<Grid1D>(static_cast<std::size_t>(d), Grid1D(half, m));
}

int read_dimension(const Reader& r, int max_d) {
  const long long d = r.integer({"resolution", "d"}, 1);
  if (d < 1 || d > max_d) r.fail({"resolution", "d"}, "must lie in 1.." + std::to_string(max_d));
  return static_cast<int>(d);
}

std::vector<cd> read_potential(const Reader& r, const std::vector<Grid1D>& grids) {
  const Path base = {"physics", "potential"};
  const std::string type = r.has(base) ? r.string({"physics", "potential", "type"}) : "zero";
  const double half = grids.front().half_width();
  if (type == "zero") return sample_potential(grids, [](std::span<const double>) { return 0.0; });
  if (type == "constant") {
    const double c = r.number({"physics", "potential", "value"});
    return sample_potential(grids, [c](std::span<const double>) { return c; });
  }
  if (type == "harmonic") {
    const double k = r.nonnegative({"physics", "potential", "coefficient"}, 1.0);
    return sample_potential(grids, [k](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v * v;
      return k * s;
    });
  }
  if (type == "cosine") {
    const double a = r.number({"physics", "potential", "amplitude"}, 1.0);
    const double m = static_cast<double>(r.integer({"physics", "potential", "mode"}, 1));
    return sample_potential(grids, [a, m, half](std::span<const double> x) {
      double s = 1.0;
      for (double v : x) s *= std::cos(m * std::numbers::pi * v / half);
      return a * (1.0 + s);
    });
  }
  if (type == "values") {
    const auto v = r.numbers({"physics", "potential", "values"});
    std::size_t total = 1;
    for (const auto& g : grids) total *= g.count();
    if (v.size() != total) r.fail({"physics", "potential", "values"}, "must have " + std::to_string(total) + " entries");
    return {v.begin(), v.end()};
  }
  r.fail({"physics", "potential", "type"}, "must be zero, constant, harmonic, cosine or values (got '" + type + "')");
}

CVec read_heat_initial(const Reader& r, const std::vector<Grid1D>& grids) {
  const std::string type = r.string({"physics", "initial", "type"});
  std::size_t total = 1;
  for (const auto& g : grids) total *= g.count();
  const double half = grids.front().half_width();
  std::function<double(std::span<const double>)> f;
  if (type == "cosine") {
    const double offset = r.number({"physics", "initial", "offset"}, 1.0);
    const double amp = r.number({"physics", "initial", "amplitude"}, 1.0);
    const double m = static_cast<double>(r.integer({"physics", "initial", "mode"}, 1));
    f = [=](std::span<const double> x) {
      double s = 1.0;
      for (double v : x) s *= std::cos(m * std::numbers::pi * v / half);
      return offset + amp * s;
    };
  } else if (type == "gaussian") {
    const double c = r.number({"physics", "initial", "center"}, 0.0);
    const double w = r.positive({"physics", "initial", "width"}, 0.25);
    f = [=](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += (v - c) * (v - c);
      return std::exp(-s / (2.0 * w * w));
    };
  } else if (type == "values") {
    const CVec v = r.vector({"physics", "initial", "values"});
    if (static_cast<std::size_t>(v.size()) != total) {
      r.fail({"physics", "initial", "values"}, "must have " + std::to_string(total) + " entries");
    }
    return v;
  } else {
    r.fail({"physics", "initial", "type"}, "must be cosine, gaussian or values (got '" + type + "')");
  }
  const auto samples = sample_potential(grids, f);
  CVec v(static_cast<Eigen::Index>(total));
  for (std::size_t i = 0; i < total; ++i) v[static_cast<Eigen::Index>(i)] = samples[i];
  return v;
}

json norms_json(double initial, double final_norm, std::optional<double> reference, double spectral_initial,
                double spectral_final) {
  return json{{"initial", initial},
              {"final", final_norm},
              {"reference", nullable(reference)},
              {"spectral_initial", spectral_initial},
              {"spectral_final", spectral_final},
              {"spectral_relative_change",
               spectral_initial > 0.0 ? std::abs(spectral_final / spectral_initial - 1.0) : 0.0}};
}

json pgrid_json(const Grid1D& g) { return json{{"half_width", g.half_width()}, {"count", g.count()}}; }

void collect_warnings(json& s, const std::vector<std::string>& w) {
  for (const auto& m : w) s["warnings"].push_back(m);
}

Report heat_experiment(const Reader& r, const Outputs& out) {
  const int d = read_dimension(r, 3);
  const auto grids = x_grids(r, "M", d);
  const double t = r.nonnegative({"physics", "t"});
  const auto potential = read_potential(r, grids);
  const CVec init = read_heat_initial(r, grids);
  std::vector<Axis> layout;
  for (int a = 0; a < d; ++a) layout.push_back(x_axis(a + 1, grids[static_cast<std::size_t>(a)]));
  const StateVector u0(layout, init);
  const PConfig pc = read_pconfig(r, std::nullopt);

  r.reject_unused();
  const HeatResult res = run_heat(u0, potential, grids, pc, t);
  Report rep;
  rep.tolerance = r.positive({"tolerance"}, 1e-3);
  rep.check_value = res.l2_relative_error;
  rep.check_name = "l2_relative_error";
  auto& s = rep.summary;
  s["l2_relative_error"] = res.l2_relative_error;
  s["success_probability"] = nullable(res.success_probability);
  s["cost_factor"] = nullable(res.cost_factor);
  s["norm_ratio"] = res.u_norm > 0.0 ? json(res.u0_norm / res.u_norm) : json(nullptr);
  s["norms"] = norms_json(res.u0_norm, res.u_norm, res.reference_norm, res.spectral_norm_initial, res.spectral_norm_final);
  s["p_grid"] = pgrid_json(res.p_grid);
  s["cost"] = res.cost ? to_json(*res.cost) : json(nullptr);
  s["metrics"] = json{{"projection_error", nullable(res.projection_error)}, {"epsilon", res.epsilon}};
  collect_warnings(s, res.warnings);
  write_solution(out, axis_names(layout), grid_coordinates(layout), res.u_recovered.amplitudes(),
                 res.u_reference.amplitudes());
  return rep;
}

CMat random_generator_matrix(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  CMat b(n, n), c(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      b(i, j) = cd{g(rng), g(rng)};
      c(i, j) = cd{g(rng), g(rng)};
    }
  }
  const CMat h = b * b.adjoint() / static_cast<double>(n);
  const CMat hb = 0.5 * (c + c.adjoint());
  return h + cd{0.0, 1.0} * hb;
}

Report general_experiment(const Reader& r, const Outputs& out) {
  const double t = r.nonnegative({"physics", "t"});
  CMat a;
  if (r.has({"physics", "matrix", "random"})) {
    const long long n = r.integer({"physics", "matrix", "random", "dimension"});
    if (n < 1 || n > 512) r.fail({"physics", "matrix", "random", "dimension"}, "must lie in 1..512");
    a = random_generator_matrix(static_cast<std::size_t>(n),
                                static_cast<std::uint64_t>(r.integer({"physics", "matrix", "random", "seed"}, 1)));
  } else {
    a = r.matrix({"physics", "matrix"});
  }
  CVec u;
  if (r.has({"physics", "initial", "random"})) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(r.integer({"physics", "initial", "random", "seed"}, 2)));
    std::normal_distribution<double> g;
    u.resize(a.rows());
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = cd{g(rng), g(rng)};
  } else {
    u = r.vector({"physics", "initial"});
  }
  if (u.size() != a.rows()) r.fail({"physics", "initial"}, "length must match the matrix dimension " + std::to_string(a.rows()));
  const PConfig pc = read_pconfig(r, 1e-3);
  EvolveOptions opts;
  opts.p_grid = pc.p_grid;
  opts.epsilon = pc.epsilon.value_or(1e-3);
  opts.recovery = pc.recovery.value_or(RecoveryMethod::integration);
  opts.p_star = pc.p_star;
  opts.threads = pc.threads;

  const std::vector<Axis> layout = {index_axis(static_cast<std::size_t>(u.size()))};
  const StateVector u0(layout, u);
  r.reject_unused();
  const EvolveResult ev = schrodingerize_evolve(u0, a, t, opts);
  const CVec ref = expm_apply(a, u, t);
  const CVec got = ev.recovery.u.amplitudes();
  const double err = ref.norm() > 0.0 ? (got - ref).norm() / ref.norm() : (got - ref).norm();

  Report rep;
  rep.tolerance = r.positive({"tolerance"}, 1e-3);
  rep.check_value = err;
  rep.check_name = "l2_relative_error";
  auto& s = rep.summary;
  s["l2_relative_error"] = err;
  s["success_probability"] = ev.projection ? nullable(ev.projection->success_probability) : json(nullptr);
  s["cost_factor"] = ev.projection ? nullable(ev.projection->cost_factor) : json(nullptr);
  s["norm_ratio"] = got.norm() > 0.0 ? json(u.norm() / got.norm()) : json(nullptr);
  s["norms"] = norms_json(u.norm(), got.norm(), ref.norm(), ev.spectral_norm_initial, ev.spectral_norm_final);
  s["p_grid"] = pgrid_json(ev.p_grid);
  s["cost"] = ev.cost ? to_json(*ev.cost) : json(nullptr);
  s["metrics"] = json{{"dimension", a.rows()}, {"epsilon", opts.epsilon}};
  collect_warnings(s, ev.warnings);
  write_solution(out, {"index"}, grid_coordinates(layout), got, ref);
  return rep;
}

Report ground_state_experiment(const Reader& r, const Outputs& out) {
  const CMat h = r.matrix({"physics", "hamiltonian"});
  const CVec u = r.vector({"physics", "initial"});
  if (u.size() != h.rows()) r.fail({"physics", "initial"}, "length must match the Hamiltonian dimension");
  const double eps = r.unit_open({"physics", "epsilon"});
  HermitianMatrix hm = [&] {
    try {
      return HermitianMatrix(h);
    } catch (const InvalidArgument& e) {
      r.fail({"physics", "hamiltonian"}, e.what());
    }
  }();
  const PConfig pc = read_pconfig(r, eps);
  const std::vector<Axis> layout = {index_axis(static_cast<std::size_t>(u.size()))};
  r.reject_unused();
  const GroundStateReport g = prepare_ground_state(hm, StateVector(layout, u), eps, pc);

  Eigen::SelfAdjointEigenSolver<CMat> eig(h);
  CVec ground = eig.eigenvectors().col(0);
  const cd overlap = ground.dot(g.state.amplitudes());
  if (std::abs(overlap) > 0.0) ground *= overlap / std::abs(overlap);

  Report rep;
  rep.tolerance = r.positive({"tolerance"}, eps);
  rep.check_value = 1.0 - g.fidelity;
  rep.check_name = "infidelity";
  auto& s = rep.summary;
  s["l2_relative_error"] = (g.state.amplitudes() - ground).norm();
  s["success_probability"] = nullable(g.success_probability);
  s["cost_factor"] = nullptr;
  s["norm_ratio"] = nullptr;
  s["fidelity"] = g.fidelity;
  s["t_final"] = g.t_final;
  s["norms"] = nullptr;
  s["p_grid"] = pgrid_json(g.p_grid);
  s["cost"] = to_json(g.cost);
  s["metrics"] = json{{"exact_fidelity", g.exact_fidelity},
                      {"gap", g.gap},
                      {"alpha0_sq", g.alpha0_sq},
                      {"ground_energy", g.ground_energy},
                      {"epsilon", g.epsilon}};
  collect_warnings(s, g.warnings);
  write_solution(out, {"index"}, grid_coordinates(layout), g.state.amplitudes(), ground);
  return rep;
}

Report gibbs_experiment(const Reader& r, const Outputs& out) {
  const CMat h = r.matrix({"physics", "hamiltonian"});
  const double beta = r.positive({"physics", "beta"});
  HermitianMatrix hm = [&] {
    try {
      return HermitianMatrix(h);
    } catch (const InvalidArgument& e) {
      r.fail({"physics", "hamiltonian"}, e.what());
    }
  }();
  const PConfig pc = read_pconfig(r, std::nullopt);
  r.reject_unused();
  const GibbsReport g = prepare_gibbs(hm, beta, pc);

  Report rep;
  rep.tolerance = r.positive({"tolerance"}, 1e-6);
  rep.check_value = g.trace_distance_to_exact;
  rep.check_name = "trace_distance";
  auto& s = rep.summary;
  s["l2_relative_error"] = (g.rho - g.rho_exact).norm() / g.rho_exact.norm();
  s["success_probability"] = nullable(g.success_probability);
  s["cost_factor"] = nullptr;
  s["norm_ratio"] = nullptr;
  s["trace_distance"] = g.trace_distance_to_exact;
  s["norms"] = nullptr;
  s["p_grid"] = pgrid_json(g.p_grid);
  s["cost"] = to_json(g.cost);
  const double trace = g.rho.trace().real();
  Eigen::SelfAdjointEigenSolver<CMat> eig(g.rho, Eigen::EigenvaluesOnly);
  s["metrics"] = json{{"partition_function", g.partition_function},
                      {"beta", beta},
                      {"trace", trace},
                      {"min_eigenvalue", eig.eigenvalues().minCoeff()}};
  collect_warnings(s, g.warnings);
  if (out.csv) {
    Csv csv(out.directory / "solution.csv", {"row", "col", "re", "im", "ref_re", "ref_im", "abs_error"});
    for (Eigen::Index i = 0; i < g.rho.rows(); ++i) {
      for (Eigen::Index j = 0; j < g.rho.cols(); ++j) {
        csv.row({double(i), double(j), g.rho(i, j).real(), g.rho(i, j).imag(), g.rho_exact(i, j).real(),
                 g.rho_exact(i, j).imag(), std::abs(g.rho(i, j) - g.rho_exact(i, j))});
      }
    }
  }
  return rep;
}

Report transport_experiment(const Reader& r, const Outputs& out) {
  const int d = read_dimension(r, 3);
  const auto xg = x_grids(r, "J", d);
  const std::size_t k = r.even_count({"resolution", "K"});
  const double k_half = r.positive({"resolution", "k_half_width"}, 1.0);
  const std::vector<Grid1D> kg(static_cast<std::size_t>(d), Grid1D(k_half, k));
  const double t = r.nonnegative({"physics", "t"});

  const std::string sigma_type = r.string({"physics", "sigma", "type"}, "constant");
  const double strength = r.nonnegative({"physics", "sigma", "strength"}, 1.0);
  auto model = [&] {
    if (sigma_type == "constant") return TransportModel::constant_isotropic(xg, kg, strength);
    if (sigma_type == "gaussian") {
      const double w = r.positive({"physics", "sigma", "width"}, 0.5);
      return TransportModel::from_kernel(xg, kg, [=](std::span<const double> a, std::span<const double> b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        return strength * std::exp(-s / (2.0 * w * w));
      });
    }
    r.fail({"physics", "sigma", "type"}, "must be constant or gaussian (got '" + sigma_type + "')");
  }();

  const std::string init = r.string({"physics", "initial", "type"}, "packet");
  if (init != "packet" && init != "homogeneous") {
    r.fail({"physics", "initial", "type"}, "must be packet or homogeneous (got '" + init + "')");
  }
  const double xa = init == "packet" ? r.number({"physics", "initial", "x_amplitude"}, 0.5) : 0.0;
  const double xm = static_cast<double>(r.integer({"physics", "initial", "x_mode"}, 1));
  const double kc = r.number({"physics", "initial", "k_center"}, 0.3);
  const double kw = r.positive({"physics", "initial", "k_width"}, 0.35);
  const auto layout = model.phase_space_layout();
  const auto coords = grid_coordinates(layout);
  CVec w(static_cast<Eigen::Index>(coords.size()));
  const double xh = xg.front().half_width();
  for (std::size_t i = 0; i < coords.size(); ++i) {
    double sx = 1.0, sk = 0.0;
    for (int a = 0; a < d; ++a) {
      sx *= std::cos(xm * std::numbers::pi * coords[i][static_cast<std::size_t>(a)] / xh);
      const double kv = coords[i][static_cast<std::size_t>(d + a)] - kc;
      sk += kv * kv;
    }
    w[static_cast<Eigen::Index>(i)] = (1.0 + xa * sx) * std::exp(-sk / (2.0 * kw * kw));
  }
  const StateVector w0(layout, w);
  const PConfig pc = read_pconfig(r, std::nullopt);
  std::optional<std::size_t> steps;
  if (r.has({"physics", "reference_steps"})) {
    const long long s = r.integer({"physics", "reference_steps"});
    if (s < 1) r.fail({"physics", "reference_steps"}, "must be >= 1");
    steps = static_cast<std::size_t>(s);
  }
  r.reject_unused();
  const TransportResult res = run_transport(model, w0, pc, t, steps);

  Report rep;
  rep.tolerance = r.positive({"tolerance"}, 1e-2);
  rep.check_value = res.l2_relative_error;
  rep.check_name = "l2_relative_error";
  auto& s = rep.summary;
  s["l2_relative_error"] = res.l2_relative_error;
  s["success_probability"] = nullable(res.success_probability);
  s["cost_factor"] = nullable(res.cost_factor);
  const double wn = res.w_recovered.norm();
  s["norm_ratio"] = wn > 0.0 ? json(w0.norm() / wn) : json(nullptr);
  s["norms"] = norms_json(w0.norm(), wn, res.w_reference.norm(), res.spectral_norm_initial, res.spectral_norm_final);
  s["p_grid"] = pgrid_json(res.p_grid);
  s["cost"] = res.cost ? to_json(*res.cost) : json(nullptr);
  const auto parity = transport_norm_parity(model, assemble_eta_diagonal(res.p_grid));
  s["metrics"] = json{{"mass_initial", res.initial_moments.mass},
                      {"mass", res.moments.mass},
                      {"mass_drift", res.mass_drift},
                      {"momentum", res.moments.momentum},
                      {"energy", res.moments.energy},
                      {"imag_residual", res.imag_residual},
                      {"streaming_max_norm", parity.streaming_max_norm},
                      {"scattering_max_norm", parity.scattering_max_norm}};
  collect_warnings(s, res.warnings);
  write_solution(out, axis_names(layout), coords, res.w_recovered.amplitudes(), res.w_reference.amplitudes());
  return rep;
}

Report cost_experiment(const Reader& r, const Outputs&) {
  const double s = r.positive({"physics", "s"});
  const double t = r.positive({"physics", "t"});
  const double mn = r.positive({"physics", "max_norm"});
  const double eps = r.unit_open({"physics", "epsilon"});
  const double m = r.positive({"physics", "m_h"});
  const double ratio = r.positive({"physics", "norm_ratio"}, 1.0);
  r.reject_unused();
  const CostReport h = hamsim_cost(s, t, mn, eps, m);
  const CostReport sc = schrodingerisation_cost(ratio, s, t, mn, eps, m);
  Report rep;
  auto& out = rep.summary;
  out["l2_relative_error"] = nullptr;
  out["success_probability"] = nullptr;
  out["cost_factor"] = nullptr;
  out["norm_ratio"] = ratio;
  out["norms"] = nullptr;
  out["p_grid"] = nullptr;
  out["cost"] = to_json(sc);
  out["metrics"] = json{{"hamsim", to_json(h)}, {"query_ratio", sc.queries / h.queries}};
  return rep;
}

Outputs read_outputs(const Reader& r, const std::optional<fs::path>& directory) {
  Outputs o;
  o.directory = directory ? *directory : fs::path(r.string({"output", "directory"}, "results"));
  if (const json* f = r.at({"output", "formats"})) {
    if (!f->is_array()) r.fail({"output", "formats"}, "must be an array");
    o.json = o.csv = false;
    for (const auto& v : *f) {
      if (v == "json") o.json = true;
      else if (v == "csv") o.csv = true;
      else r.fail({"output", "formats"}, "entries must be 'json' or 'csv'");
    }
  }
  return o;
}

}  // namespace

RunOutcome run_experiment(const Config& config, const std::optional<fs::path>& directory) {
  const Reader r(config);
  for (auto it = config.doc.begin(); it != config.doc.end(); ++it) {
    if (std::find(kTopKeys.begin(), kTopKeys.end(), it.key()) == kTopKeys.end()) {
      r.fail({it.key()}, "is not a recognised key");
    }
  }
  const std::string experiment = r.string({"experiment"});
  if (std::find(kExperiments.begin(), kExperiments.end(), experiment) == kExperiments.end()) {
    r.fail({"experiment"}, "must be one of heat, general, ground_state, gibbs, transport, cost (got '" + experiment + "')");
  }
  const Outputs outputs = read_outputs(r, directory);
  r.at({"tolerance"});
  r.at({"description"});
  r.at({"output", "directory"});
  r.at({"output", "formats"});
  std::error_code ec;
  fs::create_directories(outputs.directory, ec);
  if (ec) throw ConfigError(config.source, locate(config, {"output", "directory"}),
                            "cannot create output directory " + outputs.directory.string());

  RunOutcome outcome;
  outcome.directory = outputs.directory;
  json summary = {{"schema_version", kSummarySchemaVersion},
                  {"experiment", experiment},
                  {"config_source", config.source},
                  {"inputs", config.doc},
                  {"warnings", json::array()},
                  {"errors", json::array()}};
  const auto start = std::chrono::steady_clock::now();
  Report rep;
  try {
    if (experiment == "heat") rep = heat_experiment(r, outputs);
    else if (experiment == "general") rep = general_experiment(r, outputs);
    else if (experiment == "ground_state") rep = ground_state_experiment(r, outputs);
    else if (experiment == "gibbs") rep = gibbs_experiment(r, outputs);
    else if (experiment == "transport") rep = transport_experiment(r, outputs);
    else rep = cost_experiment(r, outputs);
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(config.source, 1, std::string("invalid experiment setup: ") + e.what());
  } catch (const std::exception& e) {
    outcome.exit_code = kExitNumerical;
    outcome.message = std::string("numerical failure: ") + e.what();
    summary["status"] = "numerical_failure";
    summary["errors"].push_back(outcome.message);
  }
  for (auto it = rep.summary.begin(); it != rep.summary.end(); ++it) {
    if (it.key() == "warnings") {
      for (const auto& w : *it) summary["warnings"].push_back(w);
    } else {
      summary[it.key()] = *it;
    }
  }
  for (const char* key : {"l2_relative_error", "success_probability", "cost_factor", "norm_ratio", "norms",
                          "p_grid", "cost"}) {
    if (!summary.contains(key)) summary[key] = nullptr;
  }
  if (!summary.contains("metrics")) summary["metrics"] = json::object();
  summary["tolerance"] = nullable(rep.tolerance);
  if (outcome.exit_code == kExitOk) {
    const bool pass = !rep.tolerance || rep.check_value <= *rep.tolerance;
    summary["status"] = pass ? "ok" : "tolerance_exceeded";
    if (!pass) {
      outcome.exit_code = kExitNumerical;
      outcome.message = rep.check_name + " = " + format_double(rep.check_value) + " exceeds tolerance " +
                        format_double(*rep.tolerance);
      summary["errors"].push_back(outcome.message);
    }
  }
  summary["runtime_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (outputs.json) {
    std::ofstream f(outputs.directory / "summary.json", std::ios::binary);
    f << summary.dump(2) << '\n';
  }
  outcome.summary = std::move(summary);
  return outcome;
}

int run_command(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  try {
    const Config c = load_config(config_path);
    const RunOutcome o = run_experiment(c);
    if (o.exit_code != kExitOk) {
      err << "error: " << o.message << '\n';
    } else {
      out << "ok: results in " << o.directory.string() << '\n';
    }
    return o.exit_code;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

namespace {

const std::vector<std::string> kIntegerKeys = {"M", "N", "J", "K", "d"};
const std::vector<std::string> kResolutionKeys = {"M", "N", "L", "J", "K", "d", "x_half_width", "k_half_width"};
const std::vector<std::string> kPhysicsKeys = {"t", "beta", "epsilon", "reference_steps"};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

}  // namespace

int sweep_command(const fs::path& config_path, const std::string& axis, const std::vector<std::string>& values,
                  std::ostream& out, std::ostream& err) {
  try {
    const Config base = load_config(config_path);
    if (values.empty()) throw ConfigError(base.source, 1, "sweep needs at least one value");
    json::json_pointer ptr;
    if (axis.find('.') != std::string::npos) {
      for (const auto& part : split(axis, '.')) ptr /= part;
    } else if (std::find(kResolutionKeys.begin(), kResolutionKeys.end(), axis) != kResolutionKeys.end()) {
      ptr = json::json_pointer("/resolution/" + axis);
    } else if (std::find(kPhysicsKeys.begin(), kPhysicsKeys.end(), axis) != kPhysicsKeys.end()) {
      ptr = json::json_pointer("/physics/" + axis);
    } else if (axis == "tolerance") {
      ptr = json::json_pointer("/tolerance");
    } else {
      throw ConfigError(base.source, 1, "sweep axis '" + axis + "' is not a numeric config field");
    }
    if (base.doc.contains(ptr) && !base.doc.at(ptr).is_number()) {
      throw ConfigError(base.source, 1, "sweep axis '" + axis + "' is not a numeric config field");
    }
    const bool integral = std::find(kIntegerKeys.begin(), kIntegerKeys.end(), ptr.back()) != kIntegerKeys.end();
    std::vector<json> parsed;
    for (const auto& v : values) {
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(v, &used);
      } catch (...) {
        used = 0;
      }
      if (used == 0 || used != v.size() || !std::isfinite(x)) {
        throw ConfigError(base.source, 1, "sweep value '" + v + "' is not a number");
      }
      if (integral) {
        if (x != std::floor(x)) throw ConfigError(base.source, 1, "sweep value '" + v + "' must be an integer");
        parsed.emplace_back(static_cast<long long>(x));
      } else {
        parsed.emplace_back(x);
      }
    }

    const Reader r(base);
    const fs::path root = r.string({"output", "directory"}, "results");
    fs::create_directories(root);
    std::ofstream csv(root / "sweep.csv", std::ios::binary);
    csv << "value,l2_relative_error,success_probability,queries\n";
    int code = kExitOk;
    for (std::size_t i = 0; i < values.size(); ++i) {
      Config c = base;
      c.doc[ptr] = parsed[i];
      const RunOutcome o = run_experiment(c, root / (ptr.back() + "_" + values[i]));
      if (o.exit_code != kExitOk) {
        err << "error: " << axis << "=" << values[i] << ": " << o.message << '\n';
        code = std::max(code, o.exit_code);
      }
      auto field = [&](const json& j) { return j.is_number() ? format_double(j.get<double>()) : std::string(); };
      const json& s = o.summary;
      csv << values[i] << ',' << field(s.value("l2_relative_error", json())) << ','
          << field(s.value("success_probability", json())) << ','
          << field(s["cost"].is_object() ? s["cost"]["queries"] : json()) << '\n';
    }
    out << "sweep written to " << (root / "sweep.csv").string() << '\n';
    return code;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace schro::cli
