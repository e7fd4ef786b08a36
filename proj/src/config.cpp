#include "cmp/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cmp/error.hpp"

namespace cmp {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

[[noreturn]] void fail(std::string_view key, const std::string& why) {
  throw InputError("config key '" + std::string(key) + "': " + why);
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out))
    fail(key, "expected a finite number, got '" + std::string(v) + "'");
  return out;
}

long long to_integer(std::string_view key, std::string_view v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    fail(key, "expected an integer, got '" + std::string(v) + "'");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(key, "expected true or false");
}

std::vector<double> to_doubles(std::string_view key, std::string_view v) {
  std::vector<double> out;
  for (auto item : split_list(v)) out.push_back(to_double(key, item));
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>)
      s += fmt(xs[i]);
    else
      s += std::to_string(xs[i]);
  }
  return s;
}

const std::set<std::string_view> kShapes = {"rectangle", "disk", "annulus", "dumbbell"};

// Keys seen in the text; used for required/exclusive checks.
struct Presence {
  bool lambda_low = false;
  bool lambda_high = false;
  bool mass = false;
  bool n = false;
};

void validate_impl(RunConfig& c, const Presence& seen) {
  if (c.shape.empty()) fail("shape", "required");
  if (!kShapes.contains(c.shape))
    fail("shape", "must be one of rectangle, disk, annulus, dumbbell");
  if (!(c.h > 0.0)) fail("h", "required and must be positive");
  if (c.shape == "dumbbell") c.dimension = 2;
  if (c.dimension < 1) fail("dimension", "must be >= 1");
  if (!seen.mass) fail("M", "required");
  if (!(c.mass > 0.0)) fail("M", "must be positive");

  const bool explicit_bounds = seen.lambda_low || seen.lambda_high;
  if (c.sup_bound && explicit_bounds)
    fail("A", "give either A or lambda_low/lambda_high, not both");
  if (!c.sup_bound && !(seen.lambda_low && seen.lambda_high))
    fail("A", "required (or both lambda_low and lambda_high)");
  if (!seen.n) c.n = c.dimension;
  if (c.n < 1) fail("n", "must be >= 1");
  if (c.sup_bound) {
    if (*c.sup_bound < 0.0) fail("A", "must be >= 0");
    const auto [lo, hi] = conformal_bounds(*c.sup_bound, c.n);
    c.lambda_low = lo;
    c.lambda_high = hi;
  }
  if (!(c.lambda_low > 0.0)) fail("lambda_low", "must be positive");
  if (!(c.lambda_high >= c.lambda_low)) fail("lambda_high", "must be >= lambda_low");

  if (c.subcommand == Subcommand::plate) {
    if (c.order_explicit && c.order != 4) fail("p", "plate runs the order-4 operator");
    c.order = 4;
  }
  if (c.order != 2 && c.order != 4) fail("p", "must be 2 or 4");
  if (c.order == 4 && c.subcommand != Subcommand::plate && c.subcommand != Subcommand::solve)
    fail("p", "order 4 is only available with the plate or solve subcommands");

  if (c.background != "flat" && c.background != "bump" && c.background != "constant")
    fail("background", "must be flat, bump or constant");
  if (c.background != "flat" && c.dimension != 2)
    fail("background", "flat background required for d != 2");
  if (c.background == "bump" && !(c.background_width > 0.0))
    fail("background_width", "must be positive");
  if (c.init != "uniform" && c.init != "random") fail("init", "must be uniform or random");
  if (c.check_levels < 2) fail("check_levels", "must be >= 2");
  if (c.threads < 1) fail("threads", "must be >= 1");
  if (!c.box.empty() && static_cast<int>(c.box.size()) != c.dimension)
    fail("box", "needs lo,hi per axis");
  if (!c.center.empty() && static_cast<int>(c.center.size()) != c.dimension)
    fail("center", "needs one coordinate per axis");
  if (c.seeds.empty()) {
    if (c.subcommand == Subcommand::oracle || c.subcommand == Subcommand::sweep ||
        c.subcommand == Subcommand::check)
      c.seeds = {1, 2, 3, 4, 5, 6, 7, 8};
    else
      c.seeds = {1};
  }
  try {
    c.solver.validate();
  } catch (const InputError& e) {
    fail("solver", e.what());
  }

  Grid grid = [&] {
    try {
      return build_grid(c.grid_spec());
    } catch (const InputError& e) {
      fail("shape", e.what());
    }
  }();
  const double volume = domain_volume(grid);
  try {
    c.problem().validate(volume);
    for (double a : c.sweep_sup_bounds) c.problem_for_bound(a).validate(volume);
  } catch (const InputError& e) {
    fail("M", e.what());
  }
}

}  // namespace

std::string to_string(Subcommand s) {
  switch (s) {
    case Subcommand::solve: return "solve";
    case Subcommand::oracle: return "oracle";
    case Subcommand::sweep: return "sweep";
    case Subcommand::check: return "check";
    case Subcommand::plate: return "plate";
  }
  return "solve";
}

Subcommand parse_subcommand(std::string_view name) {
  if (name == "solve") return Subcommand::solve;
  if (name == "oracle") return Subcommand::oracle;
  if (name == "sweep") return Subcommand::sweep;
  if (name == "check") return Subcommand::check;
  if (name == "plate") return Subcommand::plate;
  fail("subcommand", "must be one of solve, oracle, sweep, check, plate");
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  for (auto item : split_list(text)) {
    const long long v = to_integer("seeds", item);
    if (v < 0) fail("seeds", "seeds must be non-negative");
    seeds.push_back(static_cast<std::uint64_t>(v));
  }
  return seeds;
}

GridSpec RunConfig::grid_spec() const {
  GridSpec s;
  const std::vector<double> c =
      center.empty() ? std::vector<double>(static_cast<std::size_t>(dimension), 0.0) : center;
  if (shape == "rectangle") {
    s = box.empty() ? GridSpec::unit_cube(dimension, h) : GridSpec::rectangle(box, h);
  } else if (shape == "disk") {
    s = GridSpec::disk(c, radius, h);
  } else if (shape == "annulus") {
    s = GridSpec::annulus(c, r_in, r_out, h);
  } else if (shape == "dumbbell") {
    s = GridSpec::dumbbell(lobe, neck_length, neck_width, h);
  } else {
    throw InputError("config key 'shape': unknown shape '" + shape + "'");
  }
  if (!box.empty() && shape != "rectangle") s.box = box;

  if (background == "bump") {
    std::vector<double> mid;
    for (const Interval& iv : s.box) mid.push_back(0.5 * (iv.lo + iv.hi));
    const double a = background_amplitude;
    const double two_s2 = 2.0 * background_width * background_width;
    s.background = [mid, a, two_s2](std::span<const double> x) {
      double r2 = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) r2 += (x[k] - mid[k]) * (x[k] - mid[k]);
      return a * std::exp(-r2 / two_s2);
    };
  } else if (background == "constant") {
    const double a = background_amplitude;
    s.background = [a](std::span<const double>) { return a; };
  }
  return s;
}

ProblemSpec RunConfig::problem() const {
  return ProblemSpec::from_bounds(lambda_low, lambda_high, mass, order, n);
}

ProblemSpec RunConfig::problem_for_bound(double a) const {
  return ProblemSpec::from_conformal(a, n, mass, order);
}

std::string RunConfig::canonical_text() const {
  std::ostringstream os;
  os << "subcommand = " << to_string(subcommand) << '\n';
  os << "shape = " << shape << '\n';
  os << "dimension = " << dimension << '\n';
  os << "h = " << fmt(h) << '\n';
  if (!box.empty()) {
    std::vector<double> flat;
    for (const Interval& iv : box) {
      flat.push_back(iv.lo);
      flat.push_back(iv.hi);
    }
    os << "box = " << join(flat) << '\n';
  }
  if (!center.empty()) os << "center = " << join(center) << '\n';
  if (shape == "disk") os << "radius = " << fmt(radius) << '\n';
  if (shape == "annulus") os << "r_in = " << fmt(r_in) << "\nr_out = " << fmt(r_out) << '\n';
  if (shape == "dumbbell")
    os << "lobe = " << fmt(lobe) << "\nneck_length = " << fmt(neck_length)
       << "\nneck_width = " << fmt(neck_width) << '\n';
  os << "background = " << background << '\n';
  if (background != "flat") os << "background_amplitude = " << fmt(background_amplitude) << '\n';
  if (background == "bump") os << "background_width = " << fmt(background_width) << '\n';
  if (sup_bound) os << "A = " << fmt(*sup_bound) << '\n';
  os << "lambda_low = " << fmt(lambda_low) << '\n';
  os << "lambda_high = " << fmt(lambda_high) << '\n';
  os << "M = " << fmt(mass) << '\n';
  os << "n = " << n << '\n';
  os << "p = " << order << '\n';
  os << "cg_rel_tol = " << fmt(solver.cg_rel_tol) << '\n';
  os << "eig_rel_tol = " << fmt(solver.eig_rel_tol) << '\n';
  os << "max_outer_iterations = " << solver.max_outer_iterations << '\n';
  os << "max_alternations = " << solver.max_alternations << '\n';
  os << "eig_block_size = " << solver.block_size << '\n';
  os << "init = " << init << '\n';
  os << "seeds = " << join(seeds) << '\n';
  if (!sweep_sup_bounds.empty()) os << "sweep_A = " << join(sweep_sup_bounds) << '\n';
  os << "check_levels = " << check_levels << '\n';
  os << "threads = " << threads << '\n';
  os << "export_fields = " << (exports.fields ? "true" : "false") << '\n';
  os << "export_trace = " << (exports.trace ? "true" : "false") << '\n';
  os << "export_contours = " << (exports.contours ? "true" : "false") << '\n';
  os << "export_images = " << (exports.images ? "true" : "false") << '\n';
  os << "export_grid = " << (exports.grid ? "true" : "false") << '\n';
  os << "export_matrix = " << (exports.matrix ? "true" : "false") << '\n';
  return os.str();
}

std::string RunConfig::hash() const {
  std::uint64_t x = 14695981039346656037ull;
  for (const unsigned char ch : canonical_text()) {
    x ^= ch;
    x *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

RunConfig parse_config(std::string_view text, const ConfigOverrides& overrides) {
  RunConfig c;
  Presence seen;
  std::set<std::string, std::less<>> keys;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InputError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw InputError("config line " + std::to_string(line_no) + ": empty key");
    if (!keys.insert(std::string(key)).second) fail(key, "given more than once");
    if (value.empty()) fail(key, "empty value");

    if (key == "subcommand") c.subcommand = parse_subcommand(value);
    else if (key == "shape") c.shape = std::string(value);
    else if (key == "dimension") c.dimension = static_cast<int>(to_integer(key, value));
    else if (key == "h") c.h = to_double(key, value);
    else if (key == "box") {
      const auto v = to_doubles(key, value);
      if (v.size() % 2 != 0 || v.empty()) fail(key, "expected lo,hi pairs");
      c.box.clear();
      for (std::size_t i = 0; i < v.size(); i += 2) c.box.push_back({v[i], v[i + 1]});
    }
    else if (key == "center") c.center = to_doubles(key, value);
    else if (key == "radius") c.radius = to_double(key, value);
    else if (key == "r_in") c.r_in = to_double(key, value);
    else if (key == "r_out") c.r_out = to_double(key, value);
    else if (key == "lobe") c.lobe = to_double(key, value);
    else if (key == "neck_length") c.neck_length = to_double(key, value);
    else if (key == "neck_width") c.neck_width = to_double(key, value);
    else if (key == "background") c.background = std::string(value);
    else if (key == "background_amplitude") c.background_amplitude = to_double(key, value);
    else if (key == "background_width") c.background_width = to_double(key, value);
    else if (key == "A") c.sup_bound = to_double(key, value);
    else if (key == "lambda_low") { c.lambda_low = to_double(key, value); seen.lambda_low = true; }
    else if (key == "lambda_high") { c.lambda_high = to_double(key, value); seen.lambda_high = true; }
    else if (key == "M") { c.mass = to_double(key, value); seen.mass = true; }
    else if (key == "n") { c.n = static_cast<int>(to_integer(key, value)); seen.n = true; }
    else if (key == "p") { c.order = static_cast<int>(to_integer(key, value)); c.order_explicit = true; }
    else if (key == "cg_rel_tol") c.solver.cg_rel_tol = to_double(key, value);
    else if (key == "eig_rel_tol") c.solver.eig_rel_tol = to_double(key, value);
    else if (key == "max_outer_iterations") c.solver.max_outer_iterations = static_cast<int>(to_integer(key, value));
    else if (key == "max_alternations") c.solver.max_alternations = static_cast<int>(to_integer(key, value));
    else if (key == "eig_block_size") c.solver.block_size = static_cast<int>(to_integer(key, value));
    else if (key == "init") c.init = std::string(value);
    else if (key == "seeds") c.seeds = parse_seed_list(value);
    else if (key == "sweep_A") c.sweep_sup_bounds = to_doubles(key, value);
    else if (key == "check_levels") c.check_levels = static_cast<int>(to_integer(key, value));
    else if (key == "threads") c.threads = static_cast<int>(to_integer(key, value));
    else if (key == "out") c.out_dir = std::string(value);
    else if (key == "export_fields") c.exports.fields = to_bool(key, value);
    else if (key == "export_trace") c.exports.trace = to_bool(key, value);
    else if (key == "export_contours") c.exports.contours = to_bool(key, value);
    else if (key == "export_images") c.exports.images = to_bool(key, value);
    else if (key == "export_grid") c.exports.grid = to_bool(key, value);
    else if (key == "export_matrix") c.exports.matrix = to_bool(key, value);
    else fail(key, "unknown key");
  }
  if (overrides.subcommand) c.subcommand = *overrides.subcommand;
  if (overrides.seeds) c.seeds = *overrides.seeds;
  if (overrides.out_dir) c.out_dir = *overrides.out_dir;
  validate_impl(c, seen);
  return c;
}

RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

}  // namespace cmp
