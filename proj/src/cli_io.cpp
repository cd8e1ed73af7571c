#include "fburgers/cli_io.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "fburgers/diagnostics.hpp"
#include "fburgers/errors.hpp"
#include "fburgers/flux.hpp"
#include "fburgers/stepper.hpp"
#include "json.hpp"

namespace fburgers {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "1.0.0";

/// Reads one JSON object, remembering which keys were consumed.
class Reader {
 public:
  Reader(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }
  std::string key(const std::string& k) const { return prefix_.empty() ? k : prefix_ + "." + k; }

  const json& raw(const std::string& k) {
    used_.insert(k);
    return obj_.at(k);
  }

  double number(const std::string& k, double fallback) {
    if (!has(k)) return fallback;
    return as_number(raw(k), key(k));
  }

  std::size_t count(const std::string& k, std::size_t fallback) {
    if (!has(k)) return fallback;
    const json& v = raw(k);
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(key(k), "expected a nonnegative integer");
    return v.get<std::size_t>();
  }

  bool boolean(const std::string& k, bool fallback) {
    if (!has(k)) return fallback;
    const json& v = raw(k);
    if (!v.is_boolean()) throw ConfigError(key(k), "expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& k, const std::string& fallback) {
    if (!has(k)) return fallback;
    const json& v = raw(k);
    if (!v.is_string()) throw ConfigError(key(k), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& k, std::vector<double> fallback) {
    if (!has(k)) return fallback;
    const json& v = raw(k);
    if (!v.is_array()) throw ConfigError(key(k), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], key(k) + "[" + std::to_string(i) + "]"));
    return out;
  }

  void finish() const {
    for (const auto& [k, v] : obj_.items()) {
      if (!used_.count(k)) throw ConfigError(key(k), "unknown key");
    }
  }

  static double as_number(const json& v, const std::string& k) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf") return kInf;
      if (s == "-inf") return -kInf;
    }
    throw ConfigError(k, "expected a number");
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::set<std::string> used_;
};

json number_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("malformed JSON: ") + e.what());
  }
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

InitialCondition read_u0(Reader& r) {
  if (!r.has("u0")) return {};
  const json& v = r.raw("u0");
  InitialCondition ic;
  if (v.is_string()) {
    ic.name = v.get<std::string>();
  } else {
    Reader u(v, r.key("u0"));
    ic.name = u.text("name", "modes");
    if (u.has("modes")) {
      const json& ms = u.raw("modes");
      require(ms.is_array(), u.key("modes"), "expected an array of [k, amplitude, phase]");
      for (std::size_t i = 0; i < ms.size(); ++i) {
        const std::string key = u.key("modes") + "[" + std::to_string(i) + "]";
        require(ms[i].is_array() && ms[i].size() == 3 && ms[i][0].is_number_integer(), key,
                "expected [k, amplitude, phase] with integer k");
        ic.modes.push_back({ms[i][0].get<long>(), Reader::as_number(ms[i][1], key), Reader::as_number(ms[i][2], key)});
      }
    }
    u.finish();
  }
  try {
    ic.resolved_modes();
  } catch (const InvalidInput& e) {
    throw ConfigError(r.key("u0"), e.what());
  }
  return ic;
}

json u0_json(const InitialCondition& ic) {
  if (ic.name != "modes") return ic.name;
  json modes = json::array();
  for (const auto& m : ic.modes) modes.push_back(json::array({m.k, m.amplitude, m.phase}));
  return json{{"name", "modes"}, {"modes", modes}};
}

NormRequest read_norm(const json& v, const std::string& key) {
  NormRequest req;
  if (v.is_string()) {
    try {
      req = parse_norm_label(v.get<std::string>());
    } catch (const InvalidInput& e) {
      throw ConfigError(key, e.what());
    }
  } else {
    Reader r(v, key);
    const std::string kind = r.text("kind", "Hs");
    if (kind == "Lp") req.kind = NormKind::Lp;
    else if (kind == "Wmp") req.kind = NormKind::Wmp;
    else if (kind == "Hs") req.kind = NormKind::Hs;
    else if (kind == "HsIncrement") req.kind = NormKind::HsIncrement;
    else throw ConfigError(r.key("kind"), "expected Lp, Wmp, Hs or HsIncrement");
    const double m = r.number("m", 0.0);
    require(m >= 0.0 && m == std::floor(m) && m < 16.0, r.key("m"), "expected a small nonnegative integer");
    req.m = static_cast<int>(m);
    req.p = r.number("p", 2.0);
    req.s = r.number("s", 0.0);
    r.finish();
  }
  try {
    req.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(key, e.what());
  }
  return req;
}

json norm_json(const NormRequest& req) {
  static const char* kinds[] = {"Lp", "Wmp", "Hs", "HsIncrement"};
  return json{{"kind", kinds[static_cast<int>(req.kind)]}, {"m", req.m}, {"p", number_json(req.p)}, {"s", req.s}};
}

Scheme read_scheme(Reader& r, Scheme fallback) {
  if (!r.has("scheme")) return fallback;
  try {
    return scheme_from_string(r.text("scheme", ""));
  } catch (const InvalidInput&) {
    throw ConfigError(r.key("scheme"), "expected ETDRK2 or ETDRK4");
  }
}

void check_flux(const std::string& name, const std::string& key) {
  try {
    flux::by_name(name, 1.0);
  } catch (const InvalidInput& e) {
    throw ConfigError(key, e.what());
  }
}

void check_alpha(double alpha) {
  require(alpha > 1.0 && alpha <= 2.0, "alpha",
          "must lie in (1, 2]; alpha <= 1 is outside the subcritical range this solver covers");
}

template <class E>
E pick(const std::string& value, const std::string& key, std::initializer_list<std::pair<const char*, E>> options) {
  for (const auto& [name, e] : options) {
    if (value == name) return e;
  }
  std::string all;
  for (const auto& [name, e] : options) all += (all.empty() ? "" : ", ") + std::string(name);
  throw ConfigError(key, "expected one of " + all);
}

Target read_target(const json& v, const std::string& key) {
  Reader r(v, key);
  Target t;
  t.kind = pick<TargetKind>(r.text("kind", "norm_vs_nu"), r.key("kind"),
                            {{"norm_vs_nu", TargetKind::NormVsNu},
                             {"sp_vs_ell", TargetKind::SpVsEll},
                             {"sp_vs_nu", TargetKind::SpVsNu},
                             {"spectrum_vs_k", TargetKind::SpectrumVsK},
                             {"spectrum_tail", TargetKind::SpectrumTail},
                             {"flatness_vs_ell", TargetKind::FlatnessVsEll}});
  if (r.has("norm")) t.norm = read_norm(r.raw("norm"), r.key("norm"));
  t.p = r.number("p", t.p);
  require(t.p >= 0.0 && std::isfinite(t.p), r.key("p"), "must be finite and >= 0");
  t.range = pick<Range>(r.text("range", "J2"), r.key("range"), {{"J1", Range::J1}, {"J2", Range::J2}});
  t.convention = pick<Convention>(r.text("convention", "moment"), r.key("convention"),
                                  {{"moment", Convention::Moment}, {"power", Convention::Power}});
  t.check = pick<Check>(r.text("check", "two_sided"), r.key("check"),
                        {{"two_sided", Check::TwoSided}, {"at_least", Check::AtLeast}, {"at_most", Check::AtMost}});
  t.tolerance = r.number("tolerance", t.tolerance);
  require(t.tolerance >= 0.0, r.key("tolerance"), "must be >= 0");
  t.relative = r.boolean("relative", t.relative);
  t.bound_factor = r.number("bound_factor", t.bound_factor);
  require(t.bound_factor > 0.0, r.key("bound_factor"), "must be positive");
  r.finish();
  return t;
}

json target_json(const Target& t) {
  return json{{"kind", to_string(t.kind)},
              {"norm", norm_json(t.norm)},
              {"p", t.p},
              {"range", to_string(t.range)},
              {"convention", to_string(t.convention)},
              {"check", to_string(t.check)},
              {"tolerance", t.tolerance},
              {"relative", t.relative},
              {"bound_factor", t.bound_factor}};
}

RunConfig run_config_from(const json& doc) {
  Reader r(doc, "");
  RunConfig c;
  auto& s = c.stepper;
  s.alpha = r.number("alpha", s.alpha);
  check_alpha(s.alpha);
  s.nu = r.number("nu", s.nu);
  require(s.nu > 0.0 && std::isfinite(s.nu), "nu", "must be positive and finite");
  c.n = r.count("n", c.n);
  require(c.n >= 8 && c.n % 2 == 0, "n", "must be even and >= 8");
  c.flux_name = r.text("flux", c.flux_name);
  check_flux(c.flux_name, "flux");
  s.dt_cfl = r.number("dt_cfl", s.dt_cfl);
  require(s.dt_cfl > 0.0 && std::isfinite(s.dt_cfl), "dt_cfl", "must be positive");
  s.dt_max = r.number("dt_max", s.dt_max);
  require(s.dt_max > 0.0 && std::isfinite(s.dt_max), "dt_max", "must be positive");
  s.scheme = read_scheme(r, s.scheme);
  s.t_end = r.number("t_end", s.t_end);
  require(s.t_end >= 0.0 && std::isfinite(s.t_end), "t_end", "must be finite and >= 0");
  s.c_res = r.number("c_res", s.c_res);
  require(s.c_res > 0.0 && std::isfinite(s.c_res), "c_res", "must be positive");
  s.allow_underresolved = r.boolean("allow_underresolved", s.allow_underresolved);
  c.u0 = read_u0(r);
  c.schedule = r.text("schedule", c.schedule);
  require(c.schedule == "uniform" || c.schedule == "geometric", "schedule", "expected uniform or geometric");
  c.samples = r.count("samples", c.samples);
  require(c.samples >= 1, "samples", "must be >= 1");
  c.t_first = r.number("t_first", c.t_first);
  require(c.t_first > 0.0 && std::isfinite(c.t_first), "t_first", "must be positive");
  if (r.has("norms")) {
    const json& ns = r.raw("norms");
    require(ns.is_array(), "norms", "expected an array");
    c.norms.clear();
    for (std::size_t i = 0; i < ns.size(); ++i) c.norms.push_back(read_norm(ns[i], "norms[" + std::to_string(i) + "]"));
  }
  c.sp_orders = r.numbers("sp_orders", c.sp_orders);
  for (double p : c.sp_orders) require(p >= 0.0 && std::isfinite(p), "sp_orders", "orders must be finite and >= 0");
  c.K = r.number("K", c.K);
  require(c.K >= 1.0 && std::isfinite(c.K), "K", "must be >= 1");
  c.M = r.number("M", c.M);
  require(c.M >= 1.0 && std::isfinite(c.M), "M", "must be >= 1");
  c.kappa = r.number("kappa", c.kappa);
  require(c.kappa > 0.0 && std::isfinite(c.kappa), "kappa", "must be positive");
  c.output_dir = r.text("out", c.output_dir);
  r.finish();
  return c;
}

SweepPlan sweep_plan_from(const json& doc) {
  Reader r(doc, "");
  SweepPlan p;
  p.alpha = r.number("alpha", p.alpha);
  check_alpha(p.alpha);
  p.nu_list = r.numbers("nu_list", {});
  require(!p.nu_list.empty(), "nu_list", "must hold at least one viscosity");
  for (std::size_t i = 0; i < p.nu_list.size(); ++i) {
    require(p.nu_list[i] > 0.0 && std::isfinite(p.nu_list[i]), "nu_list", "viscosities must be positive");
    require(i == 0 || p.nu_list[i] < p.nu_list[i - 1], "nu_list", "must be strictly decreasing");
  }
  p.n = r.count("n", p.n);
  require(p.n == 0 || (p.n >= 8 && p.n % 2 == 0), "n", "must be 0 (automatic) or even and >= 8");
  p.n_min = r.count("n_min", p.n_min);
  require(p.n_min >= 8, "n_min", "must be >= 8");
  p.flux_name = r.text("flux", p.flux_name);
  check_flux(p.flux_name, "flux");
  p.u0 = read_u0(r);
  p.kappa = r.number("kappa", p.kappa);
  require(p.kappa > 0.0 && std::isfinite(p.kappa), "kappa", "must be positive");
  p.K = r.number("K", p.K);
  require(p.K >= 1.0 && std::isfinite(p.K), "K", "must be >= 1");
  p.M = r.number("M", p.M);
  require(p.M >= 1.0 && std::isfinite(p.M), "M", "must be >= 1");
  if (r.has("ranges")) {
    Reader g(r.raw("ranges"), "ranges");
    p.ranges.j1_mode = g.text("j1_mode", p.ranges.j1_mode);
    require(p.ranges.j1_mode == "nominal" || p.ranges.j1_mode == "crossover", g.key("j1_mode"),
            "expected nominal or crossover");
    p.ranges.crossover_slope = g.number("crossover_slope", p.ranges.crossover_slope);
    require(p.ranges.crossover_slope > 0.0 && std::isfinite(p.ranges.crossover_slope), g.key("crossover_slope"),
            "must be positive");
    p.ranges.j2_upper = g.number("j2_upper", p.ranges.j2_upper);
    require(p.ranges.j2_upper >= 0.0 && p.ranges.j2_upper <= 1.0, g.key("j2_upper"), "must lie in [0, 1]");
    p.ranges.margin_decades = g.number("margin_decades", p.ranges.margin_decades);
    require(p.ranges.margin_decades >= 0.0 && std::isfinite(p.ranges.margin_decades), g.key("margin_decades"),
            "must be >= 0");
    g.finish();
  }
  p.scheme = read_scheme(r, p.scheme);
  p.dt_cfl = r.number("dt_cfl", p.dt_cfl);
  require(p.dt_cfl > 0.0 && std::isfinite(p.dt_cfl), "dt_cfl", "must be positive");
  p.dt_max = r.number("dt_max", p.dt_max);
  require(p.dt_max > 0.0 && std::isfinite(p.dt_max), "dt_max", "must be positive");
  p.c_res = r.number("c_res", p.c_res);
  require(p.c_res > 0.0 && std::isfinite(p.c_res), "c_res", "must be positive");
  p.n_samples = r.count("samples", p.n_samples);
  require(p.n_samples >= 2, "samples", "must be >= 2");
  p.t_first_fraction = r.number("t_first_fraction", p.t_first_fraction);
  require(p.t_first_fraction > 0.0 && p.t_first_fraction < 1.0, "t_first_fraction", "must lie in (0, 1)");
  p.sp_orders = r.numbers("sp_orders", p.sp_orders);
  for (double q : p.sp_orders) require(q >= 0.0 && std::isfinite(q), "sp_orders", "orders must be finite and >= 0");
  if (r.has("targets")) {
    const json& ts = r.raw("targets");
    require(ts.is_array(), "targets", "expected an array");
    for (std::size_t i = 0; i < ts.size(); ++i) p.targets.push_back(read_target(ts[i], "targets[" + std::to_string(i) + "]"));
  } else {
    p.targets = default_targets();
  }
  r.finish();
  try {
    p.validate();
  } catch (const UnsupportedTarget& e) {
    throw ConfigError("targets", e.what());
  } catch (const InvalidInput& e) {
    throw ConfigError("nu_list", e.what());
  }
  return p;
}

json run_config_json(const RunConfig& c) {
  json norms = json::array();
  for (const auto& n : c.norms) norms.push_back(norm_json(n));
  return json{{"alpha", c.stepper.alpha},
              {"nu", c.stepper.nu},
              {"n", c.n},
              {"flux", c.flux_name},
              {"dt_cfl", c.stepper.dt_cfl},
              {"dt_max", c.stepper.dt_max},
              {"scheme", to_string(c.stepper.scheme)},
              {"t_end", c.stepper.t_end},
              {"c_res", c.stepper.c_res},
              {"allow_underresolved", c.stepper.allow_underresolved},
              {"u0", u0_json(c.u0)},
              {"schedule", c.schedule},
              {"samples", c.samples},
              {"t_first", c.t_first},
              {"norms", norms},
              {"sp_orders", c.sp_orders},
              {"K", c.K},
              {"M", c.M},
              {"kappa", c.kappa},
              {"out", c.output_dir}};
}

/// Plan fields that determine a single run; the viscosity list is left out so that a
/// run directory does not depend on which sweep produced it.
json plan_run_json(const SweepPlan& p) {
  json targets = json::array();
  for (const auto& t : p.targets) targets.push_back(target_json(t));
  return json{{"alpha", p.alpha},
              {"n", p.n},
              {"n_min", p.n_min},
              {"flux", p.flux_name},
              {"u0", u0_json(p.u0)},
              {"kappa", p.kappa},
              {"K", p.K},
              {"M", p.M},
              {"ranges",
               {{"j1_mode", p.ranges.j1_mode},
                {"crossover_slope", p.ranges.crossover_slope},
                {"j2_upper", p.ranges.j2_upper},
                {"margin_decades", p.ranges.margin_decades}}},
              {"scheme", to_string(p.scheme)},
              {"dt_cfl", p.dt_cfl},
              {"dt_max", p.dt_max},
              {"c_res", p.c_res},
              {"samples", p.n_samples},
              {"t_first_fraction", p.t_first_fraction},
              {"sp_orders", p.sp_orders},
              {"targets", targets}};
}

json sweep_plan_json(const SweepPlan& p) {
  json j = plan_run_json(p);
  j["nu_list"] = p.nu_list;
  return j;
}

}  // namespace

NormRequest parse_norm_label(const std::string& label) {
  auto num = [&](std::string_view s) {
    if (s == "inf") return kInf;
    const double v = parse_double(s);
    return v;
  };
  try {
    NormRequest r;
    if (label.rfind("Hinc", 0) == 0) {
      r = NormRequest::hs_increment(num(std::string_view(label).substr(4)));
    } else if (label.rfind("H", 0) == 0) {
      r = NormRequest::hs(num(std::string_view(label).substr(1)));
    } else if (label.rfind("W", 0) == 0) {
      const auto comma = label.find(',');
      if (comma == std::string::npos) throw InvalidInput("W norms are written Wm,p");
      const double m = num(std::string_view(label).substr(1, comma - 1));
      if (m != std::floor(m) || m < 0.0 || m > 16.0) throw InvalidInput("bad derivative order");
      r = NormRequest::wmp(static_cast<int>(m), num(std::string_view(label).substr(comma + 1)));
    } else if (label.rfind("L", 0) == 0) {
      r = NormRequest::lp(num(std::string_view(label).substr(1)));
    } else {
      throw InvalidInput("unknown norm label");
    }
    r.validate();
    return r;
  } catch (const InvalidInput& e) {
    throw InvalidInput("norm label '" + label + "': " + e.what());
  }
}

Config parse_config(std::string_view text) {
  const json doc = parse_document(text);
  if (doc.is_object() && doc.contains("nu_list")) return sweep_plan_from(doc);
  return run_config_from(doc);
}

RunConfig parse_run_config(std::string_view text) { return run_config_from(parse_document(text)); }
SweepPlan parse_sweep_plan(std::string_view text) { return sweep_plan_from(parse_document(text)); }

std::string serialize(const RunConfig& cfg) { return run_config_json(cfg).dump(2); }
std::string serialize(const SweepPlan& plan) { return sweep_plan_json(plan).dump(2); }

// ---- snapshots ----

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}
void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class ByteReader {
 public:
  explicit ByteReader(const std::string& data) : data_(data) {}
  std::uint64_t u(int bytes) {
    if (pos_ + static_cast<std::size_t>(bytes) > data_.size()) throw SnapshotError("snapshot is truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
  double f64() { return std::bit_cast<double>(u(8)); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  const std::string& data_;
  std::size_t pos_ = 4;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 8 + 8 + 8;
constexpr std::size_t kTrailerBytes = 8 + 8 + 8;

}  // namespace

void save_snapshot(const std::filesystem::path& path, const SolverState& state, double alpha, double nu) {
  const auto& f = state.field;
  std::string out = "FBRG";
  put_u32(out, kSnapshotVersion);
  put_u64(out, f.grid().n_points());
  put_f64(out, alpha);
  put_f64(out, nu);
  put_f64(out, state.t);
  for (const auto& c : f.coeffs()) {
    put_f64(out, c.real());
    put_f64(out, c.imag());
  }
  put_f64(out, state.dt_last);
  put_u64(out, state.step_count);
  put_f64(out, state.dissipated);
  write_file(path, out);
}

Snapshot load_snapshot(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  if (data.size() < kHeaderBytes || data.compare(0, 4, "FBRG") != 0) throw SnapshotError("bad snapshot magic");
  ByteReader br(data);
  const auto version = static_cast<std::uint32_t>(br.u(4));
  if (version != kSnapshotVersion) throw SnapshotError("unsupported snapshot version " + std::to_string(version));
  const std::uint64_t n = br.u(8);
  if (n < 8 || n % 2 != 0 || n > (std::uint64_t{1} << 32)) throw SnapshotError("bad grid size in snapshot");
  const double alpha = br.f64();
  const double nu = br.f64();
  const double t = br.f64();
  const std::size_t modes = static_cast<std::size_t>(n / 2 + 1);
  if (br.remaining() != 16 * modes + kTrailerBytes) throw SnapshotError("snapshot length does not match n");
  std::vector<Complex> c(modes);
  for (auto& z : c) {
    const double re = br.f64();
    const double im = br.f64();
    z = Complex{re, im};
  }
  if (c[0] != Complex{}) throw SnapshotError("snapshot has a nonzero mean mode");
  SolverState st{SpectralField::zeros(Grid(static_cast<std::size_t>(n)), t), t, 0, 0.0, 0.0};
  try {
    st.field = SpectralField(Grid(static_cast<std::size_t>(n)), std::move(c), t);
  } catch (const Error& e) {
    throw SnapshotError(std::string("invalid snapshot payload: ") + e.what());
  }
  st.dt_last = br.f64();
  st.step_count = br.u(8);
  st.dissipated = br.f64();
  return {std::move(st), alpha, nu};
}

// ---- CSV ----

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return {buf, res.ptr};
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto* b = text.data();
  const auto* e = text.data() + text.size();
  if (!text.empty() && *b == '+') ++b;
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc{} || res.ptr != e) throw InvalidInput("not a number: '" + std::string(text) + "'");
  return v;
}

double CsvTable::number(std::size_t row, std::size_t col) const { return parse_double(rows.at(row).at(col)); }

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) {
    text_ = "# fburgers-csv " + std::to_string(kCsvVersion) + "\n";
    row(header);
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) text_ += (i ? "," : "") + csv_field(fields[i]);
    text_ += '\n';
  }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

std::string count_text(std::size_t v) { return std::to_string(v); }

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("# fburgers-csv ", 0) != 0) {
    throw InvalidInput(path.string() + ": missing format line");
  }
  if (line.substr(15) != std::to_string(kCsvVersion)) throw InvalidInput(path.string() + ": unknown CSV format version");
  CsvTable t;
  if (!std::getline(in, line)) throw InvalidInput(path.string() + ": missing header");
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split_csv_line(line));
  }
  return t;
}

// ---- output writers ----

std::string run_dir_name(double nu) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, nu);
  return "nu_" + std::string(buf, res.ptr);
}

RunProducts products_of(const RunSummary& run) {
  RunProducts p;
  if (!run.records.empty()) {
    for (const auto& [label, v] : run.records.front().norms) p.norm_labels.push_back(label);
  }
  p.records = run.records;
  p.structure = run.structure;
  p.dx = run.n ? 1.0 / static_cast<double>(run.n) : 0.0;
  p.spectrum_ks = run.spectrum_ks;
  p.spectrum = run.spectrum;
  return p;
}

namespace {

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

std::string plot_file(const std::vector<std::pair<double, double>>& pts, const std::string& xname,
                      const std::string& yname) {
  std::string out = "# " + xname + " " + yname + "\n";
  for (const auto& [x, y] : pts) out += format_double(x) + " " + format_double(y) + "\n";
  return out;
}

std::string slug(const std::string& s) {
  std::string out;
  for (char ch : s) out += std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' ? ch : '_';
  return out;
}

std::string order_text(double p) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, p);
  return {buf, res.ptr};
}

json versions_json() {
  return json{{"fburgers", kVersion},
              {"csv_format", kCsvVersion},
              {"snapshot_format", kSnapshotVersion},
              {"fftw", std::string(fftw_version)},
              {"compiler", std::string(__VERSION__)}};
}

json summary_json(const SweepPlan& plan, const RunSummary& s) {
  json j{{"nu", s.nu}, {"n", s.n}, {"ok", s.ok}};
  j["plan"] = plan_run_json(plan);
  if (!s.ok) {
    j["failure"] = s.failure;
    j["wall_seconds"] = s.wall_seconds;
    return j;
  }
  const auto& c = s.config;
  j["stepper"] = {{"alpha", c.alpha}, {"nu", c.nu},         {"dt_cfl", c.dt_cfl}, {"dt_max", c.dt_max},
                  {"scheme", to_string(c.scheme)}, {"t_end", c.t_end}, {"c_res", c.c_res}};
  j["D"] = {{"value", s.D.value}, {"inv_l1", s.D.inv_l1}, {"w1inf", s.D.w1inf}};
  j["window"] = {{"T1", s.window.T1}, {"T2", s.window.T2}, {"C_tilde", s.window.C_tilde}};
  j["partition"] = {{"K", s.partition.K},   {"beta", s.partition.beta}, {"C1", s.partition.C1},
                    {"C2", s.partition.C2}, {"nu0", s.partition.nu0},   {"nominal_j1_upper", s.partition.j1_upper()}};
  j["fit_ranges"] = {{"j1_upper", s.j1_upper},
                     {"j1_upper_over_nu_beta", s.j1_upper / std::pow(s.nu, s.partition.beta)},
                     {"j2_upper", s.j2_upper}};
  j["steps"] = s.steps;
  j["budget_residual"] = s.budget_residual;
  j["min_margins"] = {{"max_principle", s.min_maxprin_margin},
                      {"sup_norm", s.min_supnorm_margin},
                      {"w11", s.min_w11_margin}};
  json mom = json::object();
  for (const auto& [k, v] : s.norm_moments) mom[k] = v;
  j["norm_moments"] = mom;
  json env = json::object();
  for (const auto& [p, v] : s.envelope_j1) env[order_text(p)] = {{"J1", v}, {"J2", s.envelope_j2.at(p)}};
  j["envelopes"] = env;
  j["warnings"] = s.warnings;
  j["wall_seconds"] = s.wall_seconds;
  return j;
}

std::string fit_pass_text(const FitRow& r) { return r.skipped ? "skipped" : (r.fit.pass ? "true" : "false"); }

}  // namespace

void write_run_outputs(const RunProducts& pr, const std::string& manifest_json, const std::filesystem::path& dir) {
  ensure_dir(dir);
  ensure_dir(dir / "plots");
  std::vector<std::string> header{"t"};
  header.insert(header.end(), pr.norm_labels.begin(), pr.norm_labels.end());
  CsvWriter norms(header);
  for (const auto& r : pr.records) {
    std::vector<std::string> row{format_double(r.t)};
    for (const auto& l : pr.norm_labels) {
      const auto it = r.norms.find(l);
      row.push_back(format_double(it == r.norms.end() ? std::nan("") : it->second));
    }
    norms.row(row);
  }
  write_file(dir / "norms.csv", norms.text());

  CsvWriter st({"ell", "p", "S_p"});
  const auto& s = pr.structure;
  for (std::size_t i = 0; i < s.orders.size(); ++i) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t j = 0; j < s.shifts.size(); ++j) {
      const double ell = static_cast<double>(s.shifts[j]) * pr.dx;
      st.row({format_double(ell), format_double(s.orders[i]), format_double(s.values[i][j])});
      pts.emplace_back(ell, s.values[i][j]);
    }
    write_file(dir / "plots" / ("S" + order_text(s.orders[i]) + "_vs_ell.dat"), plot_file(pts, "ell", "S_p"));
  }
  write_file(dir / "structure.csv", st.text());

  const auto i2 = std::find(s.orders.begin(), s.orders.end(), 2.0);
  const auto i4 = std::find(s.orders.begin(), s.orders.end(), 4.0);
  if (i2 != s.orders.end() && i4 != s.orders.end()) {
    std::vector<std::pair<double, double>> pts;
    const auto& s2 = s.values[static_cast<std::size_t>(i2 - s.orders.begin())];
    const auto& s4 = s.values[static_cast<std::size_t>(i4 - s.orders.begin())];
    for (std::size_t j = 0; j < s.shifts.size(); ++j) {
      if (s2[j] > 0.0) pts.emplace_back(static_cast<double>(s.shifts[j]) * pr.dx, s4[j] / (s2[j] * s2[j]));
    }
    write_file(dir / "plots" / "flatness_vs_ell.dat", plot_file(pts, "ell", "F"));
  }

  CsvWriter sp({"k", "E_k"});
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < pr.spectrum_ks.size(); ++i) {
    sp.row({count_text(pr.spectrum_ks[i]), format_double(pr.spectrum[i])});
    pts.emplace_back(static_cast<double>(pr.spectrum_ks[i]), pr.spectrum[i]);
  }
  write_file(dir / "spectrum.csv", sp.text());
  write_file(dir / "plots" / "spectrum.dat", plot_file(pts, "k", "E_k"));
  write_file(dir / "manifest.json", manifest_json + "\n");
}

void write_outputs(const SweepReport& rep, const std::filesystem::path& dir) {
  ensure_dir(dir);
  ensure_dir(dir / "plots");
  const auto& plan = rep.plan;

  std::vector<std::string> labels;
  for (const auto& r : rep.runs) {
    if (r.ok && !r.records.empty()) {
      for (const auto& [l, v] : r.records.front().norms) labels.push_back(l);
      break;
    }
  }
  std::vector<std::string> header{"nu", "t"};
  header.insert(header.end(), labels.begin(), labels.end());
  CsvWriter norms(header);
  CsvWriter st({"nu", "ell", "p", "S_p"});
  CsvWriter sp({"nu", "k", "E_k"});
  for (const auto& r : rep.runs) {
    if (!r.ok) continue;
    for (const auto& rec : r.records) {
      std::vector<std::string> row{format_double(r.nu), format_double(rec.t)};
      for (const auto& l : labels) {
        const auto it = rec.norms.find(l);
        row.push_back(format_double(it == rec.norms.end() ? std::nan("") : it->second));
      }
      norms.row(row);
    }
    const double dx = 1.0 / static_cast<double>(r.n);
    for (std::size_t i = 0; i < r.structure.orders.size(); ++i) {
      for (std::size_t j = 0; j < r.structure.shifts.size(); ++j) {
        st.row({format_double(r.nu), format_double(static_cast<double>(r.structure.shifts[j]) * dx),
                format_double(r.structure.orders[i]), format_double(r.structure.values[i][j])});
      }
    }
    for (std::size_t i = 0; i < r.spectrum_ks.size(); ++i) {
      sp.row({format_double(r.nu), count_text(r.spectrum_ks[i]), format_double(r.spectrum[i])});
    }
  }
  write_file(dir / "norms.csv", norms.text());
  write_file(dir / "structure.csv", st.text());
  write_file(dir / "spectrum.csv", sp.text());

  CsvWriter fits({"observable", "slope", "theoretical", "abs_error", "r2", "pass", "nu", "n_points", "tolerance",
                  "check", "note"});
  for (const auto& f : rep.fits) {
    const bool sk = f.skipped;
    fits.row({f.observable, format_double(sk ? std::nan("") : f.fit.slope), format_double(f.fit.theoretical),
              format_double(sk ? std::nan("") : f.fit.abs_error), format_double(sk ? std::nan("") : f.fit.r2),
              fit_pass_text(f), format_double(f.nu), count_text(f.fit.n_points), format_double(f.fit.tolerance),
              to_string(f.target.check), f.skip_reason});
  }
  write_file(dir / "fits.csv", fits.text());

  // Norm moments against nu, one plot file per monitored norm.
  for (const auto& l : labels) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rep.runs) {
      if (r.ok && r.norm_moments.count(l)) pts.emplace_back(r.nu, r.norm_moments.at(l));
    }
    write_file(dir / "plots" / ("moment_" + slug(l) + "_vs_nu.dat"), plot_file(pts, "nu", l));
  }

  json runs = json::array();
  for (const auto& r : rep.runs) {
    json sj = summary_json(plan, r);
    runs.push_back(sj);
    if (!r.ok) continue;
    const auto sub = dir / run_dir_name(r.nu);
    json rm = sj;
    rm["versions"] = versions_json();
    write_run_outputs(products_of(r), rm.dump(2), sub);
    if (r.final_state) save_snapshot(sub / "final.fbrg", *r.final_state, plan.alpha, r.nu);
  }
  json manifest{{"versions", versions_json()},
                {"plan", sweep_plan_json(plan)},
                {"aborted", rep.aborted},
                {"abort_reason", rep.abort_reason},
                {"runs", runs},
                {"wall_seconds", rep.wall_seconds}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

// ---- determinism ----

namespace {

void strip_wall(json& j) {
  if (j.is_object()) {
    j.erase("wall_seconds");
    for (auto& [k, v] : j.items()) strip_wall(v);
  } else if (j.is_array()) {
    for (auto& v : j) strip_wall(v);
  }
}

std::set<std::string> relative_files(const std::filesystem::path& root) {
  std::set<std::string> out;
  if (!std::filesystem::is_directory(root)) return out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.insert(std::filesystem::relative(e.path(), root).generic_string());
  }
  return out;
}

}  // namespace

std::vector<std::string> diff_output_dirs(const std::filesystem::path& a, const std::filesystem::path& b) {
  const auto fa = relative_files(a);
  const auto fb = relative_files(b);
  std::set<std::string> all(fa);
  all.insert(fb.begin(), fb.end());
  std::vector<std::string> diff;
  if (all.empty()) diff.push_back("<no files>");
  for (const auto& f : all) {
    if (!fa.count(f) || !fb.count(f)) {
      diff.push_back(f);
      continue;
    }
    const std::string da = read_file(a / f);
    const std::string db = read_file(b / f);
    if (std::filesystem::path(f).filename() == "manifest.json") {
      json ja = json::parse(da, nullptr, false);
      json jb = json::parse(db, nullptr, false);
      strip_wall(ja);
      strip_wall(jb);
      if (ja.is_discarded() || jb.is_discarded() || ja.dump() != jb.dump()) diff.push_back(f);
    } else if (da != db) {
      diff.push_back(f);
    }
  }
  return diff;
}

std::vector<std::string> seed_check(const SweepPlan& plan, const std::filesystem::path& dir,
                                    const std::optional<std::filesystem::path>& reference) {
  SweepPlan single = plan;
  single.nu_list = {plan.nu_list.back()};
  const std::string name = run_dir_name(single.nu_list.front());
  auto once = [&](const std::string& tag) {
    const auto rep = run_sweep(single);
    if (rep.aborted) throw Error("seed check run failed: " + rep.abort_reason);
    write_outputs(rep, dir / tag);
    return dir / tag / name;
  };
  const auto first = once("rerun");
  const auto ref = reference ? *reference : once("rerun2");
  return diff_output_dirs(ref, first);
}

// ---- single runs ----

namespace {

StructureTable instantaneous_structure(const SpectralField& f, const std::vector<double>& orders) {
  const auto shifts = default_shifts(f.grid().n_points());
  const auto phys = inverse_transform(f);
  StructureTable t{orders, shifts, {}};
  t.values.assign(orders.size(), std::vector<double>(shifts.size()));
  for (std::size_t i = 0; i < orders.size(); ++i) {
    for (std::size_t j = 0; j < shifts.size(); ++j) t.values[i][j] = increment_moment(phys, orders[i], shifts[j]);
  }
  return t;
}

std::vector<double> instantaneous_spectrum(const SpectralField& f, const std::vector<std::size_t>& ks, double M) {
  std::vector<double> out;
  for (auto k : ks) out.push_back(band_energy(f, k, M));
  return out;
}

json partition_json(double K, double alpha, double nu) {
  try {
    const auto p = RangePartition::make(K, alpha, nu);
    return json{{"K", p.K}, {"beta", p.beta}, {"C1", p.C1}, {"C2", p.C2}, {"nu0", p.nu0}};
  } catch (const InvalidInput& e) {
    return json{{"K", K}, {"error", e.what()}};
  }
}

}  // namespace

SingleRun run_single(const RunConfig& cfg, const std::optional<Snapshot>& resume) {
  const auto start = std::chrono::steady_clock::now();
  const Grid grid(cfg.n);
  const SpectralField u0 = cfg.u0.sample(grid);
  const DQuantity D = compute_D(u0);
  const FluxSpec flux = flux::by_name(cfg.flux_name, std::max(1.0, norm(u0, NormRequest::lp(kInf))));
  validate(flux);

  SolverState initial{u0, 0.0, 0, 0.0, 0.0};
  if (resume) {
    if (resume->state.field.grid() != grid) throw InvalidInput("snapshot grid does not match the config");
    if (resume->alpha != cfg.stepper.alpha || resume->nu != cfg.stepper.nu) {
      throw InvalidInput("snapshot alpha/nu do not match the config");
    }
    initial = resume->state;
  }
  const double t_end = cfg.stepper.t_end;
  MonitorConfig mon;
  if (cfg.schedule == "uniform") {
    mon.sample_times.push_back(0.0);
    for (std::size_t i = 1; i <= cfg.samples; ++i) {
      mon.sample_times.push_back(t_end * static_cast<double>(i) / static_cast<double>(cfg.samples));
    }
  } else {
    mon.sample_times = geometric_schedule(cfg.t_first, t_end, cfg.samples);
  }
  mon.norms = cfg.norms;
  mon.band_m = cfg.M;
  mon.d_value = D.value;
  mon.sigma = flux.sigma;
  mon.keep_fields = true;
  const SolverRun run = integrate(initial, cfg.stepper, flux, mon);

  SingleRun out{{}, {}, run.final_state};
  auto& pr = out.products;
  for (const auto& n : cfg.norms) pr.norm_labels.push_back(n.label());
  pr.records = run.records;
  pr.dx = grid.dx();
  pr.spectrum_ks = default_wavenumbers(grid.n_points(), cfg.M);
  json m{{"versions", versions_json()}, {"config", run_config_json(cfg)}};
  m["D"] = {{"value", D.value}, {"inv_l1", D.inv_l1}, {"w1inf", D.w1inf}};
  m["partition"] = partition_json(cfg.K, cfg.stepper.alpha, cfg.stepper.nu);
  m["resumed_from_t"] = resume ? json(resume->state.t) : json(nullptr);
  try {
    const auto w = time_window(D, flux.sigma, run);
    pr.structure = structure_functions(run, w, cfg.sp_orders, default_shifts(grid.n_points()));
    pr.spectrum = energy_spectra(run, w, pr.spectrum_ks, cfg.M);
    m["window"] = {{"T1", w.T1}, {"T2", w.T2}, {"C_tilde", w.C_tilde}};
    m["averaging"] = "window";
  } catch (const WindowNotCovered&) {
    pr.structure = instantaneous_structure(run.final_state.field, cfg.sp_orders);
    pr.spectrum = instantaneous_spectrum(run.final_state.field, pr.spectrum_ks, cfg.M);
    m["window"] = nullptr;
    m["averaging"] = "final_time";
  }
  m["steps"] = run.final_state.step_count;
  m["budget_residual"] = run.records.back().budget_residual;
  m["warnings"] = run.warnings;
  m["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.manifest_json = m.dump(2);
  return out;
}

SingleRun analyze_snapshot(const Snapshot& snap, const RunConfig& cfg) {
  StepperConfig sc = cfg.stepper;
  sc.alpha = snap.alpha;
  sc.nu = snap.nu;
  sc.validate();
  const auto& f = snap.state.field;
  MonitorConfig mon;
  mon.norms = cfg.norms;
  mon.band_m = cfg.M;
  auto rec = make_record(f.with_time(snap.state.t), sc, mon);
  rec.step = snap.state.step_count;
  rec.dissipated = snap.state.dissipated;

  SingleRun out{{}, {}, snap.state};
  auto& pr = out.products;
  for (const auto& n : cfg.norms) pr.norm_labels.push_back(n.label());
  pr.records = {rec};
  pr.dx = f.grid().dx();
  pr.structure = instantaneous_structure(f, cfg.sp_orders);
  pr.spectrum_ks = default_wavenumbers(f.grid().n_points(), cfg.M);
  pr.spectrum = instantaneous_spectrum(f, pr.spectrum_ks, cfg.M);
  json m{{"versions", versions_json()},
         {"snapshot", {{"n", f.grid().n_points()}, {"alpha", snap.alpha}, {"nu", snap.nu}, {"t", snap.state.t},
                       {"step_count", snap.state.step_count}}},
         {"partition", partition_json(cfg.K, snap.alpha, snap.nu)},
         {"averaging", "snapshot"}};
  out.manifest_json = m.dump(2);
  return out;
}

}  // namespace fburgers
