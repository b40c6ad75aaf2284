#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>
#include <variant>
#include <vector>

namespace slipflow::cli {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>> kSchema = {
    {"geometry",
     {"kind", "radius", "center", "equatorial", "polar", "axis", "z0", "z1", "shape", "a", "b", "c", "sampling_polar",
      "sampling_azimuthal"}},
    {"discretization",
     {"l_max", "n_max", "radial_nodes", "angular_degree", "nonlinear_radial_nodes", "nonlinear_angular_degree",
      "refine_l_max"}},
    {"physics", {"nu", "alpha"}},
    {"run",
     {"u0", "u0_rigid_index", "u0_amplitude", "u0_mode", "u0_random_modes", "u0_energy", "u0_coefficients",
      "u0_deflate_kernel", "u0_rigid", "dt", "t_final", "integrator", "seed", "cadence", "target", "rate",
      "check_steady", "steady_tolerance", "energy_growth_tolerance"}},
    {"output", {"directory", "plot"}},
};

const std::map<std::string, std::set<std::string>> kShapeKeys = {
    {"ball", {"radius", "center"}},
    {"spheroid", {"equatorial", "polar", "axis", "center"}},
    {"revolution", {"z0", "z1", "shape", "axis", "center"}},
    {"triaxial", {"a", "b", "c", "center"}},
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
  return s;
}

std::string fmt(const Vec3& v) { return fmt(std::vector<double>{v.x(), v.y(), v.z()}); }

class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  std::optional<std::string> raw(const std::string& key) const {
    if (tree_ == nullptr) return std::nullopt;
    const auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return *v;
  }

  double number(const std::string& key, double fallback) const {
    const auto r = raw(key);
    return r ? parse_number(key, *r) : fallback;
  }

  int integer(const std::string& key, int fallback) const {
    const auto r = raw(key);
    if (!r) return fallback;
    try {
      std::size_t used = 0;
      const long v = std::stol(*r, &used);
      if (used != r->size() || v < INT32_MIN || v > INT32_MAX) throw std::invalid_argument("");
      return static_cast<int>(v);
    } catch (const std::exception&) {
      throw error(key, "expected an integer, got '" + *r + "'");
    }
  }

  bool boolean(const std::string& key, bool fallback) const {
    const auto r = raw(key);
    if (!r) return fallback;
    if (*r == "true" || *r == "1" || *r == "yes" || *r == "on") return true;
    if (*r == "false" || *r == "0" || *r == "no" || *r == "off") return false;
    throw error(key, "expected a boolean, got '" + *r + "'");
  }

  std::string text(const std::string& key, const std::string& fallback) const { return raw(key).value_or(fallback); }

  std::vector<double> list(const std::string& key, std::vector<double> fallback) const {
    const auto r = raw(key);
    if (!r) return fallback;
    std::vector<double> out;
    std::istringstream is(*r);
    std::string tok;
    while (is >> tok) out.push_back(parse_number(key, tok));
    if (out.empty()) throw error(key, "expected at least one number");
    return out;
  }

  Vec3 vec3(const std::string& key, const Vec3& fallback) const {
    const auto r = raw(key);
    if (!r) return fallback;
    const auto v = list(key, {});
    if (v.size() != 3) throw error(key, "expected three numbers");
    return {v[0], v[1], v[2]};
  }

  ConfigError error(const std::string& key, const std::string& what) const {
    return ConfigError("[" + name_ + "] " + key + ": " + what);
  }

 private:
  double parse_number(const std::string& key, const std::string& s) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw error(key, "expected a number, got '" + s + "'");
    }
  }

  std::string name_;
  const pt::ptree* tree_;
};

}  // namespace

operators::OperatorOptions ExperimentConfig::operator_options(bool advection) const {
  operators::OperatorOptions o;
  const auto* ball = geometry.as_ball();
  o.radius = ball ? ball->radius : 1.0;
  o.l_max = l_max;
  o.n_max = n_max;
  o.alpha = alpha;
  o.bilinear = bilinear;
  o.nonlinear = nonlinear;
  o.advection = advection;
  return o;
}

ExperimentConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  std::map<std::string, const pt::ptree*> sections;
  for (const auto& [name, child] : tree) {
    if (child.empty() && !child.data().empty()) throw ConfigError("key '" + name + "' outside of any section");
    const auto it = kSchema.find(name);
    if (it == kSchema.end()) throw ConfigError("unknown section [" + name + "]");
    for (const auto& [key, value] : child) {
      if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + name + "]");
      if (!value.empty()) throw ConfigError("nested key '" + key + "' in [" + name + "]");
    }
    sections[name] = &child;
  }
  auto section = [&](const std::string& name) {
    const auto it = sections.find(name);
    return Section(name, it == sections.end() ? nullptr : it->second);
  };

  ExperimentConfig c;

  const auto g = section("geometry");
  const std::string kind = g.text("kind", "ball");
  const auto shape_keys = kShapeKeys.find(kind);
  if (shape_keys == kShapeKeys.end()) throw g.error("kind", "unknown geometry kind '" + kind + "'");
  if (const auto it = sections.find("geometry"); it != sections.end()) {
    for (const auto& [key, value] : *it->second) {
      if (key == "kind" || key == "sampling_polar" || key == "sampling_azimuthal") continue;
      if (!shape_keys->second.count(key)) throw g.error(key, "does not apply to geometry kind '" + kind + "'");
    }
  }
  geometry::SurfaceSampling sampling;
  sampling.polar = g.integer("sampling_polar", sampling.polar);
  sampling.azimuthal = g.integer("sampling_azimuthal", sampling.azimuthal);
  const Vec3 center = g.vec3("center", Vec3::Zero());
  geometry::Shape shape;
  if (kind == "ball") {
    shape = geometry::Ball{g.number("radius", 1.0), center};
  } else if (kind == "spheroid") {
    shape = geometry::Spheroid{g.number("equatorial", 1.0), g.number("polar", 1.0), g.vec3("axis", Vec3::UnitZ()), center};
  } else if (kind == "revolution") {
    shape = geometry::RevolutionProfile{g.number("z0", -1.0), g.number("z1", 1.0), g.list("shape", {1.0}),
                                        g.vec3("axis", Vec3::UnitZ()), center};
  } else {
    shape = geometry::TriaxialEllipsoid{g.number("a", 1.0), g.number("b", 1.0), g.number("c", 1.0), center};
  }
  c.geometry = geometry::GeometryDescriptor(shape, sampling);

  const auto d = section("discretization");
  c.l_max = d.integer("l_max", c.l_max);
  c.n_max = d.integer("n_max", c.n_max);
  if (d.raw("radial_nodes") || d.raw("angular_degree")) {
    const auto def = bilinear_orders(c.l_max, c.n_max);
    c.bilinear = GridOrders{d.integer("radial_nodes", def.radial_nodes), d.integer("angular_degree", def.angular_degree)};
  }
  if (d.raw("nonlinear_radial_nodes") || d.raw("nonlinear_angular_degree")) {
    const auto def = nonlinear_orders(c.l_max, c.n_max);
    c.nonlinear = GridOrders{d.integer("nonlinear_radial_nodes", def.radial_nodes),
                             d.integer("nonlinear_angular_degree", def.angular_degree)};
  }
  if (d.raw("refine_l_max")) c.refine_l_max = d.integer("refine_l_max", 0);

  const auto p = section("physics");
  c.nu = p.number("nu", c.nu);
  if (!(c.nu > 0.0)) throw p.error("nu", "must be positive");
  c.alpha.coefficients = p.list("alpha", {0.0});

  const auto r = section("run");
  auto& run = c.run;
  run.nu = c.nu;
  run.dt = r.number("dt", run.dt);
  run.t_final = r.number("t_final", run.t_final);
  run.cadence = r.number("cadence", run.cadence);
  run.energy_growth_tolerance = r.number("energy_growth_tolerance", run.energy_growth_tolerance);
  try {
    run.integrator = dynamics::integrator_from_string(r.text("integrator", "rk4"));
    run.target = dynamics::decay_target_from_string(r.text("target", "none"));
    run.u0.kind = dynamics::InitialCondition::kind_from_string(r.text("u0", "random"));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("[run] ") + e.what());
  }
  const int rigid_index = r.integer("u0_rigid_index", 3);
  if (rigid_index < 1 || rigid_index > 3) throw r.error("u0_rigid_index", "must be 1, 2 or 3");
  run.u0.rigid_index = rigid_index - 1;
  run.u0.amplitude = r.number("u0_amplitude", run.u0.amplitude);
  run.u0.mode = r.integer("u0_mode", -1);
  run.u0.random_modes = r.integer("u0_random_modes", run.u0.random_modes);
  run.u0.energy = r.number("u0_energy", run.u0.energy);
  run.u0.deflate_kernel = r.boolean("u0_deflate_kernel", false);
  const double seed = r.number("seed", 1.0);
  if (seed < 0.0 || seed != std::floor(seed) || seed > 9007199254740992.0) throw r.error("seed", "must be a non-negative integer");
  run.u0.seed = static_cast<std::uint64_t>(seed);
  if (r.raw("u0_coefficients")) {
    const auto v = r.list("u0_coefficients", {});
    run.u0.coefficients = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  if (run.u0.kind == dynamics::InitialCondition::Kind::Coefficients && run.u0.coefficients.size() == 0) {
    throw r.error("u0_coefficients", "required when u0 = coefficients");
  }
  const auto rigid = r.list("u0_rigid", {0.0, 0.0, 0.0});
  if (rigid.size() != 3) throw r.error("u0_rigid", "expected three numbers");
  run.u0.rigid = {rigid[0], rigid[1], rigid[2]};
  const std::string rate = r.text("rate", "mu1");
  if (rate == "mu1") {
    c.rate = RateKind::Mu1;
  } else if (rate == "sigma1") {
    c.rate = RateKind::Sigma1;
  } else {
    throw r.error("rate", "expected mu1 or sigma1, got '" + rate + "'");
  }
  c.check_steady = r.boolean("check_steady", false);
  c.steady_tolerance = r.number("steady_tolerance", c.steady_tolerance);

  const auto o = section("output");
  c.output_dir = o.text("directory", "out");
  c.plot = o.boolean("plot", false);

  refresh_resolved(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in);
}

void refresh_resolved(ExperimentConfig& c) {
  auto& out = c.resolved;
  out.clear();
  auto& g = out["geometry"];
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        g["center"] = fmt(s.center);
        if constexpr (std::is_same_v<S, geometry::Ball>) {
          g["kind"] = "ball";
          g["radius"] = fmt(s.radius);
        } else if constexpr (std::is_same_v<S, geometry::Spheroid>) {
          g["kind"] = "spheroid";
          g["equatorial"] = fmt(s.equatorial);
          g["polar"] = fmt(s.polar);
          g["axis"] = fmt(s.axis);
        } else if constexpr (std::is_same_v<S, geometry::RevolutionProfile>) {
          g["kind"] = "revolution";
          g["z0"] = fmt(s.z0);
          g["z1"] = fmt(s.z1);
          g["shape"] = fmt(s.shape);
          g["axis"] = fmt(s.axis);
        } else {
          g["kind"] = "triaxial";
          g["a"] = fmt(s.a);
          g["b"] = fmt(s.b);
          g["c"] = fmt(s.c);
        }
      },
      c.geometry.shape());
  g["sampling_polar"] = std::to_string(c.geometry.sampling().polar);
  g["sampling_azimuthal"] = std::to_string(c.geometry.sampling().azimuthal);

  auto& d = out["discretization"];
  d["l_max"] = std::to_string(c.l_max);
  d["n_max"] = std::to_string(c.n_max);
  const auto bo = c.bilinear.value_or(bilinear_orders(c.l_max, c.n_max));
  const auto no = c.nonlinear.value_or(nonlinear_orders(c.l_max, c.n_max));
  d["radial_nodes"] = std::to_string(bo.radial_nodes);
  d["angular_degree"] = std::to_string(bo.angular_degree);
  d["nonlinear_radial_nodes"] = std::to_string(no.radial_nodes);
  d["nonlinear_angular_degree"] = std::to_string(no.angular_degree);
  d["refine_l_max"] = c.refine_l_max ? std::to_string(*c.refine_l_max) : "none";

  auto& p = out["physics"];
  p["nu"] = fmt(c.nu);
  p["alpha"] = fmt(c.alpha.coefficients);

  auto& r = out["run"];
  const auto& u0 = c.run.u0;
  r["u0"] = dynamics::to_string(u0.kind);
  r["u0_rigid_index"] = std::to_string(u0.rigid_index + 1);
  r["u0_amplitude"] = fmt(u0.amplitude);
  r["u0_mode"] = std::to_string(u0.mode);
  r["u0_random_modes"] = std::to_string(u0.random_modes);
  r["u0_energy"] = fmt(u0.energy);
  r["u0_coefficients"] = fmt(std::vector<double>(u0.coefficients.data(), u0.coefficients.data() + u0.coefficients.size()));
  r["u0_deflate_kernel"] = u0.deflate_kernel ? "true" : "false";
  r["u0_rigid"] = fmt(std::vector<double>(u0.rigid.begin(), u0.rigid.end()));
  r["dt"] = fmt(c.run.dt);
  r["t_final"] = fmt(c.run.t_final);
  r["integrator"] = dynamics::to_string(c.run.integrator);
  r["seed"] = std::to_string(u0.seed);
  r["cadence"] = fmt(c.run.cadence);
  r["target"] = dynamics::to_string(c.run.target);
  r["rate"] = c.rate == RateKind::Mu1 ? "mu1" : "sigma1";
  r["check_steady"] = c.check_steady ? "true" : "false";
  r["steady_tolerance"] = fmt(c.steady_tolerance);
  r["energy_growth_tolerance"] = fmt(c.run.energy_growth_tolerance);

  auto& o = out["output"];
  o["directory"] = c.output_dir.string();
  o["plot"] = c.plot ? "true" : "false";
}

}  // namespace slipflow::cli
