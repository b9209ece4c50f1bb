#include "modnls/cli.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace modnls::cli {

namespace {

enum class Kind { text, real, integer, u64, flag, ints, length };

struct Key {
  const char* name;  // "section.key"
  Kind kind;
  const char* fallback;
};

// clang-format off
const Key kSchema[] = {
    {"experiment.name", Kind::text, ""},
    {"experiment.seed", Kind::u64, "1"},
    {"experiment.threads", Kind::integer, "0"},
    {"experiment.margin", Kind::real, "0.15"},
    {"experiment.two_sided", Kind::flag, "false"},
    {"grid.dim", Kind::integer, "1"},
    {"grid.n", Kind::integer, "256"},
    {"grid.length", Kind::length, "16pi"},
    // sweeps
    {"params.family", Kind::text, "focusing"},
    {"params.scales", Kind::ints, ""},
    {"params.low_scales", Kind::ints, ""},
    {"params.fixed_high", Kind::integer, "8"},
    {"params.fixed_low", Kind::integer, "1"},
    {"params.p", Kind::real, "4"},
    {"params.s", Kind::real, "0"},
    {"params.q", Kind::real, "2"},
    {"params.horizon", Kind::real, "1"},
    {"params.time_nodes", Kind::integer, "0"},
    {"params.spacing", Kind::real, "0.5"},
    {"params.mesh_density", Kind::real, "12"},
    {"params.predicted", Kind::real, "0"},
    {"params.count", Kind::integer, "4"},
    // variation
    {"params.pairs", Kind::integer, "200"},
    {"params.nodes", Kind::integer, "8"},
    // data for solve / largedata / datagen
    {"params.data", Kind::text, "gaussian"},
    {"params.amplitude", Kind::real, "0.5"},
    {"params.width", Kind::real, "1"},
    {"params.radius", Kind::real, "4"},
    {"params.scale", Kind::integer, "1"},
    {"params.eps", Kind::real, "0.1"},
    // solver
    {"params.sign", Kind::integer, "1"},
    {"params.iter_norm", Kind::text, "auto"},
    {"params.max_iters", Kind::integer, "30"},
    {"params.tol", Kind::real, "1e-12"},
    {"params.start", Kind::text, "free"},
    {"params.dt", Kind::real, "0"},
    {"params.xval_tol", Kind::real, "1e-5"},
    {"params.max_factor", Kind::real, "0.5"},
    {"params.c0", Kind::real, "0.1"},
    {"params.c1", Kind::real, "0.1"},
};
// clang-format on

const Key& lookup(const std::string& name) {
  for (const auto& k : kSchema)
    if (name == k.name) return k;
  throw ParseError("unknown config key '" + name + "'");
}

std::string trim(std::string s) {
  const auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), issp));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), issp).base(), s.end());
  return s;
}

template <class T>
T parse_number(const std::string& text, const std::string& key) {
  const std::string s = trim(text);
  T v{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size())
    throw ParseError("config key '" + key + "': cannot parse '" + text + "'");
  return v;
}

bool parse_flag(const std::string& text, const std::string& key) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ParseError("config key '" + key + "': expected true/false, got '" + text + "'");
}

std::vector<int> parse_ints(const std::string& text, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (trim(item).empty()) continue;
    out.push_back(parse_number<int>(item, key));
  }
  return out;
}

// type check; throws ParseError
void check_value(const Key& k, const std::string& v) {
  switch (k.kind) {
    case Kind::text: return;
    case Kind::real: parse_number<double>(v, k.name); return;
    case Kind::integer: parse_number<int>(v, k.name); return;
    case Kind::u64: parse_number<std::uint64_t>(v, k.name); return;
    case Kind::flag: parse_flag(v, k.name); return;
    case Kind::ints: parse_ints(v, k.name); return;
    case Kind::length:
      try {
        parse_length(v);
      } catch (const DomainError& e) {
        throw ParseError(std::string("config key '") + k.name + "': " + e.what());
      }
      return;
  }
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"norms",      "smoothing", "strichartz", "bilinear", "v2bilinear",
                                              "decoupling", "variation", "solve",      "largedata", "datagen"};
  return names;
}

Real parse_length(const std::string& text) {
  std::string s = trim(text);
  Real factor = 1;
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
    factor = kPi;
    s = trim(s.substr(0, s.size() - 2));
    if (s.empty()) s = "1";
  }
  Real v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size()) throw DomainError("bad length '" + text + "'");
  return v * factor;
}

std::string RunConfig::str(const std::string& key) const {
  lookup(key);
  return values.at(key);
}
Real RunConfig::real(const std::string& key) const {
  return lookup(key).kind == Kind::length ? parse_length(str(key)) : parse_number<double>(str(key), key);
}
int RunConfig::integer(const std::string& key) const { return parse_number<int>(str(key), key); }
std::uint64_t RunConfig::u64(const std::string& key) const { return parse_number<std::uint64_t>(str(key), key); }
bool RunConfig::flag(const std::string& key) const { return parse_flag(str(key), key); }
std::vector<int> RunConfig::ints(const std::string& key) const { return parse_ints(str(key), key); }

Grid RunConfig::grid() const { return Grid(integer("grid.dim"), integer("grid.n"), real("grid.length")); }

ExperimentConfig RunConfig::experiment_config() const {
  ExperimentConfig c;
  c.dim = integer("grid.dim");
  c.n = integer("grid.n");
  c.length = real("grid.length");
  c.scales = ints("params.scales");
  c.low_scales = ints("params.low_scales");
  c.fixed_high = integer("params.fixed_high");
  c.fixed_low = integer("params.fixed_low");
  c.family = parse_family(str("params.family"));
  c.seed = u64("experiment.seed");
  c.p = real("params.p");
  c.s = real("params.s");
  c.q = real("params.q");
  c.horizon = real("params.horizon");
  c.time_nodes = integer("params.time_nodes");
  c.margin = real("experiment.margin");
  c.two_sided = flag("experiment.two_sided");
  c.spacing = real("params.spacing");
  c.mesh_density = real("params.mesh_density");
  return c;
}

nlohmann::json RunConfig::resolved() const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& k : kSchema) {
    const std::string name = k.name;
    const auto dot = name.find('.');
    auto& slot = out[name.substr(0, dot)][name.substr(dot + 1)];
    switch (k.kind) {
      case Kind::text: slot = str(name); break;
      case Kind::real:
      case Kind::length: slot = real(name); break;
      case Kind::integer: slot = integer(name); break;
      case Kind::u64: slot = u64(name); break;
      case Kind::flag: slot = flag(name); break;
      case Kind::ints: slot = ints(name); break;
    }
  }
  return out;
}

RunConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream is(text);
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(std::string("malformed config: ") + e.what());
  }
  RunConfig cfg;
  for (const auto& k : kSchema) cfg.values[k.name] = k.fallback;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ParseError("config key '" + section + "' outside a section");
    for (const auto& [key, node] : body) {
      const std::string name = section + "." + key;
      const Key& k = lookup(name);
      const std::string v = trim(node.data());
      check_value(k, v);
      cfg.values[name] = v;
    }
  }
  cfg.experiment = cfg.values["experiment.name"];
  if (cfg.experiment.empty()) throw ParseError("config: [experiment] name is required");
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), cfg.experiment) == names.end())
    throw UnknownExperiment("unknown experiment '" + cfg.experiment + "'");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

}  // namespace modnls::cli
