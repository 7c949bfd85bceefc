#include "tde3/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace tde3 {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig kv;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ParseError("empty key", lineno);
    kv.set(key, trim(std::string_view(body).substr(eq + 1)), lineno);
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path.string(), 0);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

void KeyValueConfig::set(const std::string& key, const std::string& value,
                         std::size_t line) {
  values_[key] = value;
  lines_[key] = line;
}

void KeyValueConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ParseError("override '" + std::string(assignment) + "' is not key=value", 0);
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw ParseError("override has an empty key", 0);
  set(key, trim(assignment.substr(eq + 1)), 0);
}

bool KeyValueConfig::has(std::string_view key) const {
  return values_.find(key) != values_.end();
}

std::optional<std::string> KeyValueConfig::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  used_.insert(it->first);
  return it->second;
}

std::size_t KeyValueConfig::line_of(std::string_view key) const {
  const auto it = lines_.find(key);
  return it == lines_.end() ? 0 : it->second;
}

std::string KeyValueConfig::get_string(std::string_view key,
                                       const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double KeyValueConfig::get_double(std::string_view key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double x = std::stod(*v, &used);
    if (used == v->size() && std::isfinite(x)) return x;
  } catch (const std::exception&) {
  }
  throw ParseError(std::string(key) + ": expected a finite number, got '" + *v + "'",
                   line_of(key));
}

int KeyValueConfig::get_int(std::string_view key, int fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const long x = std::stol(*v, &used);
    if (used == v->size() && x >= std::numeric_limits<int>::min() &&
        x <= std::numeric_limits<int>::max())
      return static_cast<int>(x);
  } catch (const std::exception&) {
  }
  throw ParseError(std::string(key) + ": expected an integer, got '" + *v + "'",
                   line_of(key));
}

std::uint64_t KeyValueConfig::get_u64(std::string_view key, std::uint64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    if (!v->empty() && v->front() != '-') {
      const unsigned long long x = std::stoull(*v, &used);
      if (used == v->size()) return x;
    }
  } catch (const std::exception&) {
  }
  throw ParseError(std::string(key) + ": expected a non-negative integer, got '" + *v + "'",
                   line_of(key));
}

bool KeyValueConfig::get_bool(std::string_view key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "yes" || *v == "on" || *v == "1") return true;
  if (*v == "false" || *v == "no" || *v == "off" || *v == "0") return false;
  throw ParseError(std::string(key) + ": expected a boolean, got '" + *v + "'",
                   line_of(key));
}

std::vector<double> KeyValueConfig::get_doubles(std::string_view key,
                                                const std::vector<double>& fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const std::string& item : split_list(*v)) {
    KeyValueConfig one;
    one.set(std::string(key), item, line_of(key));
    out.push_back(one.get_double(key, 0.0));
  }
  return out;
}

std::vector<int> KeyValueConfig::get_ints(std::string_view key,
                                          const std::vector<int>& fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::vector<int> out;
  for (const std::string& item : split_list(*v)) {
    KeyValueConfig one;
    one.set(std::string(key), item, line_of(key));
    out.push_back(one.get_int(key, 0));
  }
  return out;
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (!used_.count(k)) out.push_back(k);
  return out;
}

DecodeMode parse_decode_mode(std::string_view name) {
  if (name == "count") return DecodeMode::Count;
  if (name == "isi") return DecodeMode::Isi;
  throw std::invalid_argument("unknown inference mode '" + std::string(name) + "'");
}

TdeKind parse_tde_kind(std::string_view name) {
  if (name == "tde2" || name == "TDE2" || name == "2") return TdeKind::Tde2;
  if (name == "tde3" || name == "TDE3" || name == "3") return TdeKind::Tde3;
  throw std::invalid_argument("unknown detector kind '" + std::string(name) + "'");
}

namespace {

// Enum-valued keys report their line like the numeric getters do.
template <class F>
auto parse_named(const KeyValueConfig& kv, std::string_view key, const std::string& value,
                 F parse) {
  try {
    return parse(value);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string(key) + ": " + e.what(), kv.line_of(key));
  }
}

VelocityScale scale_from(const KeyValueConfig& kv, VelocityScale scale) {
  if (const auto s = kv.get("scale")) {
    if (*s == "wide") {
      scale = VelocityScale::wide();
    } else if (*s == "narrow") {
      scale = VelocityScale::narrow();
    } else if (*s == "custom") {
      scale = VelocityScale::custom(scale.alpha, scale.bias);
    } else {
      throw ParseError("scale: expected wide, narrow or custom, got '" + *s + "'",
                       kv.line_of("scale"));
    }
  }
  if (kv.has("scale_alpha") || kv.has("scale_bias")) {
    if (scale.kind != VelocityScale::Kind::Custom)
      throw ParseError("scale_alpha/scale_bias need scale = custom", 0);
    scale.alpha = kv.get_double("scale_alpha", scale.alpha);
    scale.bias = kv.get_double("scale_bias", scale.bias);
  }
  return scale;
}

}  // namespace

DecodeConfig decode_config_from(const KeyValueConfig& kv, const DecodeConfig& base) {
  DecodeConfig d = base;
  if (const auto m = kv.get("mode")) d.mode = parse_named(kv, "mode", *m, parse_decode_mode);
  d.count_window = kv.get_int("count_window", d.count_window);
  d.scale = scale_from(kv, d.scale);
  d.trace_tau = kv.get_double("trace_tau", d.trace_tau);
  d.isi_sentinel = kv.get_double("isi_sentinel", d.isi_sentinel);
  return d;
}

TrainConfig train_config_from(const KeyValueConfig& kv, const TrainConfig& base) {
  TrainConfig c = base;
  const auto mode_name = kv.get("mode");
  const DecodeMode mode = mode_name ? parse_named(kv, "mode", *mode_name, parse_decode_mode)
                                    : base.inference_mode;
  if (const auto task = kv.get("task")) {
    c = task_config(parse_named(kv, "task", *task, parse_train_task), mode,
                    kv.get_double("noise_rate", 0.0));
  }
  c.inference_mode = mode;

  c.epochs = kv.get_int("epochs", c.epochs);
  c.batch_size = kv.get_int("batch_size", c.batch_size);
  c.learning_rate = kv.get_double("learning_rate", c.learning_rate);
  c.beta1 = kv.get_double("beta1", c.beta1);
  c.beta2 = kv.get_double("beta2", c.beta2);
  c.reg_lambda = kv.get_double("reg_lambda", c.reg_lambda);
  c.surrogate_beta = kv.get_double("surrogate_beta", c.surrogate_beta);
  c.scale = scale_from(kv, c.scale);
  c.count_window = kv.get_int("count_window", c.count_window);
  c.trace_tau = kv.get_double("trace_tau", c.trace_tau);
  if (const auto k = kv.get("kind")) c.kind = parse_named(kv, "kind", *k, parse_tde_kind);
  c.seed = kv.get_u64("seed", c.seed);
  c.stcf_search_period = kv.get_int("stcf_search_period", c.stcf_search_period);
  if (kv.has("stcf_n") || kv.has("stcf_window")) {
    try {
      c.stcf = StcfConfig(kv.get_int("stcf_n", c.stcf.n_required()),
                          kv.get_int("stcf_window", c.stcf.window()));
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string("stcf: ") + e.what(), kv.line_of("stcf_n"));
    }
  }
  c.init.w_fac = kv.get_double("init_w_fac", c.init.w_fac);
  c.init.p_g = kv.get_double("init_p_g", c.init.p_g);
  c.init.p_I = kv.get_double("init_p_I", c.init.p_I);
  c.init.p_V = kv.get_double("init_p_V", c.init.p_V);
  c.detach_reset = kv.get_bool("detach_reset", c.detach_reset);
  c.isi_warmup_epochs = kv.get_int("isi_warmup_epochs", c.isi_warmup_epochs);
  c.keep_best = kv.get_bool("keep_best", c.keep_best);

  StimulusSpec& s = c.stimulus;
  s.velocities = kv.get_doubles("velocities", s.velocities);
  s.n_edges = kv.get_int("n_edges", s.n_edges);
  s.spacings = kv.get_ints("spacings", s.spacings);
  s.noise_rate = kv.get_double("noise_rate", s.noise_rate);
  s.timestep = kv.get_double("timestep", s.timestep);
  s.width = kv.get_int("width", s.width);
  s.height = kv.get_int("height", s.height);
  return c;
}

}  // namespace tde3
