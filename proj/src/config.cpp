#include "qsgan/config.hpp"

#include <fstream>
#include <sstream>

#include "qsgan/error.hpp"

namespace qsgan {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(ErrorKind::BadConfig, "bad integer for " + key + ": " + v);
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(ErrorKind::BadConfig, "bad number for " + key + ": " + v);
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  fail(ErrorKind::BadConfig, "bad boolean for " + key + ": " + v);
}

}  // namespace

void RunConfig::validate() const {
  if (qubit_max < 2 || qubit_max % 2 != 0 || qubit_max > 10)
    fail(ErrorKind::BadConfig, "qubit_max must be an even number in [2, 10]");
  if (latent_dim < 1 || style_dim < 1 || channels < 1)
    fail(ErrorKind::BadConfig, "generator dimensions must be positive");
  if (fade_steps < 1 || stab_steps < 1) fail(ErrorKind::BadConfig, "schedule windows must be positive");
  if (batch_size < 1) fail(ErrorKind::BadConfig, "batch_size must be positive");
  if (!(learning_rate >= 0)) fail(ErrorKind::BadConfig, "learning_rate must be non-negative");
  if (steps < 0) fail(ErrorKind::BadConfig, "steps must be non-negative");
  if (log_interval < 1) fail(ErrorKind::BadConfig, "log_interval must be positive");
  if (checkpoint_interval < 1) fail(ErrorKind::BadConfig, "checkpoint_interval must be positive");
  if (gamma1 < 0 || gamma2 < 0) fail(ErrorKind::BadConfig, "penalty weights must be non-negative");
  if (loss != "logistic" && loss != "relativistic-hinge")
    fail(ErrorKind::BadConfig, "loss must be logistic or relativistic-hinge");
  if (strain != "delta" && strain != "omicron")
    fail(ErrorKind::BadConfig, "strain must be delta or omicron");
  if (discriminator != "quantum" && discriminator != "classical")
    fail(ErrorKind::BadConfig, "discriminator must be quantum or classical");
}

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "seed")
    cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "qubit_max")
    cfg.qubit_max = static_cast<int>(parse_int(key, value));
  else if (key == "latent_dim")
    cfg.latent_dim = static_cast<int>(parse_int(key, value));
  else if (key == "style_dim")
    cfg.style_dim = static_cast<int>(parse_int(key, value));
  else if (key == "channels")
    cfg.channels = static_cast<int>(parse_int(key, value));
  else if (key == "fade_steps")
    cfg.fade_steps = static_cast<int>(parse_int(key, value));
  else if (key == "stab_steps")
    cfg.stab_steps = static_cast<int>(parse_int(key, value));
  else if (key == "loss")
    cfg.loss = value;
  else if (key == "batch_size")
    cfg.batch_size = static_cast<int>(parse_int(key, value));
  else if (key == "learning_rate")
    cfg.learning_rate = parse_double(key, value);
  else if (key == "strain")
    cfg.strain = value;
  else if (key == "steps")
    cfg.steps = parse_int(key, value);
  else if (key == "log_interval")
    cfg.log_interval = static_cast<int>(parse_int(key, value));
  else if (key == "checkpoint_interval")
    cfg.checkpoint_interval = parse_int(key, value);
  else if (key == "noise")
    cfg.noise = parse_bool(key, value);
  else if (key == "discriminator")
    cfg.discriminator = value;
  else if (key == "gamma1")
    cfg.gamma1 = parse_double(key, value);
  else if (key == "gamma2")
    cfg.gamma2 = parse_double(key, value);
  else if (key == "cohort")
    cfg.cohort = value;
  else if (key == "out_dir")
    cfg.out_dir = value;
  else
    fail(ErrorKind::BadConfig, "unknown config key: " + key);
}

namespace {

RunConfig parse_config_stream(std::istream& is, const std::string& origin) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::BadConfig, origin + ":" + std::to_string(lineno) + ": expected key = value");
    apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::Io, "cannot open config " + path);
  return parse_config_stream(is, path);
}

RunConfig parse_config_text(const std::string& text) {
  std::istringstream is(text);
  return parse_config_stream(is, "<embedded>");
}

// out_dir is an output location, not model state; it stays out of the
// canonical form so runs into different directories stay byte-comparable
std::string config_to_string(const RunConfig& cfg) {
  std::ostringstream os;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "batch_size = " << cfg.batch_size << "\n"
     << "channels = " << cfg.channels << "\n"
     << "checkpoint_interval = " << cfg.checkpoint_interval << "\n"
     << "cohort = " << cfg.cohort << "\n"
     << "discriminator = " << cfg.discriminator << "\n"
     << "fade_steps = " << cfg.fade_steps << "\n"
     << "gamma1 = " << num(cfg.gamma1) << "\n"
     << "gamma2 = " << num(cfg.gamma2) << "\n"
     << "latent_dim = " << cfg.latent_dim << "\n"
     << "learning_rate = " << num(cfg.learning_rate) << "\n"
     << "log_interval = " << cfg.log_interval << "\n"
     << "loss = " << cfg.loss << "\n"
     << "noise = " << (cfg.noise ? "on" : "off") << "\n"
     << "qubit_max = " << cfg.qubit_max << "\n"
     << "seed = " << cfg.seed << "\n"
     << "stab_steps = " << cfg.stab_steps << "\n"
     << "steps = " << cfg.steps << "\n"
     << "strain = " << cfg.strain << "\n"
     << "style_dim = " << cfg.style_dim << "\n";
  return os.str();
}

std::uint64_t config_digest(const RunConfig& cfg) {
  const std::string s = config_to_string(cfg);
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace qsgan
