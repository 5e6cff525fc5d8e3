#include "silif/config.hpp"

#include <charconv>
#include <ostream>
#include <sstream>

#include "byteio.hpp"

namespace silif {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// a '#' opens a comment at the start of a line or after whitespace, so
// values may still contain embedded hashes
std::string strip_comment(const std::string& s) {
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i] == '#' && (i == 0 || s[i - 1] == ' ' || s[i - 1] == '\t'))
      return s.substr(0, i);
  return s;
}

[[noreturn]] void bad(const std::string& key, int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ", key '" + key +
                    "': " + what);
}

double parse_real(const std::string& key, const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) bad(key, line, "trailing characters after number");
    return d;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad(key, line, "expected a number, got '" + v + "'");
  }
}

long long parse_int(const std::string& key, const std::string& v, int line) {
  long long out = 0;
  const auto* first = v.data();
  const auto* last = v.data() + v.size();
  auto [p, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || p != last)
    bad(key, line, "expected an integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad(key, line, "expected true/false, got '" + v + "'");
}

ModelKind parse_model(const std::string& key, const std::string& v, int line) {
  if (v == "silif") return ModelKind::SiLif;
  if (v == "csilif") return ModelKind::CSiLif;
  if (v == "adlif") return ModelKind::AdLif;
  if (v == "cadlif") return ModelKind::CAdLif;
  if (v == "rf") return ModelKind::Rf;
  bad(key, line, "unknown model '" + v + "'");
}

SchedulerKind parse_sched(const std::string& key, const std::string& v, int line) {
  if (v == "none") return SchedulerKind::None;
  if (v == "plateau") return SchedulerKind::Plateau;
  if (v == "one_cycle") return SchedulerKind::OneCycle;
  if (v == "cosine") return SchedulerKind::Cosine;
  bad(key, line, "unknown scheduler '" + v + "'");
}

void check_range(const std::string& key, bool ok, const std::string& what) {
  if (!ok) throw ConfigError("config key '" + key + "': " + what);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  bool sched_w_set = false;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(strip_comment(raw));
    if (s.empty() || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ConfigError("config line " + std::to_string(line) +
                          ": unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section != "optimizer" && section != "surrogate" && section != "init" &&
          section != "data")
        throw ConfigError("config line " + std::to_string(line) +
                          ": unknown section [" + section + "]");
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line) +
                        ": expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(line) + ": empty key");

    if (section.empty()) {
      if (key == "model") cfg.model = parse_model(key, val, line);
      else if (key == "layers") cfg.layers = static_cast<int>(parse_int(key, val, line));
      else if (key == "hidden") cfg.hidden = static_cast<int>(parse_int(key, val, line));
      else if (key == "seed")
        cfg.seed = static_cast<std::uint64_t>(parse_int(key, val, line));
      else if (key == "epochs") cfg.epochs = static_cast<int>(parse_int(key, val, line));
      else if (key == "batch") cfg.batch = static_cast<int>(parse_int(key, val, line));
      else if (key == "dropout") cfg.dropout = parse_real(key, val, line);
      else if (key == "precision") {
        if (val == "f32") cfg.precision = Precision::F32;
        else if (val == "f64") cfg.precision = Precision::F64;
        else bad(key, line, "expected f32 or f64");
      } else if (key == "delays") cfg.delays = parse_bool(key, val, line);
      else if (key == "t_d") cfg.t_d = static_cast<int>(parse_int(key, val, line));
      else if (key == "detach_reset") cfg.detach_reset = parse_bool(key, val, line);
      else if (key == "state_init") {
        if (val == "random") cfg.state_init = StateInit::RandomTrain;
        else if (val == "zero") cfg.state_init = StateInit::Zero;
        else bad(key, line, "expected random or zero");
      } else if (key == "spike_mode") {
        if (val == "binary") cfg.spike_mode = SpikeMode::Binary;
        else if (val == "relaxed") cfg.spike_mode = SpikeMode::Relaxed;
        else if (val == "linear") cfg.spike_mode = SpikeMode::Linear;
        else bad(key, line, "expected binary, relaxed or linear");
      } else if (key == "count_dense_macs")
        cfg.count_dense_macs = parse_bool(key, val, line);
      else if (key == "out_dir") cfg.out_dir = val;
      else bad(key, line, "unknown key");
    } else if (section == "optimizer") {
      if (key == "lr_weights") cfg.lr_weights = parse_real(key, val, line);
      else if (key == "lr_delays") cfg.lr_delays = parse_real(key, val, line);
      else if (key == "neuron_lr_mult") cfg.neuron_lr_mult = parse_real(key, val, line);
      else if (key == "scheduler_weights") {
        cfg.scheduler_weights = parse_sched(key, val, line);
        sched_w_set = true;
      } else if (key == "scheduler_delays")
        cfg.scheduler_delays = parse_sched(key, val, line);
      else if (key == "plateau_patience")
        cfg.plateau_patience = static_cast<int>(parse_int(key, val, line));
      else if (key == "plateau_factor") cfg.plateau_factor = parse_real(key, val, line);
      else bad(key, line, "unknown key");
    } else if (section == "surrogate") {
      if (key == "width") cfg.surrogate.width = parse_real(key, val, line);
      else if (key == "scale") cfg.surrogate.scale = parse_real(key, val, line);
      else bad(key, line, "unknown key");
    } else if (section == "init") {
      if (key == "dt_min") cfg.dt_min = parse_real(key, val, line);
      else if (key == "dt_max") cfg.dt_max = parse_real(key, val, line);
      else if (key == "rf_dt") cfg.rf_dt = parse_real(key, val, line);
      else bad(key, line, "unknown key");
    } else {  // data
      if (key == "train") cfg.data_train = val;
      else if (key == "val") cfg.data_val = val;
      else if (key == "test") cfg.data_test = val;
      else if (key == "classes")
        cfg.synth.classes = static_cast<int>(parse_int(key, val, line));
      else if (key == "channels")
        cfg.synth.channels = static_cast<int>(parse_int(key, val, line));
      else if (key == "timesteps")
        cfg.synth.timesteps = static_cast<int>(parse_int(key, val, line));
      else if (key == "rate") cfg.synth.template_rate = parse_real(key, val, line);
      else if (key == "jitter")
        cfg.synth.jitter = static_cast<int>(parse_int(key, val, line));
      else if (key == "drop") cfg.synth.drop_prob = parse_real(key, val, line);
      else if (key == "per_class")
        cfg.synth.per_class = static_cast<int>(parse_int(key, val, line));
      else bad(key, line, "unknown key");
    }
  }
  // delay runs default to the one-cycle weight schedule unless stated
  if (cfg.delays && !sched_w_set) cfg.scheduler_weights = SchedulerKind::OneCycle;

  check_range("layers", cfg.layers >= 1, "must be >= 1");
  check_range("hidden", cfg.hidden >= 1, "must be >= 1");
  check_range("epochs", cfg.epochs >= 0, "must be >= 0");
  check_range("batch", cfg.batch >= 1, "must be >= 1");
  check_range("dropout", cfg.dropout >= 0.0 && cfg.dropout < 1.0, "must be in [0, 1)");
  check_range("t_d", cfg.t_d >= 1, "must be >= 1");
  check_range("lr_weights", cfg.lr_weights > 0.0, "must be > 0");
  check_range("lr_delays", cfg.lr_delays > 0.0, "must be > 0");
  check_range("neuron_lr_mult", cfg.neuron_lr_mult > 0.0, "must be > 0");
  check_range("plateau_patience", cfg.plateau_patience >= 0, "must be >= 0");
  check_range("plateau_factor",
              cfg.plateau_factor > 0.0 && cfg.plateau_factor < 1.0,
              "must be in (0, 1)");
  check_range("width", cfg.surrogate.width > 0.0, "must be > 0");
  check_range("scale", cfg.surrogate.scale >= 0.0, "must be >= 0");
  check_range("dt_min", cfg.dt_min > 0.0, "must be > 0");
  check_range("dt_max", cfg.dt_max >= cfg.dt_min, "must be >= dt_min");
  check_range("rf_dt", cfg.rf_dt > 0.0, "must be > 0");
  check_range("classes", cfg.synth.classes >= 2, "must be >= 2");
  check_range("channels", cfg.synth.channels >= 1, "must be >= 1");
  check_range("timesteps", cfg.synth.timesteps >= 1, "must be >= 1");
  check_range("rate",
              cfg.synth.template_rate >= 0.0 && cfg.synth.template_rate <= 1.0,
              "must be in [0, 1]");
  check_range("jitter", cfg.synth.jitter >= 0, "must be >= 0");
  check_range("drop", cfg.synth.drop_prob >= 0.0 && cfg.synth.drop_prob <= 1.0,
              "must be in [0, 1]");
  check_range("per_class", cfg.synth.per_class >= 1, "must be >= 1");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  const auto bytes = byteio::read_file(path);
  return parse_config(std::string(bytes.begin(), bytes.end()));
}

void print_defaults(std::ostream& out) {
  RunConfig c;
  out << "# run configuration, all keys optional; values below are the defaults\n"
      << "model = silif            # silif | csilif | adlif | cadlif | rf\n"
      << "layers = " << c.layers << "\n"
      << "hidden = " << c.hidden << "\n"
      << "seed = " << c.seed << "\n"
      << "epochs = " << c.epochs << "\n"
      << "batch = " << c.batch << "\n"
      << "dropout = " << c.dropout << "\n"
      << "precision = f64          # f64 | f32\n"
      << "delays = false           # learnable synaptic delays on projections\n"
      << "t_d = " << c.t_d << "               # maximum delay in timesteps\n"
      << "detach_reset = false     # cut the reset path out of the gradient\n"
      << "state_init = random      # random | zero (training start states)\n"
      << "spike_mode = binary      # binary | relaxed | linear\n"
      << "count_dense_macs = false # count raw-input hop as dense MACs in SOPs\n"
      << "out_dir = .\n"
      << "\n[optimizer]\n"
      << "lr_weights = " << c.lr_weights << "\n"
      << "lr_delays = " << c.lr_delays << "\n"
      << "neuron_lr_mult = " << c.neuron_lr_mult << "\n"
      << "scheduler_weights = plateau  # plateau | one_cycle | cosine | none\n"
      << "                             # (default becomes one_cycle when delays = true)\n"
      << "scheduler_delays = cosine\n"
      << "plateau_patience = " << c.plateau_patience << "\n"
      << "plateau_factor = " << c.plateau_factor << "\n"
      << "\n[surrogate]\n"
      << "width = " << c.surrogate.width << "\n"
      << "scale = " << c.surrogate.scale << "\n"
      << "\n[init]\n"
      << "dt_min = " << c.dt_min << "            # csilif time-constant draw range\n"
      << "dt_max = " << c.dt_max << "\n"
      << "rf_dt = " << c.rf_dt << "\n"
      << "\n[data]\n"
      << "# train/val/test: spkt paths; leave unset to use the synthetic task\n"
      << "# train = data.train.spkt\n"
      << "# val = data.val.spkt\n"
      << "# test = data.test.spkt\n"
      << "classes = " << c.synth.classes << "\n"
      << "channels = " << c.synth.channels << "\n"
      << "timesteps = " << c.synth.timesteps << "\n"
      << "rate = " << c.synth.template_rate << "\n"
      << "jitter = " << c.synth.jitter << "\n"
      << "drop = " << c.synth.drop_prob << "\n"
      << "per_class = " << c.synth.per_class << "\n";
}

NetworkConfig network_config(const RunConfig& cfg, Eigen::Index inputs,
                             Eigen::Index classes) {
  NetworkConfig n;
  n.model = cfg.model;
  n.inputs = inputs;
  n.classes = classes;
  n.hidden = cfg.hidden;
  n.layers = cfg.layers;
  n.dropout = cfg.dropout;
  n.delays = cfg.delays;
  n.t_d = cfg.t_d;
  n.neuron.spike_mode = cfg.spike_mode;
  n.neuron.surrogate = cfg.surrogate;
  n.neuron.detach_reset = cfg.detach_reset;
  n.neuron.state_init = cfg.state_init;
  n.dt_min = cfg.dt_min;
  n.dt_max = cfg.dt_max;
  n.rf_dt = cfg.rf_dt;
  n.count_dense_macs = cfg.count_dense_macs;
  n.seed = cfg.seed;
  return n;
}

}  // namespace silif
