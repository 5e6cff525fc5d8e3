#pragma once

#include <iosfwd>
#include <string>

#include "silif/network.hpp"
#include "silif/optimizer.hpp"
#include "silif/spikes.hpp"

namespace silif {

enum class Precision { F32, F64 };

// everything a run needs, fully defaulted. the text form is flat
// `key = value` lines with optional [optimizer], [surrogate], [init] and
// [data] sections; see print_defaults for the documented grammar.
struct RunConfig {
  ModelKind model = ModelKind::SiLif;
  int layers = 2;
  int hidden = 512;
  std::uint64_t seed = 0;
  int epochs = 100;
  int batch = 128;
  double dropout = 0.1;
  Precision precision = Precision::F64;
  bool delays = false;
  int t_d = 11;
  bool detach_reset = false;
  StateInit state_init = StateInit::RandomTrain;
  SpikeMode spike_mode = SpikeMode::Binary;
  bool count_dense_macs = false;
  std::string out_dir = ".";

  double lr_weights = 1e-3;
  double lr_delays = 1e-1;
  double neuron_lr_mult = 1.0;
  SchedulerKind scheduler_weights = SchedulerKind::Plateau;
  SchedulerKind scheduler_delays = SchedulerKind::Cosine;
  int plateau_patience = 5;
  double plateau_factor = 0.7;

  SurrogateSpec surrogate;

  double dt_min = 0.01;  // csilif time-constant draw range
  double dt_max = 0.5;
  double rf_dt = 0.04;

  std::string data_train, data_val, data_test;  // all empty selects synthetic
  SynthTaskSpec synth;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
void print_defaults(std::ostream& out);

// network wiring induced by a config plus the data dimensions
NetworkConfig network_config(const RunConfig& cfg, Eigen::Index inputs,
                             Eigen::Index classes);

}  // namespace silif
