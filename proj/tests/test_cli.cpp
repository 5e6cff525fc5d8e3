#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "silif/cli.hpp"
#include "silif/config.hpp"
#include "silif/spikes.hpp"

using namespace silif;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = 0;
  std::string out, err;
};

CliResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = dispatch(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path tmp_dir() {
  static int counter = 0;
  fs::path p =
      fs::temp_directory_path() / ("silif_cli_" + std::to_string(counter++));
  fs::create_directories(p);
  return p;
}

fs::path write_text(const fs::path& dir, const std::string& name,
                    const std::string& text) {
  fs::path p = dir / name;
  std::ofstream f(p, std::ios::binary);
  f << text;
  return p;
}

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

// tiny but trainable task shared by the workflow tests
std::string tiny_config(const fs::path& out_dir) {
  return "model = silif\n"
         "layers = 1\n"
         "hidden = 8\n"
         "epochs = 1\n"
         "batch = 8\n"
         "seed = 5\n"
         "out_dir = " + out_dir.string() + "\n"
         "[data]\n"
         "classes = 3\n"
         "channels = 8\n"
         "timesteps = 12\n"
         "per_class = 10\n";
}

}  // namespace

TEST_CASE("bare invocation and unknown commands print usage on stderr") {
  CliResult empty = run({});
  CHECK(empty.code == 2);
  CHECK(empty.err.find("usage") != std::string::npos);

  CliResult unknown = run({"frobnicate"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("usage") != std::string::npos);

  CliResult help = run({"help"});
  CHECK(help.code == 0);
  for (const char* cmd : {"train", "eval", "analyze-eigen", "profile-sops",
                          "sop-calc-eventssm", "gen-synthetic", "convert-events",
                          "gradcheck"})
    CHECK(help.out.find(cmd) != std::string::npos);
}

TEST_CASE("subcommand help exits cleanly and missing options exit 2") {
  CliResult help = run({"eval", "--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("--checkpoint") != std::string::npos);

  CliResult missing = run({"eval", "--split", "val"});
  CHECK(missing.code == 2);
  CHECK(!missing.err.empty());
}

TEST_CASE("printed defaults parse back into the default configuration") {
  CliResult r = run({"train", "--print-defaults"});
  REQUIRE(r.code == 0);
  RunConfig parsed = parse_config(r.out);
  const RunConfig def;
  CHECK(parsed.model == def.model);
  CHECK(parsed.layers == def.layers);
  CHECK(parsed.hidden == def.hidden);
  CHECK(parsed.seed == def.seed);
  CHECK(parsed.epochs == def.epochs);
  CHECK(parsed.batch == def.batch);
  CHECK(parsed.dropout == def.dropout);
  CHECK(parsed.precision == def.precision);
  CHECK(parsed.delays == def.delays);
  CHECK(parsed.t_d == def.t_d);
  CHECK(parsed.detach_reset == def.detach_reset);
  CHECK(parsed.state_init == def.state_init);
  CHECK(parsed.spike_mode == def.spike_mode);
  CHECK(parsed.count_dense_macs == def.count_dense_macs);
  CHECK(parsed.out_dir == def.out_dir);
  CHECK(parsed.lr_weights == def.lr_weights);
  CHECK(parsed.lr_delays == def.lr_delays);
  CHECK(parsed.neuron_lr_mult == def.neuron_lr_mult);
  CHECK(parsed.scheduler_weights == def.scheduler_weights);
  CHECK(parsed.scheduler_delays == def.scheduler_delays);
  CHECK(parsed.plateau_patience == def.plateau_patience);
  CHECK(parsed.plateau_factor == def.plateau_factor);
  CHECK(parsed.surrogate.width == def.surrogate.width);
  CHECK(parsed.surrogate.scale == def.surrogate.scale);
  CHECK(parsed.dt_min == def.dt_min);
  CHECK(parsed.dt_max == def.dt_max);
  CHECK(parsed.rf_dt == def.rf_dt);
  CHECK(parsed.data_train.empty());
  CHECK(parsed.synth.classes == def.synth.classes);
  CHECK(parsed.synth.channels == def.synth.channels);
  CHECK(parsed.synth.timesteps == def.synth.timesteps);
  CHECK(parsed.synth.template_rate == def.synth.template_rate);
  CHECK(parsed.synth.jitter == def.synth.jitter);
  CHECK(parsed.synth.drop_prob == def.synth.drop_prob);
  CHECK(parsed.synth.per_class == def.synth.per_class);
}

TEST_CASE("config errors carry the key and the line number") {
  fs::path dir = tmp_dir();

  fs::path bad_value = write_text(dir, "a.cfg", "hidden = -1\n");
  CliResult r1 = run({"train", "--config", bad_value.string()});
  CHECK(r1.code == 1);
  CHECK(r1.err.find("hidden") != std::string::npos);
  CHECK(r1.err.find("must be >= 1") != std::string::npos);

  fs::path unknown_key = write_text(dir, "b.cfg", "layers = 2\nwibble = 3\n");
  CliResult r2 = run({"train", "--config", unknown_key.string()});
  CHECK(r2.code == 1);
  CHECK(r2.err.find("line 2") != std::string::npos);
  CHECK(r2.err.find("wibble") != std::string::npos);

  fs::path bad_section = write_text(dir, "c.cfg", "[wrong]\n");
  CliResult r3 = run({"train", "--config", bad_section.string()});
  CHECK(r3.code == 1);
  CHECK(r3.err.find("unknown section") != std::string::npos);

  fs::path bad_number = write_text(dir, "d.cfg", "dropout = lots\n");
  CliResult r4 = run({"train", "--config", bad_number.string()});
  CHECK(r4.code == 1);
  CHECK(r4.err.find("dropout") != std::string::npos);
}

TEST_CASE("partial data sections are rejected") {
  fs::path dir = tmp_dir();
  fs::path cfg = write_text(dir, "partial.cfg",
                            "epochs = 0\n[data]\ntrain = only.spkt\n");
  CliResult r = run({"train", "--config", cfg.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("train/val/test") != std::string::npos);
}

TEST_CASE("the sop calculator prints the frozen workload line") {
  CliResult r = run({"sop-calc-eventssm", "--state", "64", "--events", "8000",
                     "--events2", "1000"});
  REQUIRE(r.code == 0);
  CHECK(r.out == "block1=65.5M block2=32.8M total=98.3M exact=98304000\n");
}

TEST_CASE("synthetic generation is deterministic across invocations") {
  fs::path a = tmp_dir(), b = tmp_dir();
  const std::vector<std::string> common{
      "gen-synthetic", "--seed", "9",    "--classes",   "3", "--channels", "8",
      "--timesteps",   "12",     "--per-class", "20"};
  auto run_into = [&](const fs::path& dir) {
    auto args = common;
    args.push_back("--out");
    args.push_back((dir / "task.spkt").string());
    return run(args);
  };
  CliResult ra = run_into(a);
  CliResult rb = run_into(b);
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);

  auto la = lines_of(ra.out);
  REQUIRE(la.size() == 3);
  CHECK(la[0].find("train=") == 0);
  CHECK(la[0].find("samples=42 steps=12 channels=8") != std::string::npos);
  CHECK(la[1].find("val=") == 0);
  CHECK(la[2].find("test=") == 0);

  for (const char* split : {"train", "val", "test"}) {
    const std::string name = std::string("task.") + split + ".spkt";
    CHECK(slurp(a / name) == slurp(b / name));
  }
  SpikeTensor train = load_spkt((a / "task.train.spkt").string());
  CHECK(train.batch == 42);
  CHECK(train.channels == 8);
}

TEST_CASE("event conversion writes a loadable tensor and reports bad input") {
  fs::path dir = tmp_dir();
  fs::path events = write_text(dir, "ev.txt",
                               "1000,0\n"
                               "2500,1\n"
                               "9000,3\n"
                               "\n"
                               "0,2\n"
                               "4000,2\n");
  fs::path labels = write_text(dir, "ev.labels", "1\n0\n");
  fs::path out_path = dir / "ev.spkt";
  CliResult ok = run({"convert-events", "--events", events.string(), "--labels",
                      labels.string(), "--out", out_path.string(), "--channels",
                      "4", "--bin-ms", "4"});
  REQUIRE(ok.code == 0);
  CHECK(ok.out == "out=" + out_path.string() + " samples=2 steps=3 channels=4\n");
  SpikeTensor t = load_spkt(out_path.string());
  CHECK(t.batch == 2);
  CHECK(t.labels == std::vector<std::uint32_t>{1, 0});
  CHECK(t.at(0, 0, 0) == 1.0f);  // 1000us lands in bin 0
  CHECK(t.at(0, 2, 3) == 1.0f);  // 9000us lands in bin 2

  fs::path bad = write_text(dir, "bad.txt", "1000,0\n500,9\n");
  CliResult fail = run({"convert-events", "--events", bad.string(), "--labels",
                        labels.string(), "--out", out_path.string(),
                        "--channels", "4"});
  CHECK(fail.code == 1);
  CHECK(fail.err.find("line 2") != std::string::npos);
}

TEST_CASE("a train, eval, analyze, profile workflow holds together") {
  fs::path dir = tmp_dir();
  fs::path cfg = write_text(dir, "run.cfg", tiny_config(dir));

  CliResult tr = run({"train", "--config", cfg.string()});
  REQUIRE(tr.code == 0);
  auto tr_lines = lines_of(tr.out);
  REQUIRE(tr_lines.size() == 5);  // init + 2 epoch lines + test + summary
  CHECK(tr_lines[0].rfind("epoch=0 split=init ", 0) == 0);
  CHECK(tr_lines.back().rfind("best_val_accuracy=", 0) == 0);
  CHECK(tr_lines.back().find("checkpoint=") != std::string::npos);

  // the persisted log holds exactly the metric lines
  auto logged = lines_of(
      std::string(reinterpret_cast<const char*>(slurp(dir / "train.log").data()),
                  slurp(dir / "train.log").size()));
  REQUIRE(logged.size() == 4);
  for (std::size_t i = 0; i < logged.size(); ++i) CHECK(logged[i] == tr_lines[i]);

  const std::string ckpt = (dir / "best.ckpt").string();
  CHECK(fs::exists(ckpt));

  // eval on the restored best epoch reproduces the logged val metrics exactly
  CliResult ev = run({"eval", "--config", cfg.string(), "--checkpoint", ckpt,
                      "--split", "val"});
  REQUIRE(ev.code == 0);
  CHECK(ev.out == logged[2] + "\n");

  CliResult bad_split = run({"eval", "--config", cfg.string(), "--checkpoint",
                             ckpt, "--split", "nope"});
  CHECK(bad_split.code == 1);
  CHECK(bad_split.err.find("unknown split") != std::string::npos);

  fs::path points = dir / "points.txt";
  CliResult an = run({"analyze-eigen", "--config", cfg.string(), "--checkpoint",
                      ckpt, "--points", points.string()});
  REQUIRE(an.code == 0);
  CHECK(an.out.find("model=silif layers=1") != std::string::npos);
  CHECK(an.out.find("hist lo=") != std::string::npos);
  CHECK(an.out.find("eig layer=") != std::string::npos);
  std::ifstream pf(points);
  double re = 0.0, im = 0.0;
  int rows = 0;
  while (pf >> re >> im) ++rows;
  CHECK(rows == 16);  // two eigenvalues per hidden unit

  CliResult prof = run({"profile-sops", "--config", cfg.string(),
                        "--checkpoint", ckpt, "--split", "val"});
  REQUIRE(prof.code == 0);
  CHECK(prof.out.find("projection name=") != std::string::npos);
  CHECK(prof.out.find("spiking name=") != std::string::npos);
  CHECK(prof.out.find("total sops_per_sample=") != std::string::npos);
  auto prof_lines = lines_of(prof.out);
  std::istringstream last(prof_lines.back());
  double sops = -1.0, acc = -1.0;
  REQUIRE((last >> sops >> acc));
  CHECK(sops >= 0.0);
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
}

TEST_CASE("gradcheck exits by tolerance and rejects binary spiking") {
  fs::path dir = tmp_dir();
  fs::path ok_cfg = write_text(dir, "lin.cfg",
                               "layers = 1\nhidden = 8\nseed = 2\n"
                               "spike_mode = linear\ndropout = 0\n"
                               "[data]\nclasses = 3\nchannels = 8\n"
                               "timesteps = 12\nper_class = 10\n");
  CliResult pass = run({"gradcheck", "--config", ok_cfg.string(), "--samples",
                        "4", "--per-tensor", "2"});
  CHECK(pass.code == 0);
  CHECK(pass.out.find("probe param=") != std::string::npos);
  CHECK(pass.out.find("max_rel_err=") != std::string::npos);
  CHECK(pass.out.find("tol=1e-05") != std::string::npos);

  // a coarse step breaks the central difference on a non-quadratic loss
  CliResult coarse = run({"gradcheck", "--config", ok_cfg.string(), "--loss",
                          "ce", "--h", "0.5", "--param", "readout"});
  CHECK(coarse.code == 1);

  CliResult bad_loss = run({"gradcheck", "--config", ok_cfg.string(), "--loss",
                            "huber"});
  CHECK(bad_loss.code == 1);
  CHECK(bad_loss.err.find("unknown loss") != std::string::npos);

  fs::path bin_cfg = write_text(dir, "bin.cfg",
                                "layers = 1\nhidden = 8\n"
                                "[data]\nclasses = 3\nchannels = 8\n"
                                "timesteps = 12\nper_class = 10\n");
  CliResult binary = run({"gradcheck", "--config", bin_cfg.string()});
  CHECK(binary.code == 1);
  CHECK(binary.err.rfind("error: ", 0) == 0);
}
