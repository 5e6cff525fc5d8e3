#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "byteio.hpp"
#include "doctest.h"
#include "json.hpp"
#include "silif/spikes.hpp"

using namespace silif;
namespace fs = std::filesystem;

namespace {

fs::path tmp_path(const char* name) {
  return fs::temp_directory_path() / (std::string("silif_test_") + name);
}

SpikeTensor small_tensor() {
  SpikeTensor t;
  t.batch = 2;
  t.steps = 3;
  t.channels = 4;
  t.values.assign(static_cast<std::size_t>(2 * 3 * 4), 0.0f);
  t.at(0, 0, 1) = 1.0f;
  t.at(0, 2, 3) = 1.0f;
  t.at(1, 1, 0) = 1.0f;
  t.labels = {1, 0};
  t.meta = "{\"k\":1}";
  return t;
}

}  // namespace

TEST_CASE("spkt round trip preserves every field") {
  const auto path = tmp_path("rt.spkt");
  SpikeTensor t = small_tensor();
  save_spkt(t, path);
  SpikeTensor r = load_spkt(path);
  CHECK(r.batch == t.batch);
  CHECK(r.steps == t.steps);
  CHECK(r.channels == t.channels);
  CHECK(r.binary == t.binary);
  CHECK(r.values == t.values);
  CHECK(r.labels == t.labels);
  CHECK(r.meta == t.meta);
  // a second save of the loaded tensor must be byte-identical to the first
  const auto path2 = tmp_path("rt2.spkt");
  save_spkt(r, path2);
  CHECK(byteio::read_file(path) == byteio::read_file(path2));
}

TEST_CASE("spkt float tensor round trip") {
  const auto path = tmp_path("f32.spkt");
  SpikeTensor t = small_tensor();
  t.binary = false;
  t.values[0] = 0.25f;
  t.values[5] = -1.5f;
  save_spkt(t, path);
  SpikeTensor r = load_spkt(path);
  CHECK_FALSE(r.binary);
  CHECK(r.values == t.values);
}

TEST_CASE("save_spkt validates its tensor") {
  const auto path = tmp_path("bad.spkt");
  SpikeTensor t = small_tensor();
  t.values.pop_back();
  CHECK_THROWS_AS(save_spkt(t, path), ShapeError);
  t = small_tensor();
  t.labels.push_back(2);
  CHECK_THROWS_AS(save_spkt(t, path), ShapeError);
  t = small_tensor();
  t.values[3] = 0.5f;  // binary tensor must hold only {0, 1}
  CHECK_THROWS_AS(save_spkt(t, path), DataError);
}

TEST_CASE("a hand-assembled spkt file decodes as documented") {
  // 1 sample, 2 steps, 2 channels, spike at (t=1, c=0), label 3, no meta
  std::vector<std::uint8_t> bytes;
  byteio::put_bytes(bytes, "SPKT", 4);
  byteio::put_u32(bytes, 1);   // version
  byteio::put_u8(bytes, 0);    // binary dtype
  byteio::put_u8(bytes, 3);    // ndim
  byteio::put_u64(bytes, 1);
  byteio::put_u64(bytes, 2);
  byteio::put_u64(bytes, 2);
  byteio::put_u8(bytes, 0);    // (0,0)
  byteio::put_u8(bytes, 0);    // (0,1)
  byteio::put_u8(bytes, 1);    // (1,0)
  byteio::put_u8(bytes, 0);    // (1,1)
  byteio::put_u64(bytes, 1);   // label count
  byteio::put_u32(bytes, 3);
  byteio::put_u64(bytes, 0);   // meta length
  const auto path = tmp_path("hand.spkt");
  byteio::write_file(path, bytes);
  SpikeTensor t = load_spkt(path);
  CHECK(t.batch == 1);
  CHECK(t.steps == 2);
  CHECK(t.channels == 2);
  CHECK(t.at(0, 0, 0) == 0.0f);
  CHECK(t.at(0, 1, 0) == 1.0f);
  CHECK(t.labels == std::vector<std::uint32_t>{3});
  CHECK(t.meta.empty());
}

TEST_CASE("corrupted spkt files raise format errors, never partial tensors") {
  const auto good_path = tmp_path("good.spkt");
  save_spkt(small_tensor(), good_path);
  const auto good = byteio::read_file(good_path);
  const auto bad_path = tmp_path("corrupt.spkt");

  auto expect_format_error = [&](std::vector<std::uint8_t> bytes) {
    byteio::write_file(bad_path, bytes);
    CHECK_THROWS_AS(load_spkt(bad_path), FormatError);
  };

  SUBCASE("bad magic") {
    auto b = good;
    b[0] = 'X';
    expect_format_error(b);
  }
  SUBCASE("unsupported version") {
    auto b = good;
    b[4] = 2;
    expect_format_error(b);
  }
  SUBCASE("unknown dtype") {
    auto b = good;
    b[8] = 7;
    expect_format_error(b);
  }
  SUBCASE("wrong rank") {
    auto b = good;
    b[9] = 2;
    expect_format_error(b);
  }
  SUBCASE("truncated header") {
    auto b = good;
    b.resize(20);
    expect_format_error(b);
  }
  SUBCASE("truncated payload") {
    auto b = good;
    b.resize(b.size() - 1);
    expect_format_error(b);
  }
  SUBCASE("trailing bytes") {
    auto b = good;
    b.push_back(0);
    expect_format_error(b);
  }
  SUBCASE("binary payload byte outside {0, 1}") {
    auto b = good;
    b[34] = 2;  // first payload byte sits right after the 34-byte header
    expect_format_error(b);
  }
  SUBCASE("label count disagrees with the batch dim") {
    auto b = good;
    b[34 + 24] = 9;  // label count u64 follows the 24-byte payload
    expect_format_error(b);
  }
  SUBCASE("implausible dims") {
    auto b = good;
    for (int i = 0; i < 8; ++i) b[10 + i] = 0xff;  // batch dim
    expect_format_error(b);
  }
  SUBCASE("truncation messages carry the byte offset") {
    auto b = good;
    b.resize(9);
    byteio::write_file(bad_path, b);
    try {
      load_spkt(bad_path);
      FAIL("expected a FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }
  }
}

TEST_CASE("event text parses samples split on blank lines") {
  std::istringstream in("0,1\n3000,2\n\n10,0\n");
  auto samples = parse_event_text(in, 4);
  REQUIRE(samples.size() == 2);
  REQUIRE(samples[0].events.size() == 2);
  CHECK(samples[0].events[0] == std::pair<std::uint64_t, std::uint32_t>{0, 1});
  CHECK(samples[0].events[1] == std::pair<std::uint64_t, std::uint32_t>{3000, 2});
  REQUIRE(samples[1].events.size() == 1);
  CHECK(samples[1].events[0].second == 0);
}

TEST_CASE("event text handles crlf and multiple blank separators") {
  std::istringstream in("5,0\r\n\r\n\r\n7,1\r\n");
  auto samples = parse_event_text(in, 2);
  REQUIRE(samples.size() == 2);
  CHECK(samples[0].events[0].first == 5);
  CHECK(samples[1].events[0].second == 1);
}

TEST_CASE("event text rejects malformed lines with their line number") {
  auto expect_error = [](const char* text, const char* needle) {
    std::istringstream in(text);
    try {
      parse_event_text(in, 4);
      FAIL_CHECK("expected a DataError for ", text);
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_error("0,1\nnocomma\n", "line 2");
  expect_error("0,1x\n", "channel");
  expect_error("-3,1\n", "timestamp");
  expect_error("0,9\n", "channel 9 >= declared 4");
  expect_error("5,1\n3,1\n", "nondecreasing");
}

TEST_CASE("timestamps may reset between samples") {
  std::istringstream in("100,0\n\n5,0\n");
  auto samples = parse_event_text(in, 1);
  CHECK(samples.size() == 2);
}

TEST_CASE("label text parses one id per line") {
  std::istringstream in("1\n0\n\n3\n");
  CHECK(parse_labels_text(in) == std::vector<std::uint32_t>{1, 0, 3});
  std::istringstream bad("1\nx\n");
  CHECK_THROWS_AS(parse_labels_text(bad), DataError);
}

TEST_CASE("binning pools 700 raw channels into 140 by block or") {
  std::vector<EventStream> samples(1);
  // two events in the same bin and pooled block collapse to a single 1
  samples[0].events = {{0, 0}, {100, 4}, {100, 699}};
  SpikeTensor t = bin_events(samples, {0}, 4.0, 5, 700);
  CHECK(t.channels == 140);
  CHECK(t.steps == 1);
  CHECK(t.at(0, 0, 0) == 1.0f);
  CHECK(t.at(0, 0, 139) == 1.0f);
  float total = 0.0f;
  for (float v : t.values) total += v;
  CHECK(total == 2.0f);  // or semantics, not addition
}

TEST_CASE("bin index is floor(t / bin) and the axis covers the longest sample") {
  std::vector<EventStream> samples(2);
  samples[0].events = {{3999, 0}, {4000, 0}, {8000, 1}};
  samples[1].events = {{0, 1}};
  SpikeTensor t = bin_events(samples, {0, 1}, 4.0, 1, 2);
  CHECK(t.steps == 3);  // floor(8000/4000) = 2, plus one
  CHECK(t.at(0, 0, 0) == 1.0f);
  CHECK(t.at(0, 1, 0) == 1.0f);
  CHECK(t.at(0, 2, 1) == 1.0f);
  CHECK(t.at(1, 0, 1) == 1.0f);
  // the short sample is zero beyond its own extent
  CHECK(t.at(1, 1, 1) == 0.0f);
  CHECK(t.at(1, 2, 1) == 0.0f);
  // true per-sample bin counts are recorded in the meta
  auto meta = nlohmann::json::parse(t.meta);
  CHECK(meta["lengths"] == std::vector<std::int64_t>{3, 1});
  CHECK(meta["bin_ms"] == 4.0);
}

TEST_CASE("binning validates its arguments") {
  std::vector<EventStream> one(1);
  one[0].events = {{0, 0}};
  CHECK_THROWS_AS(bin_events(one, {0}, 0.0, 1, 4), ParameterRangeError);
  CHECK_THROWS_AS(bin_events(one, {0}, 4.0, 0, 4), ParameterRangeError);
  CHECK_THROWS_AS(bin_events(one, {0}, 4.0, 3, 4), ParameterRangeError);  // 3 !| 4
  CHECK_THROWS_AS(bin_events(one, {0, 1}, 4.0, 1, 4), DataError);  // label count
}

TEST_CASE("an all-empty corpus still yields one well-formed step") {
  std::vector<EventStream> samples(2);
  SpikeTensor t = bin_events(samples, {0, 1}, 4.0, 1, 4);
  CHECK(t.steps == 1);
  CHECK(t.batch == 2);
  for (float v : t.values) CHECK(v == 0.0f);
}

TEST_CASE("synthetic task is deterministic in (spec, seed)") {
  SynthTaskSpec spec;
  spec.classes = 4;
  spec.per_class = 10;
  spec.channels = 16;
  spec.timesteps = 20;
  SynthData a = gen_synthetic(spec, 99);
  SynthData b = gen_synthetic(spec, 99);
  CHECK(a.train.values == b.train.values);
  CHECK(a.val.values == b.val.values);
  CHECK(a.test.values == b.test.values);
  CHECK(a.train.labels == b.train.labels);
  CHECK(a.templates.values == b.templates.values);
  SynthData c = gen_synthetic(spec, 100);
  CHECK(a.train.values != c.train.values);
}

TEST_CASE("splits are 70/15/15 per class and labels are class-major") {
  SynthTaskSpec spec;
  spec.classes = 3;
  spec.per_class = 20;  // 14 / 3 / 3
  SynthData d = gen_synthetic(spec, 0);
  CHECK(d.train.batch == 3 * 14);
  CHECK(d.val.batch == 3 * 3);
  CHECK(d.test.batch == 3 * 3);
  for (int cls = 0; cls < 3; ++cls)
    for (int k = 0; k < 14; ++k)
      CHECK(d.train.labels[static_cast<std::size_t>(cls * 14 + k)] ==
            static_cast<std::uint32_t>(cls));
}

TEST_CASE("zero jitter and zero drop reproduce the template exactly") {
  SynthTaskSpec spec;
  spec.classes = 3;
  spec.per_class = 7;
  spec.jitter = 0;
  spec.drop_prob = 0.0;
  SynthData d = gen_synthetic(spec, 5);
  const int n_tr = 7 * 70 / 100;  // 4
  for (int cls = 0; cls < 3; ++cls)
    for (int k = 0; k < n_tr; ++k)
      for (Eigen::Index t = 0; t < d.train.steps; ++t)
        for (Eigen::Index c = 0; c < d.train.channels; ++c)
          CHECK(d.train.at(cls * n_tr + k, t, c) == d.templates.at(cls, t, c));
}

TEST_CASE("full drop silences every sample") {
  SynthTaskSpec spec;
  spec.classes = 2;
  spec.per_class = 5;
  spec.drop_prob = 1.0;
  SynthData d = gen_synthetic(spec, 5);
  for (float v : d.train.values) CHECK(v == 0.0f);
  for (float v : d.test.values) CHECK(v == 0.0f);
}

TEST_CASE("nearest-template hamming classification clears 95 percent") {
  SynthTaskSpec spec;  // default noise: jitter 2, drop 0.2
  spec.per_class = 20;
  SynthData d = gen_synthetic(spec, 0);
  const std::size_t dim =
      static_cast<std::size_t>(spec.timesteps) * spec.channels;
  int correct = 0;
  for (Eigen::Index i = 0; i < d.train.batch; ++i) {
    int best_cls = -1;
    std::size_t best_dist = dim + 1;
    for (int cls = 0; cls < spec.classes; ++cls) {
      std::size_t dist = 0;
      for (std::size_t j = 0; j < dim; ++j)
        dist += d.train.values[static_cast<std::size_t>(i) * dim + j] !=
                d.templates.values[static_cast<std::size_t>(cls) * dim + j];
      if (dist < best_dist) {
        best_dist = dist;
        best_cls = cls;
      }
    }
    correct += best_cls == static_cast<int>(d.train.labels[static_cast<std::size_t>(i)]);
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(d.train.batch) >= 0.95);
}

TEST_CASE("synthetic task rejects out-of-range knobs") {
  SynthTaskSpec spec;
  spec.classes = 0;
  CHECK_THROWS_AS(gen_synthetic(spec, 0), ParameterRangeError);
  spec = {};
  spec.template_rate = 1.5;
  CHECK_THROWS_AS(gen_synthetic(spec, 0), ParameterRangeError);
  spec = {};
  spec.jitter = -1;
  CHECK_THROWS_AS(gen_synthetic(spec, 0), ParameterRangeError);
  spec = {};
  spec.drop_prob = -0.1;
  CHECK_THROWS_AS(gen_synthetic(spec, 0), ParameterRangeError);
}
