#include <charconv>
#include <cmath>
#include <string>

#include "json.hpp"
#include "silif/spikes.hpp"

namespace silif {

namespace {

// strict unsigned integer field; rejects signs, blanks and trailing junk
std::uint64_t parse_uint(const std::string& field, std::size_t line_no,
                         const char* what) {
  std::uint64_t v = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || field.empty())
    throw DataError("events line " + std::to_string(line_no) + ": bad " + what +
                    " '" + field + "'");
  return v;
}

}  // namespace

std::vector<EventStream> parse_event_text(std::istream& in,
                                          std::uint32_t declared_channels) {
  std::vector<EventStream> samples;
  EventStream cur;
  bool open = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (open) {
        samples.push_back(std::move(cur));
        cur = {};
        open = false;
      }
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw DataError("events line " + std::to_string(line_no) +
                      ": expected 't_us,channel'");
    const std::uint64_t t = parse_uint(line.substr(0, comma), line_no, "timestamp");
    const std::uint64_t c = parse_uint(line.substr(comma + 1), line_no, "channel");
    if (c >= declared_channels)
      throw DataError("events line " + std::to_string(line_no) + ": channel " +
                      std::to_string(c) + " >= declared " +
                      std::to_string(declared_channels));
    if (open && !cur.events.empty() && t < cur.events.back().first)
      throw DataError("events line " + std::to_string(line_no) +
                      ": timestamps must be nondecreasing within a sample");
    cur.events.emplace_back(t, static_cast<std::uint32_t>(c));
    open = true;
  }
  if (open) samples.push_back(std::move(cur));
  return samples;
}

std::vector<std::uint32_t> parse_labels_text(std::istream& in) {
  std::vector<std::uint32_t> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    labels.push_back(
        static_cast<std::uint32_t>(parse_uint(line, line_no, "label")));
  }
  return labels;
}

SpikeTensor bin_events(const std::vector<EventStream>& samples,
                       const std::vector<std::uint32_t>& labels, double bin_ms,
                       int pool_factor, std::uint32_t raw_channels) {
  if (!(bin_ms > 0.0)) throw ParameterRangeError("bin_events: bin_ms must be > 0");
  if (pool_factor < 1) throw ParameterRangeError("bin_events: pool_factor must be >= 1");
  if (raw_channels == 0 || raw_channels % static_cast<std::uint32_t>(pool_factor) != 0)
    throw ParameterRangeError("bin_events: pool_factor must divide channel count");
  if (labels.size() != samples.size())
    throw DataError("bin_events: " + std::to_string(labels.size()) + " labels for " +
                    std::to_string(samples.size()) + " samples");

  const double bin_us = bin_ms * 1000.0;
  std::vector<Eigen::Index> lengths(samples.size(), 0);
  Eigen::Index steps = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& ev = samples[i].events;
    if (!ev.empty()) {
      lengths[i] = static_cast<Eigen::Index>(
                       std::floor(static_cast<double>(ev.back().first) / bin_us)) +
                   1;
      steps = std::max(steps, lengths[i]);
    }
  }
  if (steps == 0) steps = 1;  // all-empty corpus still gets a well-formed axis

  SpikeTensor t;
  t.batch = static_cast<Eigen::Index>(samples.size());
  t.steps = steps;
  t.channels = static_cast<Eigen::Index>(raw_channels) / pool_factor;
  t.values.assign(static_cast<std::size_t>(t.batch * t.steps * t.channels), 0.0f);
  t.labels = labels;
  t.binary = true;

  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (const auto& [t_us, ch] : samples[i].events) {
      if (ch >= raw_channels)
        throw DataError("bin_events: channel " + std::to_string(ch) +
                        " >= declared " + std::to_string(raw_channels));
      const auto bin = static_cast<Eigen::Index>(
          std::floor(static_cast<double>(t_us) / bin_us));
      t.at(static_cast<Eigen::Index>(i), bin,
           static_cast<Eigen::Index>(ch) / pool_factor) = 1.0f;  // block OR
    }
  }

  nlohmann::json meta;
  meta["bin_ms"] = bin_ms;
  meta["pool_factor"] = pool_factor;
  meta["raw_channels"] = raw_channels;
  meta["lengths"] = std::vector<std::int64_t>(lengths.begin(), lengths.end());
  t.meta = meta.dump();
  return t;
}

}  // namespace silif
