// spkt codec: magic "SPKT", version u32, dtype u8 (0 = u8 binary, 1 = f32),
// ndim u8, dims as u64 each, row-major payload, label block (count u64 then
// u32 ids), length-prefixed utf-8 metadata. everything little-endian.

#include <cstdio>
#include <fstream>

#include "byteio.hpp"
#include "silif/spikes.hpp"

namespace silif {

namespace {
constexpr char kMagic[4] = {'S', 'P', 'K', 'T'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

namespace byteio {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::filesystem::path& path,
                const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path.string());
}

}  // namespace byteio

void save_spkt(const SpikeTensor& t, const std::filesystem::path& path) {
  const std::size_t n =
      static_cast<std::size_t>(t.batch) * static_cast<std::size_t>(t.steps) *
      static_cast<std::size_t>(t.channels);
  if (t.values.size() != n) throw ShapeError("save_spkt: values size != batch*steps*channels");
  if (t.labels.size() != static_cast<std::size_t>(t.batch))
    throw ShapeError("save_spkt: labels size != batch");

  std::vector<std::uint8_t> out;
  out.reserve(64 + n * (t.binary ? 1 : 4) + t.labels.size() * 4 + t.meta.size());
  byteio::put_bytes(out, kMagic, 4);
  byteio::put_u32(out, kVersion);
  byteio::put_u8(out, t.binary ? 0 : 1);
  byteio::put_u8(out, 3);
  byteio::put_u64(out, static_cast<std::uint64_t>(t.batch));
  byteio::put_u64(out, static_cast<std::uint64_t>(t.steps));
  byteio::put_u64(out, static_cast<std::uint64_t>(t.channels));
  if (t.binary) {
    for (float v : t.values) {
      if (v != 0.0f && v != 1.0f)
        throw DataError("save_spkt: binary tensor holds a value outside {0, 1}");
      byteio::put_u8(out, v != 0.0f ? 1 : 0);
    }
  } else {
    for (float v : t.values) byteio::put_f32(out, v);
  }
  byteio::put_u64(out, static_cast<std::uint64_t>(t.labels.size()));
  for (std::uint32_t id : t.labels) byteio::put_u32(out, id);
  byteio::put_u64(out, static_cast<std::uint64_t>(t.meta.size()));
  byteio::put_bytes(out, t.meta.data(), t.meta.size());
  byteio::write_file(path, out);
}

SpikeTensor load_spkt(const std::filesystem::path& path) {
  const auto bytes = byteio::read_file(path);
  byteio::Reader r(bytes.data(), bytes.size(), "spkt " + path.string());

  const std::string magic = r.bytes(4);
  if (magic != std::string(kMagic, 4)) r.fail("bad magic");
  const std::uint32_t version = r.u32();
  if (version != kVersion) r.fail("unsupported version " + std::to_string(version));
  const std::uint8_t dtype = r.u8();
  if (dtype > 1) r.fail("unknown dtype code " + std::to_string(dtype));
  const std::uint8_t ndim = r.u8();
  if (ndim != 3) r.fail("expected 3 dims (batch, time, channel), got " + std::to_string(ndim));

  SpikeTensor t;
  t.binary = dtype == 0;
  const std::uint64_t b = r.u64(), s = r.u64(), c = r.u64();
  if (static_cast<unsigned __int128>(b) * s * c > (1ull << 40))
    r.fail("implausible dims");
  t.batch = static_cast<Eigen::Index>(b);
  t.steps = static_cast<Eigen::Index>(s);
  t.channels = static_cast<Eigen::Index>(c);

  const std::size_t n = static_cast<std::size_t>(b * s * c);
  t.values.resize(n);
  if (t.binary) {
    const std::uint8_t* p = r.raw(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (p[i] > 1) r.fail("binary payload byte > 1");
      t.values[i] = static_cast<float>(p[i]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) t.values[i] = r.f32();
  }

  const std::uint64_t label_count = r.u64();
  if (label_count != b) r.fail("label count != batch dim");
  t.labels.resize(label_count);
  for (auto& id : t.labels) id = r.u32();

  const std::uint64_t meta_len = r.u64();
  t.meta = r.bytes(meta_len);
  if (!r.at_end()) r.fail("trailing bytes");
  return t;
}

}  // namespace silif
