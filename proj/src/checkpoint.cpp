#include "silif/checkpoint.hpp"

#include "byteio.hpp"

namespace silif {

namespace {
constexpr char kMagic[4] = {'S', 'L', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_slck(const std::string& path, const std::vector<TensorEntry>& entries) {
  std::vector<std::uint8_t> buf;
  byteio::put_bytes(buf, kMagic, 4);
  byteio::put_u32(buf, kVersion);
  for (const auto& e : entries) {
    if (e.name.empty()) throw FormatError("checkpoint entry with empty name");
    byteio::put_u32(buf, static_cast<std::uint32_t>(e.name.size()));
    byteio::put_bytes(buf, e.name.data(), e.name.size());
    byteio::put_u8(buf, e.dtype);
    byteio::put_u8(buf, static_cast<std::uint8_t>(e.dims.size()));
    for (auto d : e.dims) byteio::put_u64(buf, d);
    if (e.data.size() != e.count() * dtype_size(e.dtype))
      throw FormatError("checkpoint entry " + e.name + " payload size mismatch");
    byteio::put_bytes(buf, e.data.data(), e.data.size());
  }
  byteio::write_file(path, buf);
}

std::vector<TensorEntry> load_slck(const std::string& path) {
  const std::vector<std::uint8_t> buf = byteio::read_file(path);
  byteio::Reader r(buf.data(), buf.size(), path);
  if (std::memcmp(r.raw(4), kMagic, 4) != 0) r.fail("bad magic, expected SLCK");
  const std::uint32_t version = r.u32();
  if (version != kVersion) r.fail("unsupported version " + std::to_string(version));
  std::vector<TensorEntry> entries;
  while (!r.at_end()) {
    TensorEntry e;
    const std::uint32_t name_len = r.u32();
    if (name_len == 0 || name_len > 4096) r.fail("implausible name length");
    e.name = r.bytes(name_len);
    e.dtype = r.u8();
    dtype_size(e.dtype);
    const std::uint8_t ndim = r.u8();
    std::uint64_t n = 1;
    for (std::uint8_t i = 0; i < ndim; ++i) {
      const std::uint64_t d = r.u64();
      if (d > (1ull << 40) || n * d > (1ull << 40)) r.fail("implausible dims");
      e.dims.push_back(d);
      n *= d;
    }
    const auto bytes = static_cast<std::size_t>(n * dtype_size(e.dtype));
    const std::uint8_t* p = r.raw(bytes);
    e.data.assign(p, p + bytes);
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace silif
