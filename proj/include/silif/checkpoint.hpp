#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "silif/errors.hpp"

// checkpoint container: magic "SLCK", version u32, then named tensors until
// end of file. each entry is [u32 name length][name][u8 dtype][u8 ndim]
// [u64 dims...] [little-endian payload]. dtype codes: 0 u8, 1 f32, 2 f64,
// 3 u64, 4 i64.

namespace silif {

struct TensorEntry {
  std::string name;
  std::uint8_t dtype = 2;
  std::vector<std::uint64_t> dims;
  std::vector<unsigned char> data;

  std::uint64_t count() const {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

inline std::size_t dtype_size(std::uint8_t code) {
  switch (code) {
    case 0: return 1;
    case 1: return 4;
    case 2: return 8;
    case 3: return 8;
    case 4: return 8;
  }
  throw FormatError("unknown dtype code " + std::to_string(code));
}

void save_slck(const std::string& path, const std::vector<TensorEntry>& entries);
std::vector<TensorEntry> load_slck(const std::string& path);

template <typename T>
constexpr std::uint8_t dtype_code() {
  if constexpr (std::is_same_v<T, unsigned char>) return 0;
  if constexpr (std::is_same_v<T, float>) return 1;
  if constexpr (std::is_same_v<T, double>) return 2;
  if constexpr (std::is_same_v<T, std::uint64_t>) return 3;
  if constexpr (std::is_same_v<T, std::int64_t>) return 4;
}

template <typename T>
TensorEntry make_entry(const std::string& name, const T* values, std::uint64_t n) {
  TensorEntry e;
  e.name = name;
  e.dtype = dtype_code<T>();
  e.dims = {n};
  e.data.resize(static_cast<std::size_t>(n) * sizeof(T));
  std::memcpy(e.data.data(), values, e.data.size());
  return e;
}

template <typename T>
TensorEntry make_scalar(const std::string& name, T value) {
  return make_entry(name, &value, 1);
}

template <typename T>
void read_entry(const TensorEntry& e, T* out, std::uint64_t n) {
  if (e.dtype != dtype_code<T>())
    throw FormatError("checkpoint entry " + e.name + " has dtype " +
                      std::to_string(e.dtype) + ", expected " +
                      std::to_string(dtype_code<T>()));
  if (e.count() != n)
    throw FormatError("checkpoint entry " + e.name + " has " +
                      std::to_string(e.count()) + " values, expected " +
                      std::to_string(n));
  std::memcpy(out, e.data.data(), static_cast<std::size_t>(n) * sizeof(T));
}

}  // namespace silif
