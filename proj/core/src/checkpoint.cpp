#include "recode/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace recode::checkpoint {

namespace {

static_assert(std::endian::native == std::endian::little || true,
              "explicit little-endian encoding below");

template <typename T>
void write_le(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (sizeof(T) > 1) {
    if (std::endian::native == std::endian::big) {
      for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    }
  }
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  is.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  if constexpr (sizeof(T) > 1) {
    if (std::endian::native == std::endian::big) {
      for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    }
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void save(const std::string& path, const policy::PolicyParams& params, std::uint64_t digest) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  os.write("RCD1", 4);
  write_le<std::uint32_t>(os, kFormatVersion);
  write_le<std::uint64_t>(os, digest);
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.tensors.size()));
  for (const auto& t : params.tensors) {
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.name.size()));
    os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) write_le<std::uint64_t>(os, static_cast<std::uint64_t>(d));
    for (Eigen::Index i = 0; i < t.values.size(); ++i) write_le<double>(os, t.values(i));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

Loaded load(const std::string& path, std::uint64_t expected_digest) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "RCD1", 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  const auto version = read_le<std::uint32_t>(is);
  if (version != kFormatVersion) throw std::runtime_error("checkpoint: unsupported version");

  Loaded loaded;
  loaded.digest = read_le<std::uint64_t>(is);
  if (expected_digest != 0 && loaded.digest != expected_digest) {
    throw std::runtime_error("checkpoint: architecture digest mismatch");
  }
  const auto count = read_le<std::uint32_t>(is);
  loaded.params.tensors.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    policy::NamedTensor t;
    const auto name_len = read_le<std::uint32_t>(is);
    t.name.resize(name_len);
    is.read(t.name.data(), name_len);
    const auto rank = read_le<std::uint32_t>(is);
    std::uint64_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const auto dim = read_le<std::uint64_t>(is);
      t.shape.push_back(static_cast<int>(dim));
      n *= dim;
    }
    t.values.resize(static_cast<Eigen::Index>(n));
    for (std::uint64_t i = 0; i < n; ++i) {
      t.values(static_cast<Eigen::Index>(i)) = read_le<double>(is);
    }
    loaded.params.tensors.push_back(std::move(t));
  }
  return loaded;
}

}  // namespace recode::checkpoint
