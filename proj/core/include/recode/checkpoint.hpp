#pragma once

#include "recode/policy.hpp"

#include <cstdint>
#include <string>

namespace recode::checkpoint {

/// On-disk layout (all integers and reals little-endian):
///   magic "RCD1"
///   u32   format version (1)
///   u64   architecture config digest
///   u32   tensor count
///   per tensor: u32 name length, name bytes, u32 rank, u64 dims..., f64 values
/// Round-trips are bit-exact.
constexpr std::uint32_t kFormatVersion = 1;

void save(const std::string& path, const policy::PolicyParams& params, std::uint64_t digest);

struct Loaded {
  policy::PolicyParams params;
  std::uint64_t digest = 0;
};

/// Throws std::runtime_error on malformed files; when expected_digest is
/// nonzero a digest mismatch is an error.
Loaded load(const std::string& path, std::uint64_t expected_digest = 0);

}  // namespace recode::checkpoint
