#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace nudgerom {

/// Incremental FNV-1a 64-bit hash used for config/artifact provenance.
class Fnv1a {
 public:
  Fnv1a& bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ull;
    }
    return *this;
  }
  Fnv1a& add(double v) { return bytes(&v, sizeof(v)); }
  Fnv1a& add(std::uint64_t v) { return bytes(&v, sizeof(v)); }
  Fnv1a& add(std::int64_t v) { return bytes(&v, sizeof(v)); }
  Fnv1a& add(int v) { return add(static_cast<std::int64_t>(v)); }
  Fnv1a& add(const std::string& s) {
    add(static_cast<std::uint64_t>(s.size()));
    return bytes(s.data(), s.size());
  }
  Fnv1a& add(const std::vector<double>& v) {
    add(static_cast<std::uint64_t>(v.size()));
    return bytes(v.data(), v.size() * sizeof(double));
  }

  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

std::string hash_hex(std::uint64_t h);

}  // namespace nudgerom
