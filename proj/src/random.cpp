#include "layoutinstruct/random.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

namespace layoutinstruct {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view doc_id,
                          std::string_view task, std::uint64_t variant) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  h = fnv1a(h, doc_id);
  h = fnv1a(h, std::string_view("\x1f", 1));
  h = fnv1a(h, task);
  h = splitmix64(h ^ splitmix64(global_seed));
  return splitmix64(h ^ splitmix64(variant + 1));
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xF];
  }
  return out;
}

}  // namespace layoutinstruct
