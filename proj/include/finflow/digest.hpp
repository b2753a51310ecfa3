#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace finflow {

// Streaming SHA-256 (OpenSSL EVP under the hood). Used for dataset content
// hashes, checkpoint config hashes and the frozen-parameter freeze contract.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t len);
  void update_f64(double v);
  void update_u64(std::uint64_t v);
  void update_str(const std::string& s);

  std::array<std::uint8_t, 32> finish();
  std::string finish_hex();

 private:
  void* ctx_;
};

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex_of_file(const std::string& path);

}  // namespace finflow
