#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace finflow {

// Little-endian binary writer/reader for the dataset and checkpoint formats.
// All multi-byte values are written least-significant byte first.

class BinWriter {
 public:
  explicit BinWriter(const std::string& path)
      : owned_(std::make_unique<std::ofstream>(
            path, std::ios::binary | std::ios::trunc)),
        out_(*owned_) {
    if (!out_) throw std::runtime_error("cannot open for write: " + path);
  }
  explicit BinWriter(std::ostream& out) : out_(out) {}

  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    raw(b, 4);
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    raw(b, 8);
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void vec(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void eigen(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) f64(m(r, c));
  }
  void raw(const void* data, std::size_t len) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
    if (!out_) throw std::runtime_error("write failed");
  }

 private:
  std::unique_ptr<std::ofstream> owned_;
  std::ostream& out_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path)
      : owned_(std::make_unique<std::ifstream>(path, std::ios::binary)),
        in_(*owned_) {
    if (!in_) throw std::runtime_error("cannot open for read: " + path);
  }
  explicit BinReader(std::istream& in) : in_(in) {}

  std::uint32_t u32() {
    unsigned char b[4];
    raw(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    raw(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str() {
    std::uint64_t n = u64();
    std::string s(n, '\0');
    if (n) raw(s.data(), n);
    return s;
  }
  std::vector<double> vec() {
    std::uint64_t n = u64();
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  Eigen::MatrixXd eigen() {
    const auto rows = static_cast<Eigen::Index>(u64());
    const auto cols = static_cast<Eigen::Index>(u64());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = f64();
    return m;
  }
  void raw(void* data, std::size_t len) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
    if (static_cast<std::size_t>(in_.gcount()) != len)
      throw std::runtime_error("unexpected end of file");
  }
  bool at_eof() {
    return in_.peek() == std::char_traits<char>::eof();
  }

 private:
  std::unique_ptr<std::ifstream> owned_;
  std::istream& in_;
};

}  // namespace finflow
