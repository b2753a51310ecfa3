#include "finflow/meanflow/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "finflow/digest.hpp"
#include "finflow/io.hpp"

namespace finflow::meanflow {

namespace {
constexpr std::uint32_t kMagic = 0x4b434646;  // "FFCK"
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kKindMeanFlow = 0;
}  // namespace

namespace detail {

void write_dense(BinWriter& w, const net::DenseLayer& l) {
  w.str(net::activation_name(l.act));
  w.eigen(l.w);
  w.eigen(l.b);
}

net::DenseLayer read_dense(BinReader& r) {
  net::DenseLayer l;
  l.act = net::activation_from_name(r.str());
  l.w = r.eigen();
  l.b = r.eigen();
  return l;
}

void write_mlp(BinWriter& w, const net::Mlp& mlp) {
  w.u64(mlp.layers.size());
  for (const auto& l : mlp.layers) write_dense(w, l);
}

net::Mlp read_mlp(BinReader& r) {
  net::Mlp mlp;
  mlp.layers.resize(r.u64());
  for (auto& l : mlp.layers) l = read_dense(r);
  return mlp;
}

void write_normalizer(BinWriter& w, const Normalizer& n) {
  w.eigen(n.mean);
  w.eigen(n.std);
}

Normalizer read_normalizer(BinReader& r) {
  Normalizer n;
  n.mean = r.eigen();
  n.std = r.eigen();
  return n;
}

void write_hashed_file(const std::string& path, const std::string& body) {
  Sha256 h;
  h.update(body.data(), body.size());
  const auto digest = h.finish();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  out.write(reinterpret_cast<const char*>(digest.data()),
            static_cast<std::streamsize>(digest.size()));
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

std::string read_hashed_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < 32) throw std::runtime_error("checkpoint: truncated file");
  const std::string body = bytes.substr(0, bytes.size() - 32);
  const std::string stored = bytes.substr(bytes.size() - 32);
  Sha256 h;
  h.update(body.data(), body.size());
  const auto digest = h.finish();
  if (!std::equal(digest.begin(), digest.end(),
                  reinterpret_cast<const unsigned char*>(stored.data())))
    throw std::runtime_error("checkpoint: file hash mismatch");
  return body;
}

}  // namespace detail

void save_meanflow(const MeanFlowNet& net, const std::string& path) {
  std::ostringstream buf(std::ios::binary);
  BinWriter w(buf);
  w.u32(kMagic);
  w.u32(kVersion);
  w.u32(kKindMeanFlow);
  w.u32(static_cast<std::uint32_t>(net.cfg.chunk.t_obs));
  w.u32(static_cast<std::uint32_t>(net.cfg.chunk.t_pred));
  w.u32(static_cast<std::uint32_t>(net.cfg.chunk.t_exec));
  w.u32(static_cast<std::uint32_t>(net.cfg.obs_dim));
  w.u64(net.cfg.hidden.size());
  for (int h : net.cfg.hidden) w.u32(static_cast<std::uint32_t>(h));
  w.u32(static_cast<std::uint32_t>(net.cfg.cond_hidden));
  w.str(net::activation_name(net.cfg.activation));
  w.f64(net.cfg.spread_clip);
  w.str(net.config_hash());

  w.u64(net.body.trunk.size());
  for (const auto& l : net.body.trunk) detail::write_dense(w, l);
  w.u64(net.body.films.size());
  for (const auto& f : net.body.films) detail::write_mlp(w, f.conditioner);
  detail::write_normalizer(w, net.obs_norm);
  detail::write_normalizer(w, net.act_norm);

  detail::write_hashed_file(path, buf.str());
}

MeanFlowNet load_meanflow(const std::string& path) {
  const std::string body = detail::read_hashed_file(path);
  std::istringstream in(body, std::ios::binary);
  BinReader r(in);
  if (r.u32() != kMagic) throw std::runtime_error("checkpoint: bad magic");
  if (r.u32() != kVersion)
    throw std::runtime_error("checkpoint: unsupported version");
  if (r.u32() != kKindMeanFlow)
    throw std::runtime_error("checkpoint: not a meanflow checkpoint");

  MeanFlowNet net;
  net.cfg.chunk.t_obs = static_cast<int>(r.u32());
  net.cfg.chunk.t_pred = static_cast<int>(r.u32());
  net.cfg.chunk.t_exec = static_cast<int>(r.u32());
  net.cfg.obs_dim = static_cast<int>(r.u32());
  net.cfg.hidden.resize(r.u64());
  for (auto& h : net.cfg.hidden) h = static_cast<int>(r.u32());
  net.cfg.cond_hidden = static_cast<int>(r.u32());
  net.cfg.activation = net::activation_from_name(r.str());
  net.cfg.spread_clip = r.f64();
  const std::string stored_hash = r.str();

  net.body.trunk.resize(r.u64());
  for (auto& l : net.body.trunk) l = detail::read_dense(r);
  net.body.films.resize(r.u64());
  for (auto& f : net.body.films) f.conditioner = detail::read_mlp(r);
  net.obs_norm = detail::read_normalizer(r);
  net.act_norm = detail::read_normalizer(r);

  if (net.config_hash() != stored_hash)
    throw std::runtime_error("checkpoint: config hash mismatch");
  return net;
}

}  // namespace finflow::meanflow
