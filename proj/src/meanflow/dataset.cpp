#include "finflow/meanflow/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include "finflow/digest.hpp"
#include "finflow/io.hpp"

namespace finflow::meanflow {

namespace {

constexpr std::uint32_t kMagic = 0x53444646;  // "FFDS"

void write_market(BinWriter& w, const sim::MarketParams& m) {
  w.f64(m.mu);
  w.f64(m.sigma);
  w.f64(m.hurst);
  w.f64(m.jump_intensity);
  w.f64(m.jump_mean);
  w.f64(m.jump_std);
  w.f64(m.hawkes.mu_a);
  w.f64(m.hawkes.mu_b);
  w.f64(m.hawkes.alpha_aa);
  w.f64(m.hawkes.alpha_ab);
  w.f64(m.hawkes.alpha_bb);
  w.f64(m.hawkes.alpha_ba);
  w.f64(m.hawkes.beta);
  w.f64(m.fill_decay);
  w.u32(static_cast<std::uint32_t>(m.horizon_steps));
  w.f64(m.dt);
  w.f64(m.s0);
  w.f64(m.inventory_penalty);
  w.f64(m.inventory_scale);
}

sim::MarketParams read_market(BinReader& r) {
  sim::MarketParams m;
  m.mu = r.f64();
  m.sigma = r.f64();
  m.hurst = r.f64();
  m.jump_intensity = r.f64();
  m.jump_mean = r.f64();
  m.jump_std = r.f64();
  m.hawkes.mu_a = r.f64();
  m.hawkes.mu_b = r.f64();
  m.hawkes.alpha_aa = r.f64();
  m.hawkes.alpha_ab = r.f64();
  m.hawkes.alpha_bb = r.f64();
  m.hawkes.alpha_ba = r.f64();
  m.hawkes.beta = r.f64();
  m.fill_decay = r.f64();
  m.horizon_steps = static_cast<int>(r.u32());
  m.dt = r.f64();
  m.s0 = r.f64();
  m.inventory_penalty = r.f64();
  m.inventory_scale = r.f64();
  return m;
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

void serialize_body(const DemoDataset& d, std::ostream& out) {
  BinWriter w(out);
  w.u32(kMagic);
  w.u32(DemoDataset::kFormatVersion);
  w.u32(static_cast<std::uint32_t>(d.chunk.t_obs));
  w.u32(static_cast<std::uint32_t>(d.chunk.t_pred));
  w.u32(static_cast<std::uint32_t>(d.chunk.t_exec));
  w.u32(static_cast<std::uint32_t>(d.obs_dim));
  w.u64(d.expert_names.size());
  for (const auto& name : d.expert_names) w.str(name);
  w.u64(d.scenarios.size());
  for (const auto& s : d.scenarios) {
    w.str(s.name);
    write_market(w, s.market);
    w.str(s.winner);
    w.f64(s.winner_objective);
  }
  write_normalizer(w, d.obs_norm);
  write_normalizer(w, d.act_norm);
  w.u64(d.records.size());
  for (const auto& rec : d.records) {
    w.u32(rec.scenario_id);
    w.u32(rec.expert_id);
    w.eigen(rec.state);
    w.eigen(rec.action);
  }
}

DemoDataset parse_body(std::istream& in) {
  BinReader r(in);
  if (r.u32() != kMagic) throw std::runtime_error("dataset: bad magic");
  const std::uint32_t version = r.u32();
  if (version != DemoDataset::kFormatVersion)
    throw std::runtime_error("dataset: unsupported format version " +
                             std::to_string(version));
  DemoDataset d;
  d.chunk.t_obs = static_cast<int>(r.u32());
  d.chunk.t_pred = static_cast<int>(r.u32());
  d.chunk.t_exec = static_cast<int>(r.u32());
  d.obs_dim = static_cast<int>(r.u32());
  d.expert_names.resize(r.u64());
  for (auto& name : d.expert_names) name = r.str();
  d.scenarios.resize(r.u64());
  for (auto& s : d.scenarios) {
    s.name = r.str();
    s.market = read_market(r);
    s.winner = r.str();
    s.winner_objective = r.f64();
  }
  d.obs_norm = read_normalizer(r);
  d.act_norm = read_normalizer(r);
  d.records.resize(r.u64());
  for (auto& rec : d.records) {
    rec.scenario_id = r.u32();
    rec.expert_id = r.u32();
    rec.state = r.eigen();
    rec.action = r.eigen();
  }
  return d;
}

}  // namespace

void DemoDataset::fit_normalizers() {
  if (records.empty()) throw std::runtime_error("dataset: no records to fit");
  Eigen::MatrixXd states(records.front().state.size(), records.size());
  Eigen::MatrixXd actions(records.front().action.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    states.col(static_cast<Eigen::Index>(i)) = records[i].state;
    actions.col(static_cast<Eigen::Index>(i)) = records[i].action;
  }
  obs_norm = Normalizer::fit(states);
  act_norm = Normalizer::fit(actions);
}

std::string DemoDataset::content_hash() const {
  std::ostringstream buf(std::ios::binary);
  serialize_body(*this, buf);
  const std::string bytes = buf.str();
  return sha256_hex(bytes.data(), bytes.size());
}

void DemoDataset::save(const std::string& path) const {
  std::ostringstream buf(std::ios::binary);
  serialize_body(*this, buf);
  const std::string bytes = buf.str();
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  const auto digest = h.finish();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("dataset: cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.write(reinterpret_cast<const char*>(digest.data()),
            static_cast<std::streamsize>(digest.size()));
  if (!out) throw std::runtime_error("dataset: write failed");
}

DemoDataset DemoDataset::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("dataset: cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < 32) throw std::runtime_error("dataset: truncated file");
  const std::string body = bytes.substr(0, bytes.size() - 32);
  const std::string stored = bytes.substr(bytes.size() - 32);
  Sha256 h;
  h.update(body.data(), body.size());
  const auto digest = h.finish();
  if (!std::equal(digest.begin(), digest.end(),
                  reinterpret_cast<const unsigned char*>(stored.data())))
    throw std::runtime_error("dataset: content hash mismatch");
  std::istringstream stream(body, std::ios::binary);
  return parse_body(stream);
}

Normalizer Normalizer::fit(const Eigen::MatrixXd& data) {
  Normalizer n;
  n.mean = data.rowwise().mean();
  Eigen::MatrixXd centered = data.colwise() - n.mean;
  n.std = (centered.array().square().rowwise().mean()).sqrt().max(1e-8);
  return n;
}

}  // namespace finflow::meanflow
