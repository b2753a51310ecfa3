#pragma once

#include <string>

#include "finflow/io.hpp"
#include "finflow/meanflow/meanflow.hpp"

namespace finflow::meanflow {

// Versioned binary checkpoint: config section + its SHA-256, parameter
// tensors, normalization stats, whole-file SHA-256 footer. Loading rejects a
// config-hash or footer mismatch. See docs/FORMATS.md.
void save_meanflow(const MeanFlowNet& net, const std::string& path);
MeanFlowNet load_meanflow(const std::string& path);

// Shared pieces of the checkpoint container, reused by the noise-policy
// checkpoint writer.
namespace detail {
void write_dense(finflow::BinWriter& w, const net::DenseLayer& l);
net::DenseLayer read_dense(finflow::BinReader& r);
void write_mlp(finflow::BinWriter& w, const net::Mlp& mlp);
net::Mlp read_mlp(finflow::BinReader& r);
void write_normalizer(finflow::BinWriter& w, const Normalizer& n);
Normalizer read_normalizer(finflow::BinReader& r);
void write_hashed_file(const std::string& path, const std::string& body);
std::string read_hashed_file(const std::string& path);
}  // namespace detail

}  // namespace finflow::meanflow
