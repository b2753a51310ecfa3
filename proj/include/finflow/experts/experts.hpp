#pragma once

#include <memory>
#include <string>

#include "finflow/rng.hpp"
#include "finflow/sim/params.hpp"
#include "finflow/sim/simulator.hpp"
#include "finflow/sim/types.hpp"

namespace finflow::experts {

// Coefficients shared by the closed-form quoting rules. The fill decay kappa
// comes from MarketParams so the formulas stay consistent with the fill model.
struct ExpertParams {
  double gamma_risk = 0.1;     // risk aversion
  double fill_scale = 1.0;     // A, base arrival scale in the GLFT formula
  double drift_estimate = 0.0; // mu_hat used by the drift-adjusted GLFT
  double drift_tau_ref = 1.0;  // time scale applied to mu_hat's quote shift
  double delta_max = 2.0;      // random baseline samples spreads in [0, delta_max]
  void validate() const;
};

// Inventory-and-horizon-aware quotes: reservation offset -I*gamma*sigma^2*tau
// around the mid plus a fixed optimal half-spread. The chunk repeats the rule
// with tau decremented per row and inventory held at its current value.
sim::ActionChunk as_quotes(const sim::Observation& obs, const ExpertParams& params,
                           const sim::MarketParams& market,
                           const sim::ChunkConfig& cfg);

// Stationary quotes delta = c1 +/- c2 * I from the asymptotic closed form;
// independent of remaining time.
sim::ActionChunk glft_quotes(const sim::Observation& obs, const ExpertParams& params,
                             const sim::MarketParams& market,
                             const sim::ChunkConfig& cfg);

// GLFT with a symmetric drift shift: mu_hat > 0 tightens the ask and widens
// the bid by mu_hat * drift_tau_ref. Equals glft_quotes at mu_hat = 0.
sim::ActionChunk glft_drift_quotes(const sim::Observation& obs,
                                   const ExpertParams& params,
                                   const sim::MarketParams& market,
                                   const sim::ChunkConfig& cfg);

// Spreads i.i.d. uniform on [0, delta_max].
sim::ActionChunk random_quotes(const sim::ChunkConfig& cfg, double delta_max,
                               Rng& rng);

// The (c1, c2) coefficients used by glft_quotes, exposed for tests.
void glft_coefficients(const ExpertParams& params, const sim::MarketParams& market,
                       double& c1, double& c2);

// Policy wrappers over the closed-form rules.
class AsPolicy : public sim::ChunkPolicy {
 public:
  AsPolicy(ExpertParams params, sim::MarketParams market, sim::ChunkConfig cfg)
      : params_(params), market_(std::move(market)), cfg_(cfg) {}
  sim::ActionChunk plan(const sim::Observation& obs, Rng&) override {
    return as_quotes(obs, params_, market_, cfg_);
  }
  std::string name() const override { return "as"; }

 private:
  ExpertParams params_;
  sim::MarketParams market_;
  sim::ChunkConfig cfg_;
};

class GlftPolicy : public sim::ChunkPolicy {
 public:
  GlftPolicy(ExpertParams params, sim::MarketParams market, sim::ChunkConfig cfg)
      : params_(params), market_(std::move(market)), cfg_(cfg) {}
  sim::ActionChunk plan(const sim::Observation& obs, Rng&) override {
    return glft_quotes(obs, params_, market_, cfg_);
  }
  std::string name() const override { return "glft"; }

 private:
  ExpertParams params_;
  sim::MarketParams market_;
  sim::ChunkConfig cfg_;
};

class GlftDriftPolicy : public sim::ChunkPolicy {
 public:
  GlftDriftPolicy(ExpertParams params, sim::MarketParams market,
                  sim::ChunkConfig cfg)
      : params_(params), market_(std::move(market)), cfg_(cfg) {}
  sim::ActionChunk plan(const sim::Observation& obs, Rng&) override {
    return glft_drift_quotes(obs, params_, market_, cfg_);
  }
  std::string name() const override { return "glft_drift"; }

 private:
  ExpertParams params_;
  sim::MarketParams market_;
  sim::ChunkConfig cfg_;
};

class RandomPolicy : public sim::ChunkPolicy {
 public:
  RandomPolicy(double delta_max, sim::ChunkConfig cfg)
      : delta_max_(delta_max), cfg_(cfg) {}
  sim::ActionChunk plan(const sim::Observation&, Rng& rng) override {
    return random_quotes(cfg_, delta_max_, rng);
  }
  std::string name() const override { return "random"; }

 private:
  double delta_max_;
  sim::ChunkConfig cfg_;
};

}  // namespace finflow::experts
