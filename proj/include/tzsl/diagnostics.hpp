#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tzsl/dataset.hpp"
#include "tzsl/eval.hpp"
#include "tzsl/fgen.hpp"
#include "tzsl/matrix.hpp"
#include "tzsl/priors.hpp"
#include "tzsl/regress.hpp"
#include "tzsl/rng.hpp"
#include "tzsl/ver.hpp"

namespace tzsl {

// Finite toy model: m outcomes, k classes, explicit class priors and
// row-stochastic conditionals for both the real and the generated side.
struct DiscreteToy {
    std::size_t outcomes = 0;
    std::size_t classes = 0;
    std::vector<double> p_r_y, p_g_y;  // class priors, length k
    Matrix p_r_x_given_y;              // k x m, rows on the simplex
    Matrix p_g_x_given_y;              // k x m

    void validate() const;
    std::vector<double> real_marginal() const;
    std::vector<double> gen_marginal() const;
    // Largest |p_r(x) - p_g(x)| over outcomes; the premise of the identity.
    double marginal_gap(std::size_t* worst_outcome = nullptr) const;
};

// Per-class accumulated prior error through both computation routes.
struct ApeReport {
    std::vector<double> conditional_route;  // aggregate of |p_r(x|y) - p_g(x|y)|
    std::vector<double> posterior_route;    // aggregate of the posterior-form expression
    double route_discrepancy = 0.0;         // max pointwise |route1 - route2|
    bool variance_floored = false;          // Gaussian fits hit the variance floor

    double class_mean_conditional() const;
};

// Both routes over the full outcome/class grid. Requires matching marginals
// (within 1e-12); the thrown error names the first failing outcome.
ApeReport ape_discrete(const DiscreteToy& toy);
double ape_identity_check(const DiscreteToy& toy);

// Samples p_r freely, then solves the generated conditionals so the two
// marginals match exactly. Priors stay bounded away from zero.
DiscreteToy random_marginal_matched_toy(std::size_t outcomes, std::size_t classes, Rng& rng);

// Oracle-route APE on a synthetic benchmark: per unseen class, fit a
// diagonal Gaussian to generated samples and average the conditional-route
// error over a Monte-Carlo draw from the real marginal. When a regressor is
// supplied, the class condition is the mean regressed semantic of real
// class samples instead of the true semantic row.
ApeReport ape_gaussian(const DensityOracle& oracle, const GeneratorModel& gen, const Matrix& Au,
                       const RegressorModel* reg, const VerModel* ver, std::size_t fit_samples,
                       std::size_t mc_budget, Rng& rng);

struct PipelineStageConfigs {
    RegressTrainConfig reg;
    GenTrainConfig gen;
    FzslConfig fzsl;
};

using NamedPrior = std::pair<std::string, ClassPrior>;

struct ChainCell {
    std::string g_prior, d_prior;
    double t1 = 0.0;
};

// Trains stage-3 once per (g_prior, d_prior) pair over a shared stage-1/2,
// every cell from the same seed, and reports TZSL T1 per cell.
std::vector<ChainCell> chain_experiment(const SplitDataset& ds, const VerModel& ver,
                                        const RegressorModel& reg,
                                        const std::vector<NamedPrior>& grid,
                                        const PipelineStageConfigs& cfg, std::uint64_t seed);

struct SweepRow {
    std::string prior_name;
    double prior_bias_pct = 0.0;
    double t1 = 0.0;
};

// Re-runs stage-2 and stage-3 under each prior (same seed throughout) and
// reports prior bias against the ground truth plus final T1.
std::vector<SweepRow> prior_sweep(const SplitDataset& ds, const VerModel& ver,
                                  const std::vector<NamedPrior>& priors,
                                  const ClassPrior& ground_truth, const PipelineStageConfigs& cfg,
                                  std::uint64_t seed);

}  // namespace tzsl
