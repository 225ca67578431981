#pragma once

#include <cstddef>
#include <vector>

#include "tzsl/matrix.hpp"
#include "tzsl/rng.hpp"

namespace tzsl {

// Probability vector over unseen classes (indexed by Au row).
struct ClassPrior {
    std::vector<double> p;

    std::size_t size() const { return p.size(); }
    double operator[](std::size_t i) const { return p[i]; }

    // Simplex invariants: entries >= 0, sum within 1e-9 of 1.
    void validate() const;
};

ClassPrior uniform_prior(std::size_t n_classes);

// Class-averaged absolute error between two priors, in percent:
// (100 / N) * sum_i |est_i - gt_i|.
double prior_bias(const ClassPrior& estimated, const ClassPrior& ground_truth);

// i.i.d. categorical draws by CDF inversion.
std::vector<std::size_t> sample_classes(const ClassPrior& prior, std::size_t n, Rng& rng);

// Anchor-initialized Lloyd iterations over the unlabeled pool; the returned
// prior is the assignment fraction per anchor after the final assignment.
// Empty clusters keep their anchor and contribute probability zero.
ClassPrior estimate_prior_cpe(const Matrix& unlabeled, const Matrix& anchors, std::size_t iters);

// Nearest-anchor assignment used by the estimator (exposed for tests).
std::vector<std::size_t> nearest_anchor_assignment(const Matrix& points, const Matrix& anchors);

}  // namespace tzsl
