#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tzsl/matrix.hpp"
#include "tzsl/priors.hpp"
#include "tzsl/rng.hpp"

namespace tzsl {

// Transductive split: labeled seen samples, an unlabeled unseen pool,
// class-level semantics for both sides. Yu_hidden carries the evaluation
// labels of the unseen pool; training code receives a TrainView, which does
// not expose it.
struct SplitDataset {
    std::vector<int> seen_ids;    // class id of As row c
    std::vector<int> unseen_ids;  // class id of Au row c

    Matrix Xs;            // n_s x d_x
    std::vector<int> Ys;  // n_s global class ids, all in seen_ids
    Matrix Xu;            // n_u x d_x
    Matrix As;            // N_s x d_a
    Matrix Au;            // N_u x d_a

    std::optional<std::vector<int>> Yu_hidden;  // evaluation only

    std::optional<Matrix> Xs_test;  // seen holdout for generalized evaluation
    std::optional<std::vector<int>> Ys_test;

    std::size_t d_x() const { return Xs.cols(); }
    std::size_t d_a() const { return As.cols(); }
    std::size_t n_seen_classes() const { return seen_ids.size(); }
    std::size_t n_unseen_classes() const { return unseen_ids.size(); }

    std::size_t seen_row_of(int class_id) const;
    std::size_t unseen_row_of(int class_id) const;

    void validate() const;
};

// What training is allowed to see. Deliberately omits Yu_hidden and the
// seen test split.
struct TrainView {
    const Matrix& Xs;
    const std::vector<int>& Ys;
    const Matrix& Xu;
    const Matrix& As;
    const Matrix& Au;
    const std::vector<int>& seen_ids;
    const std::vector<int>& unseen_ids;

    std::size_t d_x() const { return Xs.cols(); }
    std::size_t d_a() const { return As.cols(); }
    std::size_t seen_row_of(int class_id) const;
};

TrainView train_view(const SplitDataset& ds);

struct SyntheticSpec {
    std::size_t d_x = 16;
    std::size_t d_a = 8;
    std::size_t d_z = 4;
    std::size_t n_seen_classes = 8;
    std::size_t n_unseen_classes = 4;
    std::size_t samples_per_class = 200;
    double semantic_map_scale = 1.0;
    double noise_std = 0.12;
    ClassPrior unseen_prior;  // defaults to uniform when empty
    std::uint64_t seed = 1;

    void validate() const;
};

// Exact densities for a synthetic benchmark: isotropic Gaussian per class,
// shared variance, known mixing priors. Seen class means occupy the first
// rows of class_means, unseen means follow.
struct DensityOracle {
    Matrix class_means;  // (N_s + N_u) x d_x
    double noise_std = 0.0;
    std::vector<int> seen_ids;
    std::vector<int> unseen_ids;
    ClassPrior unseen_prior;

    const double* unseen_mean(std::size_t u) const {
        return class_means.row_ptr(seen_ids.size() + u);
    }

    // p_r(x | unseen class u) and the unseen-pool marginal p_r(x).
    double pdf_unseen_class(const double* x, std::size_t u) const;
    double pdf_unseen_marginal(const double* x) const;

    // x ~ p_r(x): class by prior, then the class Gaussian.
    Matrix sample_unseen_marginal(std::size_t n, Rng& rng) const;
};

std::pair<SplitDataset, DensityOracle> make_synthetic(const SyntheticSpec& spec);

// Container format "IVGN1": magic line, one text header line with dims and
// counts, then little-endian float64 matrix records in declared order.
void save_dataset(const SplitDataset& ds, const std::string& path);
SplitDataset load_dataset(const std::string& path);

// CSV ingestion for user-supplied features: semantics rows are
// "class_id, a_1..a_da"; feature rows are "x_1..x_dx, class_id". Unseen
// labels may all be -1, in which case Yu_hidden is absent.
SplitDataset dataset_from_csv(const std::string& seen_csv, const std::string& unseen_csv,
                              const std::string& semantics_csv);

// Stratified per-class split of the seen samples into train/test parts.
SplitDataset holdout_seen(const SplitDataset& ds, double fraction, std::uint64_t seed);

}  // namespace tzsl
