#pragma once

#include <string>
#include <vector>

#include "tzsl/dataset.hpp"
#include "tzsl/matrix.hpp"
#include "tzsl/mlp.hpp"
#include "tzsl/optim.hpp"
#include "tzsl/priors.hpp"
#include "tzsl/rng.hpp"
#include "tzsl/ver.hpp"
#include "tzsl/wgan.hpp"

namespace tzsl {

// Stage-2 visual-to-semantic regressor. With ver_input set, the input is the
// frozen variational embedding [x | mu | logvar]; otherwise raw features
// (the plain-input ablation).
struct RegressorModel {
    Mlp2Params R;  // (d_x + 2*d_z) -> d_a, or d_x -> d_a when !ver_input
    bool ver_input = true;
    bool frozen = false;

    std::size_t hidden_width() const { return R.hidden_dim(); }
};

struct SemanticCritic {
    Mlp2Params D_r;  // d_a -> 1
};

Matrix regressor_input(const RegressorModel& m, const VerModel& ver, const Matrix& x);

// Pseudo semantic labels a~ = R(embed(x)), width d_a.
Matrix regress(const RegressorModel& m, const VerModel& ver, const Matrix& x);

// Post-activation output of R's first layer, width hidden_width().
Matrix regressor_hidden(const RegressorModel& m, const VerModel& ver, const Matrix& x);

struct MseResult {
    double value = 0.0;
    Matrix d_pred;
};

// Mean over all elements of (pred - target)^2, with its gradient.
MseResult mse_loss(const Matrix& pred, const Matrix& target);

// Adversarial regression terms over both the seen and the unseen side.
// Real/fake batches must pair row-for-row within each side.
struct AdvSemanticResult {
    double critic_objective = 0.0;  // to maximize
    double gen_objective = 0.0;     // -E[D(fake_s)] - E[D(fake_u)], to minimize
    Mlp2Grads d_critic;
    Matrix d_fake_s;  // gradient of gen_objective w.r.t. the fake batches
    Matrix d_fake_u;
};

AdvSemanticResult semantic_critic_losses(const SemanticCritic& critic, const Matrix& a_real_s,
                                         const Matrix& a_fake_s, const Matrix& a_real_u,
                                         const Matrix& a_fake_u, double lambda_gp, Rng& rng);

struct RegressTrainConfig {
    std::size_t hidden = 64;
    std::size_t epochs = 100;
    std::size_t batch = 64;
    double lambda_r = 0.01;
    double lambda_gp = 10.0;
    double slope = 0.2;
    bool use_ver_embedding = true;
    // The critic trains whenever enabled, regardless of lambda_r; with
    // lambda_r = 0 its updates cannot touch the regressor trajectory.
    bool critic_enabled = true;
    AdamWConfig opt;
};

struct RegressTraces {
    std::vector<double> mse;              // per epoch
    std::vector<double> critic_objective; // per epoch (0 when critic disabled)
};

// Per batch: supervised MSE on seen pairs plus one critic ascent step and
// the lambda_r-weighted adversarial term on the regressor. Unseen real
// semantics are Au rows sampled by `prior`.
RegressorModel train_regressor(const TrainView& data, const VerModel& ver, const ClassPrior& prior,
                               const RegressTrainConfig& cfg, Rng& rng,
                               RegressTraces* traces = nullptr);

void save_regressor(const RegressorModel& m, const std::string& path, const CheckpointMeta& meta);
RegressorModel load_regressor(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace tzsl
