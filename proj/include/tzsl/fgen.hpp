#pragma once

#include <string>
#include <vector>

#include "tzsl/dataset.hpp"
#include "tzsl/matrix.hpp"
#include "tzsl/mlp.hpp"
#include "tzsl/optim.hpp"
#include "tzsl/priors.hpp"
#include "tzsl/regress.hpp"
#include "tzsl/rng.hpp"
#include "tzsl/ver.hpp"

namespace tzsl {

// Stage-3 conditional VAE-GAN: encoder E over [x | a], generator G over
// [z | a], reconstructing seen features and synthesizing unseen ones.
struct GeneratorModel {
    Mlp2Params E;  // (d_x + d_a) -> 2 * d_z
    Mlp2Params G;  // (d_z + d_a) -> d_x
    std::size_t d_z = 0;
};

struct CriticSet {
    Mlp2Params D_s;   // (d_x + d_a) -> 1, conditional seen critic
    Mlp2Params D_u;   // d_x -> 1, unconditional unseen critic
    Mlp2Params D_u2;  // (d_x + d_a) -> 1, pseudo-conditional unseen critic
};

// Semantics sampling for the two sides of the unconditional unseen game:
// d_prior drives the critic's fake batches, g_prior the generator's. Setting
// them apart reproduces the mixed-prior controlled experiment.
struct StagePriors {
    ClassPrior g_prior;
    ClassPrior d_prior;
};

// Forward state of the seen-class VAE path, kept for backprop.
struct SeenVaeForward {
    Mlp2Cache enc_cache;
    Matrix mu, logvar, clamp_mask, eps, z;
    Mlp2Cache gen_cache;
    Matrix fake;  // reconstructed seen features
};

SeenVaeForward seen_vae_forward(const GeneratorModel& m, const Matrix& xs, const Matrix& as,
                                Rng& rng);
void seen_vae_backward(const GeneratorModel& m, const SeenVaeForward& f, const Matrix& d_fake,
                       const Matrix& d_mu_extra, const Matrix& d_logvar_extra, Mlp2Grads& dE,
                       Mlp2Grads& dG);

struct VaeLossResult {
    double value = 0.0;
    Mlp2Grads dE, dG;
};

// KL(N(mu, sigma) || N(0, I)) + mean row reconstruction error, with exact
// gradients through the reparameterized sample.
VaeLossResult loss_vae_s(const GeneratorModel& m, const Matrix& xs, const Matrix& as, Rng& rng);

struct GanLossResult {
    double critic_objective = 0.0;
    double gen_objective = 0.0;
    Mlp2Grads d_critic;
    Matrix d_fake;  // gradient of gen_objective w.r.t. the fake feature block
};

// Conditional seen critic on [x | a] pairs; penalty on the feature block.
GanLossResult loss_gan_s(const CriticSet& c, const GeneratorModel& m, const Matrix& xs,
                         const Matrix& as, Rng& rng, double lambda_gp);

// Unconditional unseen critic; fake features are G(z, a_sampled).
GanLossResult loss_gan_u1(const CriticSet& c, const GeneratorModel& m, const Matrix& xu,
                          const Matrix& a_sampled, Rng& rng, double lambda_gp);

// Pseudo-conditional unseen critic: conditions are regressed semantics of
// the real rows, shared between the real and fake sides. No prior sampling.
GanLossResult loss_gan_u2_pfa(const CriticSet& c, const GeneratorModel& m,
                              const RegressorModel& reg, const VerModel& ver, const Matrix& xu,
                              Rng& rng, double lambda_gp);

struct GenTrainConfig {
    std::size_t d_z = 4;
    std::size_t hidden = 64;
    std::size_t epochs = 100;
    std::size_t batch = 64;
    double lambda_u1 = 1.0;
    double lambda_u2 = 0.09;
    double lambda_gp = 10.0;
    double slope = 0.2;
    AdamWConfig opt;
};

struct GenTraces {
    std::vector<double> vae, gan_s, gan_u1, gan_u2;  // per epoch
};

// Per batch: one ascent step per critic on its own objective, then one
// descent step for E and G on the combined objective. With lambda_u1 =
// lambda_u2 = 0 the unseen pool is never touched.
std::pair<GeneratorModel, CriticSet> train_generator(const TrainView& data, const VerModel& ver,
                                                     const RegressorModel& reg,
                                                     const StagePriors& priors,
                                                     const GenTrainConfig& cfg, Rng& rng,
                                                     GenTraces* traces = nullptr);

// n_per_row samples per semantic row via z ~ N(0, I), grouped by row.
Matrix synthesize(const GeneratorModel& m, const Matrix& a, std::size_t n_per_row, Rng& rng);

void save_generator(const GeneratorModel& m, const CriticSet& c, const std::string& path,
                    const CheckpointMeta& meta);
std::pair<GeneratorModel, CriticSet> load_generator(const std::string& path,
                                                    CheckpointMeta* meta = nullptr);

}  // namespace tzsl
