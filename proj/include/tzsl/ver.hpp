#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tzsl/matrix.hpp"
#include "tzsl/mlp.hpp"
#include "tzsl/optim.hpp"
#include "tzsl/rng.hpp"

namespace tzsl {

// Stage-1 unsupervised variational pre-training over all visual features.
// The encoder output splits into mean and log-variance halves; once frozen,
// the deterministic embedding [x | mu(x) | logvar(x)] feeds the regressor.
struct VerModel {
    Mlp2Params encoder;  // d_x -> 2 * d_z
    Mlp2Params decoder;  // d_z -> d_x
    std::size_t d_z = 0;
    bool frozen = false;

    std::size_t embed_dim() const { return encoder.in_dim() + 2 * d_z; }
};

constexpr double kLogVarClampLo = -10.0;
constexpr double kLogVarClampHi = 10.0;

struct KlResult {
    double value = 0.0;
    Matrix d_mu;
    Matrix d_logvar;
};

// 0.5 * mean over rows of sum_j (exp(logvar) + mu^2 - 1 - logvar).
KlResult kl_std_normal(const Matrix& mu, const Matrix& logvar);

// z = mu + exp(0.5 * logvar) o eps. The first form draws eps from rng; the
// second takes it explicitly so gradients can be checked with pinned noise.
Matrix reparameterize(const Matrix& mu, const Matrix& logvar, Rng& rng);
Matrix reparameterize(const Matrix& mu, const Matrix& logvar, const Matrix& eps);

// Encoder pass with the log-variance clamp applied. Returns (mu, logvar).
std::pair<Matrix, Matrix> ver_encode(const VerModel& m, const Matrix& x);

struct VerTrainConfig {
    std::size_t d_z = 4;
    std::size_t hidden = 64;
    std::size_t epochs = 100;
    std::size_t batch = 64;
    double slope = 0.2;
    AdamWConfig opt;
};

// Minimizes KL + reconstruction MSE over mini-batches of the given feature
// pool (labels never enter). Returns a frozen model and, if requested, the
// per-epoch loss trace.
VerModel pretrain_ver(const Matrix& features, const VerTrainConfig& cfg, Rng& rng,
                      std::vector<double>* loss_trace = nullptr);

// [x | mu(x) | logvar(x)], width d_x + 2 * d_z. Requires a frozen model.
Matrix ver_embed(const VerModel& m, const Matrix& x);

// Parameter fingerprint, used to verify that freezing is effective.
std::uint64_t ver_checksum(const VerModel& m);

struct CheckpointMeta {
    std::uint64_t fingerprint = 0;
    std::uint64_t seed = 0;
};

void save_ver(const VerModel& m, const std::string& path, const CheckpointMeta& meta);
VerModel load_ver(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace tzsl
