#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tzsl/matrix.hpp"
#include "tzsl/rng.hpp"

namespace tzsl {

// Two-layer perceptron y = W2 * leaky_relu(W1 * x + b1) + b2, operating on
// row batches. Every network in the library (encoders, decoders, regressor,
// critics) is one of these.
struct Mlp2Params {
    Matrix W1;  // hidden x d_in
    Matrix b1;  // 1 x hidden
    Matrix W2;  // d_out x hidden
    Matrix b2;  // 1 x d_out
    double slope = 0.2;  // LeakyReLU negative slope, in (0, 1]

    std::size_t in_dim() const { return W1.cols(); }
    std::size_t hidden_dim() const { return W1.rows(); }
    std::size_t out_dim() const { return W2.rows(); }

    // Weights N(0, 1/sqrt(fan_in)), zero biases.
    static Mlp2Params init(std::size_t d_in, std::size_t hidden, std::size_t d_out, double slope,
                           Rng& rng);

    void validate() const;  // throws std::invalid_argument on inconsistent shapes

    std::vector<Matrix*> param_list();
    std::vector<const Matrix*> param_list() const;
};

struct Mlp2Grads {
    Matrix dW1, db1, dW2, db2;

    static Mlp2Grads zeros_like(const Mlp2Params& p);
    Mlp2Grads& operator*=(double s);
    void accumulate(const Mlp2Grads& other, double scale = 1.0);
    std::vector<const Matrix*> list() const;
};

// Forward cache for backprop. Carries a parameter fingerprint so that a
// backward pass against mutated parameters is rejected.
struct Mlp2Cache {
    Matrix input;    // n x d_in
    Matrix preact;   // n x hidden
    Matrix hidden;   // n x hidden (post-activation)
    std::uint64_t params_token = 0;
};

std::uint64_t mlp2_params_token(const Mlp2Params& p);

Matrix mlp2_forward(const Mlp2Params& p, const Matrix& x, Mlp2Cache* cache = nullptr);

struct Mlp2Backward {
    Mlp2Grads params;
    Matrix input;  // gradient w.r.t. the forward input batch
};

// Gradients of sum_ij dY_ij * Y_ij with respect to parameters and input.
Mlp2Backward mlp2_grads(const Mlp2Params& p, const Mlp2Cache& cache, const Matrix& dY);

// Row i holds the input gradient of a scalar-output network at x_i:
// grad_x D(x_i) = W1^T diag(phi'(W1 x_i + b1)) W2^T. Requires d_out == 1.
Matrix critic_input_gradient(const Mlp2Params& p, const Matrix& x);

// WGAN gradient penalty lambda_gp * mean_i (||grad_x D(xhat_i)|| - 1)^2 over
// the first `penalized_cols` input columns, with its exact parameter
// gradient. phi' is treated as piecewise-constant, so second-order terms
// reduce to closed form: db1 = db2 = 0 away from activation kinks.
struct GpResult {
    double penalty = 0.0;
    Mlp2Grads grads;
};
GpResult gp_value_and_grads(const Mlp2Params& p, const Matrix& xhat, double lambda_gp,
                            std::size_t penalized_cols = static_cast<std::size_t>(-1));

}  // namespace tzsl
