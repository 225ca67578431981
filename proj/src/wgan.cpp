#include "tzsl/wgan.hpp"

#include <stdexcept>

namespace tzsl {

CriticTerms wgan_critic_terms(const Mlp2Params& critic, const Matrix& real_in,
                              const Matrix& fake_in, double lambda_gp,
                              std::size_t penalized_cols, Rng& rng) {
    if (critic.out_dim() != 1)
        throw std::invalid_argument("wgan_critic_terms: critic must have scalar output");
    if (!real_in.same_shape(fake_in))
        detail::shape_fail("wgan_critic_terms (real vs fake)", real_in, fake_in);
    if (real_in.rows() == 0) throw std::invalid_argument("wgan_critic_terms: empty batch");

    const std::size_t n = real_in.rows();
    const double inv_n = 1.0 / static_cast<double>(n);

    Mlp2Cache real_cache, fake_cache;
    const Matrix real_score = mlp2_forward(critic, real_in, &real_cache);
    const Matrix fake_score = mlp2_forward(critic, fake_in, &fake_cache);

    CriticTerms out;
    out.critic_objective = (sum(real_score) - sum(fake_score)) * inv_n;
    out.gen_objective = -sum(fake_score) * inv_n;

    const Mlp2Backward real_back =
        mlp2_grads(critic, real_cache, Matrix(n, 1, inv_n));
    const Mlp2Backward fake_back =
        mlp2_grads(critic, fake_cache, Matrix(n, 1, -inv_n));

    out.d_critic = real_back.params;
    out.d_critic.accumulate(fake_back.params);
    out.d_fake_input = fake_back.input;  // also the gradient of -E[D(fake)]

    Matrix interp(n, real_in.cols());
    for (std::size_t i = 0; i < n; ++i) {
        const double alpha = rng.uniform();
        const double* r = real_in.row_ptr(i);
        const double* f = fake_in.row_ptr(i);
        double* x = interp.row_ptr(i);
        for (std::size_t j = 0; j < real_in.cols(); ++j)
            x[j] = alpha * r[j] + (1.0 - alpha) * f[j];
    }
    const GpResult gp = gp_value_and_grads(critic, interp, lambda_gp, penalized_cols);
    out.penalty = gp.penalty;
    out.critic_objective -= gp.penalty;
    out.d_critic.accumulate(gp.grads, -1.0);
    return out;
}

CriticScore critic_neg_mean_score(const Mlp2Params& critic, const Matrix& input) {
    if (critic.out_dim() != 1)
        throw std::invalid_argument("critic_neg_mean_score: critic must have scalar output");
    const std::size_t n = input.rows();
    Mlp2Cache cache;
    const Matrix score = mlp2_forward(critic, input, &cache);
    const Mlp2Backward back =
        mlp2_grads(critic, cache, Matrix(n, 1, -1.0 / static_cast<double>(n)));
    CriticScore out;
    out.neg_mean = -sum(score) / static_cast<double>(n);
    out.d_input = back.input;
    return out;
}

}  // namespace tzsl
