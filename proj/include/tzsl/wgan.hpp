#pragma once

#include "tzsl/matrix.hpp"
#include "tzsl/mlp.hpp"
#include "tzsl/rng.hpp"

namespace tzsl {

// One Wasserstein critic term with gradient penalty on row interpolates:
//   critic objective = E[D(real)] - E[D(fake)]
//                      - lambda_gp * E[(||grad D(xhat)|| - 1)^2]
// with xhat_i = alpha_i real_i + (1 - alpha_i) fake_i, alpha_i ~ U(0, 1).
// The penalized norm covers the first `penalized_cols` input columns, so a
// trailing condition block stays outside the penalty. Generator objective is
// -E[D(fake)] with its gradient taken w.r.t. the fake input rows.
struct CriticTerms {
    double critic_objective = 0.0;
    double gen_objective = 0.0;
    double penalty = 0.0;
    Mlp2Grads d_critic;    // gradient of critic_objective w.r.t. critic params
    Matrix d_fake_input;   // gradient of gen_objective w.r.t. the fake batch
};

CriticTerms wgan_critic_terms(const Mlp2Params& critic, const Matrix& real_in,
                              const Matrix& fake_in, double lambda_gp,
                              std::size_t penalized_cols, Rng& rng);

// -mean(D(x)) together with its input gradient; the generator-side score.
struct CriticScore {
    double neg_mean = 0.0;
    Matrix d_input;
};
CriticScore critic_neg_mean_score(const Mlp2Params& critic, const Matrix& input);

}  // namespace tzsl
