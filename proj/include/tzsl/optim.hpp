#pragma once

#include <vector>

#include "tzsl/matrix.hpp"

namespace tzsl {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

// AdamW with decoupled weight decay:
//   p <- p - lr * wd * p - lr * m_hat / (sqrt(v_hat) + eps)
struct AdamWState {
    AdamWConfig cfg;
    long step = 0;
    std::vector<Matrix> m;  // first moments, shapes mirror the parameters
    std::vector<Matrix> v;  // second moments

    AdamWState() = default;
    AdamWState(AdamWConfig config, const std::vector<const Matrix*>& params);
};

void adamw_step(AdamWState& state, const std::vector<Matrix*>& params,
                const std::vector<const Matrix*>& grads);

}  // namespace tzsl
