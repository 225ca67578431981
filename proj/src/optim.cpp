#include "tzsl/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace tzsl {

AdamWState::AdamWState(AdamWConfig config, const std::vector<const Matrix*>& params)
    : cfg(config) {
    m.reserve(params.size());
    v.reserve(params.size());
    for (const Matrix* p : params) {
        m.emplace_back(p->rows(), p->cols());
        v.emplace_back(p->rows(), p->cols());
    }
}

void adamw_step(AdamWState& state, const std::vector<Matrix*>& params,
                const std::vector<const Matrix*>& grads) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::invalid_argument("adamw_step: parameter/gradient/state count mismatch");

    ++state.step;
    const double bc1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.step));

    for (std::size_t k = 0; k < params.size(); ++k) {
        Matrix& p = *params[k];
        const Matrix& g = *grads[k];
        Matrix& mk = state.m[k];
        Matrix& vk = state.v[k];
        if (!p.same_shape(g) || !p.same_shape(mk))
            throw std::invalid_argument("adamw_step: shape mismatch in parameter group");

        for (std::size_t i = 0; i < p.size(); ++i) {
            const double grad = g.values()[i];
            mk.values()[i] = state.cfg.beta1 * mk.values()[i] + (1.0 - state.cfg.beta1) * grad;
            vk.values()[i] = state.cfg.beta2 * vk.values()[i] + (1.0 - state.cfg.beta2) * grad * grad;
            const double m_hat = mk.values()[i] / bc1;
            const double v_hat = vk.values()[i] / bc2;
            double value = p.values()[i];
            value -= state.cfg.lr * state.cfg.weight_decay * value;
            value -= state.cfg.lr * m_hat / (std::sqrt(v_hat) + state.cfg.eps);
            p.values()[i] = value;
        }
    }
}

}  // namespace tzsl
