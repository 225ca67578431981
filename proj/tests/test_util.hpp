#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "tzsl/matrix.hpp"
#include "tzsl/mlp.hpp"
#include "tzsl/rng.hpp"

namespace tzsl::testing {

// Central finite differences against an analytic gradient over every entry
// of `target`. The scalar function must be re-evaluable after perturbing
// target in place (pin any randomness by reseeding inside the callable).
struct FdReport {
    double max_rel_err = 0.0;
    std::size_t checked = 0;
};

inline FdReport check_gradient(Matrix& target, const Matrix& analytic,
                               const std::function<double()>& value, double h = 1e-5) {
    FdReport report;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double original = target.values()[i];
        target.values()[i] = original + h;
        const double up = value();
        target.values()[i] = original - h;
        const double down = value();
        target.values()[i] = original;
        const double numeric = (up - down) / (2.0 * h);
        const double a = analytic.values()[i];
        const double denom = std::max({1.0, std::abs(numeric), std::abs(a)});
        report.max_rel_err = std::max(report.max_rel_err, std::abs(numeric - a) / denom);
        ++report.checked;
    }
    return report;
}

// Random network whose pre-activations stay clear of the LeakyReLU kink for
// the given inputs, so finite differences see a smooth function.
inline Mlp2Params random_mlp_away_from_kinks(std::size_t d_in, std::size_t hidden,
                                             std::size_t d_out, double slope, Rng& rng,
                                             const Matrix& probe_inputs, double margin = 1e-3) {
    for (int attempt = 0; attempt < 200; ++attempt) {
        Mlp2Params p = Mlp2Params::init(d_in, hidden, d_out, slope, rng);
        Mlp2Cache cache;
        mlp2_forward(p, probe_inputs, &cache);
        bool clear = true;
        for (double u : cache.preact.values())
            if (std::abs(u) < margin) clear = false;
        if (clear) return p;
    }
    throw std::runtime_error("random_mlp_away_from_kinks: no kink-free network found");
}

inline Matrix random_inputs(std::size_t n, std::size_t d, Rng& rng) {
    return rng.normal_matrix(n, d);
}

}  // namespace tzsl::testing
