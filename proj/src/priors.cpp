#include "tzsl/priors.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tzsl {

void ClassPrior::validate() const {
    if (p.empty()) throw std::invalid_argument("ClassPrior: empty");
    double total = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw std::invalid_argument("ClassPrior: negative or NaN entry");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("ClassPrior: entries do not sum to 1");
}

ClassPrior uniform_prior(std::size_t n_classes) {
    if (n_classes == 0) throw std::invalid_argument("uniform_prior: need at least one class");
    ClassPrior prior;
    prior.p.assign(n_classes, 1.0 / static_cast<double>(n_classes));
    return prior;
}

double prior_bias(const ClassPrior& estimated, const ClassPrior& ground_truth) {
    if (estimated.size() != ground_truth.size())
        throw std::invalid_argument("prior_bias: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < estimated.size(); ++i)
        acc += std::abs(estimated.p[i] - ground_truth.p[i]);
    return 100.0 * acc / static_cast<double>(estimated.size());
}

std::vector<std::size_t> sample_classes(const ClassPrior& prior, std::size_t n, Rng& rng) {
    prior.validate();
    std::vector<double> cdf(prior.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < prior.size(); ++i) {
        acc += prior.p[i];
        cdf[i] = acc;
    }
    cdf.back() = 1.0;

    std::vector<std::size_t> draws(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double u = rng.uniform();
        std::size_t i = 0;
        while (i + 1 < cdf.size() && u >= cdf[i]) ++i;
        draws[k] = i;
    }
    return draws;
}

std::vector<std::size_t> nearest_anchor_assignment(const Matrix& points, const Matrix& anchors) {
    if (points.cols() != anchors.cols())
        throw std::invalid_argument("nearest_anchor_assignment: dimension mismatch");
    if (anchors.rows() == 0)
        throw std::invalid_argument("nearest_anchor_assignment: no anchors");
    std::vector<std::size_t> assign(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const double* x = points.row_ptr(i);
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_k = 0;
        for (std::size_t k = 0; k < anchors.rows(); ++k) {
            const double* a = anchors.row_ptr(k);
            double d = 0.0;
            for (std::size_t j = 0; j < points.cols(); ++j) {
                const double diff = x[j] - a[j];
                d += diff * diff;
            }
            if (d < best) {
                best = d;
                best_k = k;
            }
        }
        assign[i] = best_k;
    }
    return assign;
}

ClassPrior estimate_prior_cpe(const Matrix& unlabeled, const Matrix& anchors, std::size_t iters) {
    if (iters == 0) throw std::invalid_argument("estimate_prior_cpe: iters must be >= 1");
    if (unlabeled.rows() == 0) throw std::invalid_argument("estimate_prior_cpe: empty pool");

    Matrix centers = anchors;
    std::vector<std::size_t> assign;
    for (std::size_t t = 0; t < iters; ++t) {
        assign = nearest_anchor_assignment(unlabeled, centers);
        if (t + 1 == iters) break;
        Matrix sums(centers.rows(), centers.cols());
        std::vector<std::size_t> counts(centers.rows(), 0);
        for (std::size_t i = 0; i < unlabeled.rows(); ++i) {
            ++counts[assign[i]];
            const double* x = unlabeled.row_ptr(i);
            double* s = sums.row_ptr(assign[i]);
            for (std::size_t j = 0; j < unlabeled.cols(); ++j) s[j] += x[j];
        }
        for (std::size_t k = 0; k < centers.rows(); ++k) {
            if (counts[k] == 0) continue;  // empty cluster keeps its anchor
            double* c = centers.row_ptr(k);
            const double* s = sums.row_ptr(k);
            for (std::size_t j = 0; j < centers.cols(); ++j)
                c[j] = s[j] / static_cast<double>(counts[k]);
        }
    }

    ClassPrior prior;
    prior.p.assign(centers.rows(), 0.0);
    for (std::size_t a : assign) prior.p[a] += 1.0;
    for (double& v : prior.p) v /= static_cast<double>(unlabeled.rows());
    return prior;
}

}  // namespace tzsl
