#include "tzsl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace tzsl {

namespace {
constexpr double kMarginalTol = 1e-12;
constexpr double kVarianceFloor = 1e-6;
}  // namespace

void DiscreteToy::validate() const {
    if (outcomes == 0 || classes == 0) throw std::invalid_argument("DiscreteToy: empty model");
    if (p_r_y.size() != classes || p_g_y.size() != classes)
        throw std::invalid_argument("DiscreteToy: prior length mismatch");
    if (p_r_x_given_y.rows() != classes || p_r_x_given_y.cols() != outcomes ||
        !p_r_x_given_y.same_shape(p_g_x_given_y))
        throw std::invalid_argument("DiscreteToy: conditional table shape mismatch");

    const auto check_simplex = [](const double* v, std::size_t n, const char* what) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (v[i] < -kMarginalTol) throw std::invalid_argument(std::string(what) + ": negative");
            total += v[i];
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument(std::string(what) + ": does not sum to 1");
    };
    check_simplex(p_r_y.data(), classes, "DiscreteToy p_r(y)");
    check_simplex(p_g_y.data(), classes, "DiscreteToy p_g(y)");
    for (std::size_t c = 0; c < classes; ++c) {
        check_simplex(p_r_x_given_y.row_ptr(c), outcomes, "DiscreteToy p_r(x|y) row");
        check_simplex(p_g_x_given_y.row_ptr(c), outcomes, "DiscreteToy p_g(x|y) row");
    }
}

std::vector<double> DiscreteToy::real_marginal() const {
    std::vector<double> m(outcomes, 0.0);
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t x = 0; x < outcomes; ++x) m[x] += p_r_y[c] * p_r_x_given_y(c, x);
    return m;
}

std::vector<double> DiscreteToy::gen_marginal() const {
    std::vector<double> m(outcomes, 0.0);
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t x = 0; x < outcomes; ++x) m[x] += p_g_y[c] * p_g_x_given_y(c, x);
    return m;
}

double DiscreteToy::marginal_gap(std::size_t* worst_outcome) const {
    const auto mr = real_marginal();
    const auto mg = gen_marginal();
    double gap = 0.0;
    for (std::size_t x = 0; x < outcomes; ++x) {
        const double d = std::abs(mr[x] - mg[x]);
        if (d > gap) {
            gap = d;
            if (worst_outcome) *worst_outcome = x;
        }
    }
    return gap;
}

double ApeReport::class_mean_conditional() const {
    if (conditional_route.empty()) return 0.0;
    double acc = 0.0;
    for (double v : conditional_route) acc += v;
    return acc / static_cast<double>(conditional_route.size());
}

ApeReport ape_discrete(const DiscreteToy& toy) {
    toy.validate();
    std::size_t worst = 0;
    const double gap = toy.marginal_gap(&worst);
    if (gap > kMarginalTol) {
        std::ostringstream msg;
        msg << "ape_discrete: marginals differ by " << gap << " at outcome " << worst
            << "; the identity premise p_r(x) = p_g(x) does not hold";
        throw std::invalid_argument(msg.str());
    }
    const auto marginal = toy.real_marginal();

    ApeReport report;
    report.conditional_route.assign(toy.classes, 0.0);
    report.posterior_route.assign(toy.classes, 0.0);
    for (std::size_t c = 0; c < toy.classes; ++c) {
        if (toy.p_r_y[c] <= 0.0 || toy.p_g_y[c] <= 0.0)
            throw std::invalid_argument("ape_discrete: class priors must be positive");
        for (std::size_t x = 0; x < toy.outcomes; ++x) {
            const double e1 = std::abs(toy.p_r_x_given_y(c, x) - toy.p_g_x_given_y(c, x));
            double e2 = 0.0;
            if (marginal[x] > 0.0) {
                const double post_r = toy.p_r_y[c] * toy.p_r_x_given_y(c, x) / marginal[x];
                const double post_g = toy.p_g_y[c] * toy.p_g_x_given_y(c, x) / marginal[x];
                e2 = std::abs(post_r * toy.p_g_y[c] - post_g * toy.p_r_y[c]) /
                     (toy.p_r_y[c] * toy.p_g_y[c]) * marginal[x];
            }
            report.conditional_route[c] += e1;
            report.posterior_route[c] += e2;
            report.route_discrepancy = std::max(report.route_discrepancy, std::abs(e1 - e2));
        }
    }
    return report;
}

double ape_identity_check(const DiscreteToy& toy) {
    return ape_discrete(toy).route_discrepancy;
}

DiscreteToy random_marginal_matched_toy(std::size_t outcomes, std::size_t classes, Rng& rng) {
    if (outcomes < 2 || classes < 2)
        throw std::invalid_argument("random_marginal_matched_toy: need >= 2 outcomes and classes");

    const auto random_simplex = [&](std::size_t n, double lo) {
        std::vector<double> v(n);
        double total = 0.0;
        for (double& x : v) {
            x = rng.uniform(lo, 1.0);
            total += x;
        }
        for (double& x : v) x /= total;
        return v;
    };

    DiscreteToy toy;
    toy.outcomes = outcomes;
    toy.classes = classes;
    toy.p_r_y = random_simplex(classes, 0.1);
    toy.p_g_y = random_simplex(classes, 0.1);
    toy.p_r_x_given_y = Matrix(classes, outcomes);
    for (std::size_t c = 0; c < classes; ++c) {
        const auto row = random_simplex(outcomes, 0.05);
        for (std::size_t x = 0; x < outcomes; ++x) toy.p_r_x_given_y(c, x) = row[x];
    }
    const auto marginal = toy.real_marginal();

    // Zero-sum perturbations per class; the last class absorbs the rest so
    // that sum_c p_g(c) delta_c = 0 and the generated marginal matches.
    Matrix delta(classes, outcomes);
    for (std::size_t c = 0; c + 1 < classes; ++c) {
        double mean_d = 0.0;
        for (std::size_t x = 0; x < outcomes; ++x) {
            delta(c, x) = rng.uniform(-1.0, 1.0);
            mean_d += delta(c, x);
        }
        mean_d /= static_cast<double>(outcomes);
        for (std::size_t x = 0; x < outcomes; ++x) delta(c, x) -= mean_d;
    }
    for (std::size_t x = 0; x < outcomes; ++x) {
        double acc = 0.0;
        for (std::size_t c = 0; c + 1 < classes; ++c) acc += toy.p_g_y[c] * delta(c, x);
        delta(classes - 1, x) = -acc / toy.p_g_y[classes - 1];
    }

    double t_max = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t x = 0; x < outcomes; ++x)
            if (delta(c, x) < 0.0) t_max = std::min(t_max, marginal[x] / (-delta(c, x)));
    const double t = std::isfinite(t_max) ? 0.5 * t_max : 0.0;

    toy.p_g_x_given_y = Matrix(classes, outcomes);
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t x = 0; x < outcomes; ++x)
            toy.p_g_x_given_y(c, x) = marginal[x] + t * delta(c, x);
    toy.validate();
    return toy;
}

ApeReport ape_gaussian(const DensityOracle& oracle, const GeneratorModel& gen, const Matrix& Au,
                       const RegressorModel* reg, const VerModel* ver, std::size_t fit_samples,
                       std::size_t mc_budget, Rng& rng) {
    const std::size_t k = oracle.unseen_ids.size();
    const std::size_t d = oracle.class_means.cols();
    if (Au.rows() != k) throw std::invalid_argument("ape_gaussian: Au row count mismatch");
    if (fit_samples < 2 || mc_budget < 1)
        throw std::invalid_argument("ape_gaussian: need fit_samples >= 2 and mc_budget >= 1");

    ApeReport report;
    report.conditional_route.assign(k, 0.0);
    report.posterior_route.assign(k, 0.0);

    // Class conditions: true semantics, or the mean regressed semantic of
    // real class samples in the pseudo-conditional variant.
    Matrix conditions = Au;
    if (reg) {
        if (!ver) throw std::invalid_argument("ape_gaussian: regressor requires the VER model");
        for (std::size_t u = 0; u < k; ++u) {
            Matrix real(fit_samples, d);
            for (std::size_t i = 0; i < fit_samples; ++i) {
                const double* mu = oracle.unseen_mean(u);
                double* x = real.row_ptr(i);
                for (std::size_t j = 0; j < d; ++j) x[j] = mu[j] + oracle.noise_std * rng.normal();
            }
            const Matrix sem = regress(*reg, *ver, real);
            for (std::size_t j = 0; j < sem.cols(); ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < sem.rows(); ++i) acc += sem(i, j);
                conditions(u, j) = acc / static_cast<double>(sem.rows());
            }
        }
    }

    // Diagonal Gaussian maximum-likelihood fit per class.
    Matrix fit_mean(k, d), fit_var(k, d);
    for (std::size_t u = 0; u < k; ++u) {
        const Matrix samples = synthesize(gen, take_row(conditions, u), fit_samples, rng);
        for (std::size_t j = 0; j < d; ++j) {
            double m = 0.0;
            for (std::size_t i = 0; i < samples.rows(); ++i) m += samples(i, j);
            m /= static_cast<double>(samples.rows());
            double v = 0.0;
            for (std::size_t i = 0; i < samples.rows(); ++i) {
                const double diff = samples(i, j) - m;
                v += diff * diff;
            }
            v /= static_cast<double>(samples.rows());
            if (v < kVarianceFloor) {
                v = kVarianceFloor;
                report.variance_floored = true;
            }
            fit_mean(u, j) = m;
            fit_var(u, j) = v;
        }
    }

    const auto log_pdf_fit = [&](const double* x, std::size_t u) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = x[j] - fit_mean(u, j);
            acc += -0.5 * (std::log(2.0 * std::numbers::pi * fit_var(u, j)) +
                           diff * diff / fit_var(u, j));
        }
        return acc;
    };

    const Matrix mc = oracle.sample_unseen_marginal(mc_budget, rng);
    const double inv_mc = 1.0 / static_cast<double>(mc_budget);
    std::vector<double> log_g(k);
    for (std::size_t i = 0; i < mc_budget; ++i) {
        const double* x = mc.row_ptr(i);
        const double p_r_x = oracle.pdf_unseen_marginal(x);
        double max_log = -std::numeric_limits<double>::infinity();
        for (std::size_t u = 0; u < k; ++u) {
            log_g[u] = log_pdf_fit(x, u);
            // generated class weights are uniform: equal per-class fits
            max_log = std::max(max_log, log_g[u] - std::log(static_cast<double>(k)));
        }
        double gen_marginal = 0.0;
        for (std::size_t u = 0; u < k; ++u)
            gen_marginal += std::exp(log_g[u] - std::log(static_cast<double>(k)) - max_log);
        const double log_gen_marginal = std::log(gen_marginal) + max_log;

        for (std::size_t u = 0; u < k; ++u) {
            const double p_r_cond = oracle.pdf_unseen_class(x, u);
            const double p_g_cond = std::exp(log_g[u]);
            report.conditional_route[u] += std::abs(p_r_cond - p_g_cond) * inv_mc;
            // |p_r(x|y) - p_g(x|y) p_r(x) / p_g(x)|, the posterior-route
            // expression with each side's own marginal; ratio in log space.
            const double ratio = std::exp(log_g[u] + std::log(std::max(p_r_x, 1e-300)) -
                                          log_gen_marginal);
            report.posterior_route[u] += std::abs(p_r_cond - ratio) * inv_mc;
        }
    }
    for (std::size_t u = 0; u < k; ++u)
        report.route_discrepancy =
            std::max(report.route_discrepancy,
                     std::abs(report.conditional_route[u] - report.posterior_route[u]));
    return report;
}

namespace {

double run_cell(const SplitDataset& ds, const VerModel& ver, const RegressorModel& reg,
                const StagePriors& priors, const PipelineStageConfigs& cfg, std::uint64_t seed) {
    Rng rng(seed);
    auto [gen, critics] = train_generator(train_view(ds), ver, reg, priors, cfg.gen, rng);
    SoftmaxClassifier clf = train_fzsl(gen, reg, ver, ds, cfg.fzsl, rng);
    const EvalReport report = evaluate(clf, reg, ver, ds, cfg.fzsl.mode);
    return report.T1;
}

}  // namespace

std::vector<ChainCell> chain_experiment(const SplitDataset& ds, const VerModel& ver,
                                        const RegressorModel& reg,
                                        const std::vector<NamedPrior>& grid,
                                        const PipelineStageConfigs& cfg, std::uint64_t seed) {
    std::vector<ChainCell> cells;
    for (const auto& [g_name, g_prior] : grid) {
        for (const auto& [d_name, d_prior] : grid) {
            ChainCell cell;
            cell.g_prior = g_name;
            cell.d_prior = d_name;
            cell.t1 = run_cell(ds, ver, reg, StagePriors{g_prior, d_prior}, cfg, seed);
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

std::vector<SweepRow> prior_sweep(const SplitDataset& ds, const VerModel& ver,
                                  const std::vector<NamedPrior>& priors,
                                  const ClassPrior& ground_truth, const PipelineStageConfigs& cfg,
                                  std::uint64_t seed) {
    std::vector<SweepRow> rows;
    for (const auto& [name, prior] : priors) {
        SweepRow row;
        row.prior_name = name;
        row.prior_bias_pct = prior_bias(prior, ground_truth);

        Rng rng(seed);
        RegressorModel reg = train_regressor(train_view(ds), ver, prior, cfg.reg, rng);
        row.t1 = run_cell(ds, ver, reg, StagePriors{prior, prior}, cfg, seed + 1);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace tzsl
