#include "tzsl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace tzsl {

Matrix multimodal_input(const Matrix& x, const RegressorModel& reg, const VerModel& ver) {
    return hconcat(x, regress(reg, ver, x), regressor_hidden(reg, ver, x));
}

namespace {

// Softmax cross-entropy over logits; returns mean loss and fills d_logits.
double softmax_ce(const Matrix& logits, const std::vector<std::size_t>& label_cols,
                  Matrix& d_logits) {
    const std::size_t n = logits.rows();
    const std::size_t k = logits.cols();
    d_logits = Matrix(n, k);
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = logits.row_ptr(i);
        double mx = row[0];
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < k; ++j) denom += std::exp(row[j] - mx);
        const double log_denom = std::log(denom) + mx;
        loss += (log_denom - row[label_cols[i]]) * inv_n;
        double* d = d_logits.row_ptr(i);
        for (std::size_t j = 0; j < k; ++j) d[j] = std::exp(row[j] - log_denom) * inv_n;
        d[label_cols[i]] -= inv_n;
    }
    return loss;
}

SoftmaxClassifier train_softmax(const Matrix& inputs, const std::vector<std::size_t>& label_cols,
                                const std::vector<int>& class_map, std::size_t epochs,
                                std::size_t batch, const AdamWConfig& opt_cfg, Rng& rng) {
    SoftmaxClassifier clf;
    clf.class_map = class_map;
    clf.W = Matrix(class_map.size(), inputs.cols());
    clf.b = Matrix(1, class_map.size());

    std::vector<Matrix*> params = {&clf.W, &clf.b};
    AdamWState opt(opt_cfg, {params.begin(), params.end()});

    const std::size_t n = inputs.rows();
    const std::size_t b = std::min(batch, n);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        const auto order = rng.permutation(n);
        for (std::size_t start = 0; start + b <= n; start += b) {
            std::vector<std::size_t> idx(order.begin() + start, order.begin() + start + b);
            const Matrix xb = take_rows(inputs, idx);
            std::vector<std::size_t> yb(b);
            for (std::size_t i = 0; i < b; ++i) yb[i] = label_cols[idx[i]];

            const Matrix logits = add_row_broadcast(matmul_nt(xb, clf.W), clf.b);
            Matrix d_logits;
            const double loss = softmax_ce(logits, yb, d_logits);
            if (!std::isfinite(loss)) {
                std::ostringstream msg;
                msg << "train_fzsl: non-finite loss at epoch " << epoch;
                throw std::runtime_error(msg.str());
            }
            const Matrix dW = matmul_tn(d_logits, xb);
            const Matrix db = col_sums(d_logits);
            adamw_step(opt, params, {&dW, &db});
        }
    }
    return clf;
}

}  // namespace

SoftmaxClassifier train_fzsl(const GeneratorModel& gen, const RegressorModel& reg,
                             const VerModel& ver, const SplitDataset& ds, const FzslConfig& cfg,
                             Rng& rng) {
    if (cfg.n_syn == 0)
        throw std::invalid_argument("train_fzsl: n_syn must be positive (no unseen training data)");
    if (cfg.mode == EvalMode::TGZSL && !ds.Xs_test)
        throw std::invalid_argument("train_fzsl: TGZSL mode requires a seen holdout split");

    const Matrix synth = synthesize(gen, ds.Au, cfg.n_syn, rng);
    Matrix train_x = multimodal_input(synth, reg, ver);

    std::vector<int> class_map;
    std::vector<std::size_t> label_cols;
    label_cols.reserve(synth.rows());
    if (cfg.mode == EvalMode::TGZSL) {
        class_map = ds.seen_ids;
        class_map.insert(class_map.end(), ds.unseen_ids.begin(), ds.unseen_ids.end());
        const std::size_t offset = ds.seen_ids.size();
        for (std::size_t c = 0; c < ds.unseen_ids.size(); ++c)
            for (std::size_t k = 0; k < cfg.n_syn; ++k) label_cols.push_back(offset + c);
        const Matrix seen_x = multimodal_input(ds.Xs, reg, ver);
        train_x = vconcat(train_x, seen_x);
        for (int y : ds.Ys) label_cols.push_back(ds.seen_row_of(y));
    } else {
        class_map = ds.unseen_ids;
        for (std::size_t c = 0; c < ds.unseen_ids.size(); ++c)
            for (std::size_t k = 0; k < cfg.n_syn; ++k) label_cols.push_back(c);
    }

    return train_softmax(train_x, label_cols, class_map, cfg.epochs, cfg.batch, cfg.opt, rng);
}

std::pair<double, std::vector<double>> top1_per_class(const std::vector<int>& preds,
                                                      const std::vector<int>& labels,
                                                      const std::vector<int>& classes,
                                                      std::vector<int>* excluded) {
    if (preds.size() != labels.size())
        throw std::invalid_argument("top1_per_class: prediction/label count mismatch");
    std::map<int, std::pair<std::size_t, std::size_t>> tally;  // class -> (correct, total)
    for (int c : classes) tally[c] = {0, 0};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto it = tally.find(labels[i]);
        if (it == tally.end())
            throw std::invalid_argument("top1_per_class: label outside evaluation classes");
        ++it->second.second;
        if (preds[i] == labels[i]) ++it->second.first;
    }
    std::vector<double> per_class;
    double acc = 0.0;
    std::size_t populated = 0;
    for (int c : classes) {
        const auto& [correct, total] = tally[c];
        if (total == 0) {
            if (excluded) excluded->push_back(c);
            per_class.push_back(0.0);
            continue;
        }
        const double a = static_cast<double>(correct) / static_cast<double>(total);
        per_class.push_back(a);
        acc += a;
        ++populated;
    }
    const double t1 = populated == 0 ? 0.0 : acc / static_cast<double>(populated);
    return {t1, per_class};
}

double harmonic_mean(double u, double s) {
    if (u < 0.0 || s < 0.0 || u > 100.0 || s > 100.0)
        throw std::invalid_argument("harmonic_mean: inputs must be percentages in [0, 100]");
    if (u + s == 0.0) return 0.0;
    return 2.0 * u * s / (u + s);
}

std::vector<int> classify(const SoftmaxClassifier& clf, const Matrix& inputs) {
    const Matrix logits = add_row_broadcast(matmul_nt(inputs, clf.W), clf.b);
    std::vector<int> preds(inputs.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const double* row = logits.row_ptr(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < logits.cols(); ++j)
            if (row[j] > row[best]) best = j;
        preds[i] = clf.class_map[best];
    }
    return preds;
}

namespace {

Matrix confusion_matrix(const std::vector<int>& preds, const std::vector<int>& labels,
                        const std::vector<int>& classes) {
    std::map<int, std::size_t> col;
    for (std::size_t i = 0; i < classes.size(); ++i) col[classes[i]] = i;
    Matrix out(classes.size(), classes.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto ti = col.find(labels[i]);
        const auto pi = col.find(preds[i]);
        if (ti == col.end()) continue;
        if (pi != col.end()) out(ti->second, pi->second) += 1.0;
    }
    return out;
}

}  // namespace

EvalReport evaluate(const SoftmaxClassifier& clf, const RegressorModel& reg, const VerModel& ver,
                    const SplitDataset& ds, EvalMode mode) {
    if (!ds.Yu_hidden)
        throw std::runtime_error("evaluate: unseen labels unavailable, evaluation impossible");

    EvalReport report;
    report.classes = clf.class_map;

    const Matrix unseen_inputs = multimodal_input(ds.Xu, reg, ver);
    const std::vector<int> unseen_preds = classify(clf, unseen_inputs);

    if (mode == EvalMode::TZSL) {
        auto [t1, per_class] =
            top1_per_class(unseen_preds, *ds.Yu_hidden, clf.class_map, &report.empty_classes);
        report.T1 = t1;
        report.per_class_acc = std::move(per_class);
        report.confusion = confusion_matrix(unseen_preds, *ds.Yu_hidden, clf.class_map);
        return report;
    }

    if (!ds.Xs_test)
        throw std::runtime_error("evaluate: TGZSL mode requires a seen holdout split");

    const Matrix seen_inputs = multimodal_input(*ds.Xs_test, reg, ver);
    const std::vector<int> seen_preds = classify(clf, seen_inputs);

    std::vector<int> all_preds = unseen_preds;
    all_preds.insert(all_preds.end(), seen_preds.begin(), seen_preds.end());
    std::vector<int> all_labels = *ds.Yu_hidden;
    all_labels.insert(all_labels.end(), ds.Ys_test->begin(), ds.Ys_test->end());

    auto [t1, per_class] =
        top1_per_class(all_preds, all_labels, clf.class_map, &report.empty_classes);
    report.T1 = t1;
    report.per_class_acc = std::move(per_class);
    report.confusion = confusion_matrix(all_preds, all_labels, clf.class_map);

    auto [u, u_pc] = top1_per_class(unseen_preds, *ds.Yu_hidden, ds.unseen_ids);
    auto [s, s_pc] = top1_per_class(seen_preds, *ds.Ys_test, ds.seen_ids);
    report.U = 100.0 * u;
    report.S = 100.0 * s;
    report.H = harmonic_mean(*report.U, *report.S);
    return report;
}

double unseen_semantic_mae(const RegressorModel& reg, const VerModel& ver,
                           const SplitDataset& ds) {
    if (!ds.Yu_hidden)
        throw std::runtime_error("unseen_semantic_mae: unseen labels unavailable");
    const Matrix pred = regress(reg, ver, ds.Xu);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.rows(); ++i) {
        const std::size_t row = ds.unseen_row_of((*ds.Yu_hidden)[i]);
        for (std::size_t j = 0; j < pred.cols(); ++j)
            acc += std::abs(pred(i, j) - ds.Au(row, j));
    }
    return acc / static_cast<double>(pred.size());
}

}  // namespace tzsl
