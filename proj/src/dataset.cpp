#include "tzsl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tzsl/io.hpp"

namespace tzsl {

namespace {

std::size_t row_of(const std::vector<int>& ids, int class_id, const char* side) {
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (ids[i] == class_id) return i;
    std::ostringstream msg;
    msg << side << " class id " << class_id << " not found";
    throw std::invalid_argument(msg.str());
}

}  // namespace

std::size_t SplitDataset::seen_row_of(int class_id) const {
    return row_of(seen_ids, class_id, "seen");
}

std::size_t SplitDataset::unseen_row_of(int class_id) const {
    return row_of(unseen_ids, class_id, "unseen");
}

std::size_t TrainView::seen_row_of(int class_id) const {
    return row_of(seen_ids, class_id, "seen");
}

TrainView train_view(const SplitDataset& ds) {
    return TrainView{ds.Xs, ds.Ys, ds.Xu, ds.As, ds.Au, ds.seen_ids, ds.unseen_ids};
}

void SplitDataset::validate() const {
    if (seen_ids.empty() || unseen_ids.empty())
        throw std::invalid_argument("dataset: both class sides must be non-empty");
    std::set<int> seen_set(seen_ids.begin(), seen_ids.end());
    std::set<int> unseen_set(unseen_ids.begin(), unseen_ids.end());
    if (seen_set.size() != seen_ids.size() || unseen_set.size() != unseen_ids.size())
        throw std::invalid_argument("dataset: duplicate class ids");
    for (int id : unseen_ids)
        if (seen_set.count(id)) throw std::invalid_argument("dataset: class sets intersect");

    if (As.rows() != seen_ids.size() || Au.rows() != unseen_ids.size())
        throw std::invalid_argument("dataset: semantic row count does not match class count");
    if (As.cols() != Au.cols()) throw std::invalid_argument("dataset: semantic width mismatch");
    if (Xs.cols() != Xu.cols()) throw std::invalid_argument("dataset: feature width mismatch");
    if (Ys.size() != Xs.rows())
        throw std::invalid_argument("dataset: seen label count does not match feature rows");
    for (int y : Ys)
        if (!seen_set.count(y)) throw std::invalid_argument("dataset: seen label outside seen ids");
    if (Yu_hidden) {
        if (Yu_hidden->size() != Xu.rows())
            throw std::invalid_argument("dataset: hidden label count does not match unseen rows");
        for (int y : *Yu_hidden)
            if (!unseen_set.count(y))
                throw std::invalid_argument("dataset: hidden label outside unseen ids");
    }
    if (Xs_test.has_value() != Ys_test.has_value())
        throw std::invalid_argument("dataset: seen test features and labels must come together");
    if (Xs_test) {
        if (Xs_test->cols() != Xs.cols())
            throw std::invalid_argument("dataset: seen test feature width mismatch");
        if (Ys_test->size() != Xs_test->rows())
            throw std::invalid_argument("dataset: seen test label count mismatch");
        for (int y : *Ys_test)
            if (!seen_set.count(y))
                throw std::invalid_argument("dataset: seen test label outside seen ids");
    }
    require_finite(Xs, "Xs");
    require_finite(Xu, "Xu");
    require_finite(As, "As");
    require_finite(Au, "Au");
}

void SyntheticSpec::validate() const {
    if (d_x < 1 || d_a < 1 || d_z < 1) throw std::invalid_argument("synthetic spec: all dims >= 1");
    if (n_seen_classes < 1 || n_unseen_classes < 1 || samples_per_class < 1)
        throw std::invalid_argument("synthetic spec: class and sample counts >= 1");
    if (noise_std < 0.0) throw std::invalid_argument("synthetic spec: negative noise_std");
    if (!unseen_prior.p.empty()) {
        if (unseen_prior.size() != n_unseen_classes)
            throw std::invalid_argument("synthetic spec: prior length != unseen class count");
        double total = 0.0;
        for (double v : unseen_prior.p) {
            if (v < 0.0) throw std::invalid_argument("synthetic spec: degenerate prior entry < 0");
            total += v;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("synthetic spec: prior must sum to 1");
    }
}

double DensityOracle::pdf_unseen_class(const double* x, std::size_t u) const {
    if (noise_std <= 0.0)
        throw std::logic_error("DensityOracle: densities undefined for zero noise");
    const std::size_t d = class_means.cols();
    const double* mu = unseen_mean(u);
    double q = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double diff = x[j] - mu[j];
        q += diff * diff;
    }
    const double var = noise_std * noise_std;
    const double log_norm = -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi * var);
    return std::exp(log_norm - 0.5 * q / var);
}

double DensityOracle::pdf_unseen_marginal(const double* x) const {
    double acc = 0.0;
    for (std::size_t u = 0; u < unseen_ids.size(); ++u)
        acc += unseen_prior.p[u] * pdf_unseen_class(x, u);
    return acc;
}

Matrix DensityOracle::sample_unseen_marginal(std::size_t n, Rng& rng) const {
    const std::size_t d = class_means.cols();
    const auto classes = sample_classes(unseen_prior, n, rng);
    Matrix out(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* mu = unseen_mean(classes[i]);
        double* x = out.row_ptr(i);
        for (std::size_t j = 0; j < d; ++j) x[j] = mu[j] + noise_std * rng.normal();
    }
    return out;
}

std::pair<SplitDataset, DensityOracle> make_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    ClassPrior prior =
        spec.unseen_prior.p.empty() ? uniform_prior(spec.n_unseen_classes) : spec.unseen_prior;
    prior.validate();

    Rng rng(spec.seed);
    const std::size_t n_classes = spec.n_seen_classes + spec.n_unseen_classes;

    // Unit-norm class semantics, seen classes first.
    Matrix semantics(n_classes, spec.d_a);
    for (std::size_t c = 0; c < n_classes; ++c) {
        double norm_sq = 0.0;
        double* a = semantics.row_ptr(c);
        for (std::size_t j = 0; j < spec.d_a; ++j) {
            a[j] = rng.normal();
            norm_sq += a[j] * a[j];
        }
        const double norm = std::max(std::sqrt(norm_sq), 1e-12);
        for (std::size_t j = 0; j < spec.d_a; ++j) a[j] /= norm;
    }

    // Class mean = scale * M a_c with a fixed random linear map.
    const Matrix map =
        rng.normal_matrix(spec.d_x, spec.d_a, 0.0, 1.0 / std::sqrt(static_cast<double>(spec.d_a)));
    Matrix means = matmul_nt(semantics, map);  // n_classes x d_x
    means *= spec.semantic_map_scale;

    SplitDataset ds;
    for (std::size_t c = 0; c < spec.n_seen_classes; ++c) ds.seen_ids.push_back(static_cast<int>(c));
    for (std::size_t c = 0; c < spec.n_unseen_classes; ++c)
        ds.unseen_ids.push_back(static_cast<int>(spec.n_seen_classes + c));

    ds.As = take_rows(semantics, [&] {
        std::vector<std::size_t> idx(spec.n_seen_classes);
        for (std::size_t c = 0; c < idx.size(); ++c) idx[c] = c;
        return idx;
    }());
    ds.Au = take_rows(semantics, [&] {
        std::vector<std::size_t> idx(spec.n_unseen_classes);
        for (std::size_t c = 0; c < idx.size(); ++c) idx[c] = spec.n_seen_classes + c;
        return idx;
    }());

    const std::size_t n_s = spec.n_seen_classes * spec.samples_per_class;
    ds.Xs = Matrix(n_s, spec.d_x);
    ds.Ys.resize(n_s);
    std::size_t row = 0;
    for (std::size_t c = 0; c < spec.n_seen_classes; ++c) {
        const double* mu = means.row_ptr(c);
        for (std::size_t s = 0; s < spec.samples_per_class; ++s, ++row) {
            double* x = ds.Xs.row_ptr(row);
            for (std::size_t j = 0; j < spec.d_x; ++j) x[j] = mu[j] + spec.noise_std * rng.normal();
            ds.Ys[row] = ds.seen_ids[c];
        }
    }

    const std::size_t n_u = spec.n_unseen_classes * spec.samples_per_class;
    const auto unseen_classes = sample_classes(prior, n_u, rng);
    ds.Xu = Matrix(n_u, spec.d_x);
    std::vector<int> yu(n_u);
    for (std::size_t i = 0; i < n_u; ++i) {
        const std::size_t c = spec.n_seen_classes + unseen_classes[i];
        const double* mu = means.row_ptr(c);
        double* x = ds.Xu.row_ptr(i);
        for (std::size_t j = 0; j < spec.d_x; ++j) x[j] = mu[j] + spec.noise_std * rng.normal();
        yu[i] = ds.unseen_ids[unseen_classes[i]];
    }
    ds.Yu_hidden = std::move(yu);
    ds.validate();

    DensityOracle oracle;
    oracle.class_means = means;
    oracle.noise_std = spec.noise_std;
    oracle.seen_ids = ds.seen_ids;
    oracle.unseen_ids = ds.unseen_ids;
    oracle.unseen_prior = prior;
    return {std::move(ds), std::move(oracle)};
}

namespace {
constexpr const char* kMagic = "IVGN1";
}

void save_dataset(const SplitDataset& ds, const std::string& path) {
    ds.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << kMagic << "\n";
    out << ds.d_x() << " " << ds.d_a() << " " << ds.n_seen_classes() << " "
        << ds.n_unseen_classes() << " " << ds.Xs.rows() << " " << ds.Xu.rows() << " "
        << (ds.Xs_test ? ds.Xs_test->rows() : 0) << " " << (ds.Yu_hidden ? 1 : 0) << " "
        << (ds.Xs_test ? 1 : 0) << "\n";
    write_label_record(out, ds.seen_ids);
    write_label_record(out, ds.unseen_ids);
    write_matrix_record(out, ds.As);
    write_matrix_record(out, ds.Au);
    write_matrix_record(out, ds.Xs);
    write_label_record(out, ds.Ys);
    write_matrix_record(out, ds.Xu);
    if (ds.Yu_hidden) write_label_record(out, *ds.Yu_hidden);
    if (ds.Xs_test) {
        write_matrix_record(out, *ds.Xs_test);
        write_label_record(out, *ds.Ys_test);
    }
    if (!out) throw std::runtime_error("write failure: " + path);
}

SplitDataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    std::string magic;
    if (!std::getline(in, magic) || magic != kMagic)
        throw std::runtime_error("malformed header: expected magic \"" + std::string(kMagic) +
                                 "\", got \"" + magic + "\"");
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("malformed header: missing dims line");
    std::istringstream hs(header);
    std::size_t d_x, d_a, n_sc, n_uc, n_s, n_u, n_st;
    int has_yu, has_test;
    if (!(hs >> d_x >> d_a >> n_sc >> n_uc >> n_s >> n_u >> n_st >> has_yu >> has_test))
        throw std::runtime_error("malformed header: expected 9 fields, got \"" + header + "\"");

    SplitDataset ds;
    ds.seen_ids = read_label_record(in, "seen ids", n_sc);
    ds.unseen_ids = read_label_record(in, "unseen ids", n_uc);
    ds.As = read_matrix_record(in, "As", n_sc, d_a);
    ds.Au = read_matrix_record(in, "Au", n_uc, d_a);
    ds.Xs = read_matrix_record(in, "Xs", n_s, d_x);
    ds.Ys = read_label_record(in, "Ys", n_s);
    ds.Xu = read_matrix_record(in, "Xu", n_u, d_x);
    if (has_yu) ds.Yu_hidden = read_label_record(in, "Yu", n_u);
    if (has_test) {
        ds.Xs_test = read_matrix_record(in, "Xs_test", n_st, d_x);
        ds.Ys_test = read_label_record(in, "Ys_test", n_st);
    }
    ds.validate();
    return ds;
}

SplitDataset dataset_from_csv(const std::string& seen_csv, const std::string& unseen_csv,
                              const std::string& semantics_csv) {
    const auto sem_rows = read_csv(semantics_csv);
    if (sem_rows.empty() || sem_rows.front().size() < 2)
        throw std::runtime_error("semantics CSV: need rows of class_id followed by attributes");
    const std::size_t d_a = sem_rows.front().size() - 1;
    std::map<int, std::vector<double>> semantics;
    for (const auto& row : sem_rows) {
        const int id = static_cast<int>(row.front());
        if (semantics.count(id)) throw std::runtime_error("semantics CSV: duplicate class id");
        semantics[id] = std::vector<double>(row.begin() + 1, row.end());
    }

    const auto seen_rows = read_csv(seen_csv);
    const auto unseen_rows = read_csv(unseen_csv);
    if (seen_rows.empty() || unseen_rows.empty())
        throw std::runtime_error("feature CSV: no data rows");
    if (seen_rows.front().size() < 2) throw std::runtime_error("feature CSV: rows too short");
    const std::size_t d_x = seen_rows.front().size() - 1;
    if (unseen_rows.front().size() != d_x + 1)
        throw std::runtime_error("feature CSV: seen/unseen width mismatch");

    std::set<int> seen_set;
    for (const auto& row : seen_rows) seen_set.insert(static_cast<int>(row.back()));

    SplitDataset ds;
    ds.seen_ids.assign(seen_set.begin(), seen_set.end());
    for (const auto& [id, a] : semantics)
        if (!seen_set.count(id)) ds.unseen_ids.push_back(id);
    if (ds.unseen_ids.empty())
        throw std::runtime_error("CSV import: no unseen classes (all semantic ids are seen)");

    ds.As = Matrix(ds.seen_ids.size(), d_a);
    for (std::size_t c = 0; c < ds.seen_ids.size(); ++c) {
        const auto it = semantics.find(ds.seen_ids[c]);
        if (it == semantics.end())
            throw std::runtime_error("CSV import: seen class missing from semantics");
        for (std::size_t j = 0; j < d_a; ++j) ds.As(c, j) = it->second[j];
    }
    ds.Au = Matrix(ds.unseen_ids.size(), d_a);
    for (std::size_t c = 0; c < ds.unseen_ids.size(); ++c) {
        const auto& a = semantics.at(ds.unseen_ids[c]);
        for (std::size_t j = 0; j < d_a; ++j) ds.Au(c, j) = a[j];
    }

    ds.Xs = Matrix(seen_rows.size(), d_x);
    ds.Ys.resize(seen_rows.size());
    for (std::size_t i = 0; i < seen_rows.size(); ++i) {
        for (std::size_t j = 0; j < d_x; ++j) ds.Xs(i, j) = seen_rows[i][j];
        ds.Ys[i] = static_cast<int>(seen_rows[i].back());
    }

    ds.Xu = Matrix(unseen_rows.size(), d_x);
    std::vector<int> yu(unseen_rows.size());
    bool labels_known = true;
    for (std::size_t i = 0; i < unseen_rows.size(); ++i) {
        for (std::size_t j = 0; j < d_x; ++j) ds.Xu(i, j) = unseen_rows[i][j];
        yu[i] = static_cast<int>(unseen_rows[i].back());
        if (yu[i] < 0) labels_known = false;
    }
    if (labels_known) ds.Yu_hidden = std::move(yu);
    ds.validate();
    return ds;
}

SplitDataset holdout_seen(const SplitDataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw std::invalid_argument("holdout_seen: fraction must be in (0, 1)");
    ds.validate();

    Rng rng(seed);
    std::vector<std::size_t> train_idx, test_idx;
    for (int class_id : ds.seen_ids) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < ds.Ys.size(); ++i)
            if (ds.Ys[i] == class_id) members.push_back(i);
        if (members.size() < 2) {
            std::ostringstream msg;
            msg << "holdout_seen: class " << class_id << " has fewer than 2 samples";
            throw std::invalid_argument(msg.str());
        }
        const auto perm = rng.permutation(members.size());
        std::size_t n_test = static_cast<std::size_t>(
            std::llround(fraction * static_cast<double>(members.size())));
        n_test = std::clamp<std::size_t>(n_test, 1, members.size() - 1);
        for (std::size_t k = 0; k < members.size(); ++k) {
            if (k < n_test)
                test_idx.push_back(members[perm[k]]);
            else
                train_idx.push_back(members[perm[k]]);
        }
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());

    SplitDataset out = ds;
    out.Xs = take_rows(ds.Xs, train_idx);
    out.Ys.clear();
    for (std::size_t i : train_idx) out.Ys.push_back(ds.Ys[i]);
    out.Xs_test = take_rows(ds.Xs, test_idx);
    std::vector<int> ys_test;
    for (std::size_t i : test_idx) ys_test.push_back(ds.Ys[i]);
    out.Ys_test = std::move(ys_test);
    out.validate();
    return out;
}

}  // namespace tzsl
