#include "tzsl/mlp.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace tzsl {

namespace {

constexpr double kGradNormFloor = 1e-12;

double leaky(double u, double slope) { return u >= 0.0 ? u : slope * u; }
double leaky_deriv(double u, double slope) { return u >= 0.0 ? 1.0 : slope; }

// FNV-1a over the raw parameter bytes; cheap staleness fingerprint.
std::uint64_t hash_matrix(std::uint64_t h, const Matrix& m) {
    for (double v : m.values()) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        for (int s = 0; s < 64; s += 8) {
            h ^= (bits >> s) & 0xFFu;
            h *= 0x100000001B3ULL;
        }
    }
    return h;
}

}  // namespace

Mlp2Params Mlp2Params::init(std::size_t d_in, std::size_t hidden, std::size_t d_out, double slope,
                            Rng& rng) {
    Mlp2Params p;
    p.W1 = rng.normal_matrix(hidden, d_in, 0.0, 1.0 / std::sqrt(static_cast<double>(d_in)));
    p.b1 = Matrix(1, hidden);
    p.W2 = rng.normal_matrix(d_out, hidden, 0.0, 1.0 / std::sqrt(static_cast<double>(hidden)));
    p.b2 = Matrix(1, d_out);
    p.slope = slope;
    p.validate();
    return p;
}

void Mlp2Params::validate() const {
    if (W1.rows() == 0 || W1.cols() == 0 || W2.rows() == 0)
        throw std::invalid_argument("Mlp2Params: empty layer");
    if (b1.rows() != 1 || b1.cols() != W1.rows())
        throw std::invalid_argument("Mlp2Params: b1 must be 1 x hidden");
    if (W2.cols() != W1.rows())
        throw std::invalid_argument("Mlp2Params: W2 columns must match hidden width");
    if (b2.rows() != 1 || b2.cols() != W2.rows())
        throw std::invalid_argument("Mlp2Params: b2 must be 1 x d_out");
    if (!(slope > 0.0 && slope <= 1.0))
        throw std::invalid_argument("Mlp2Params: slope must be in (0, 1]");
}

std::vector<Matrix*> Mlp2Params::param_list() { return {&W1, &b1, &W2, &b2}; }

std::vector<const Matrix*> Mlp2Params::param_list() const { return {&W1, &b1, &W2, &b2}; }

Mlp2Grads Mlp2Grads::zeros_like(const Mlp2Params& p) {
    Mlp2Grads g;
    g.dW1 = Matrix(p.W1.rows(), p.W1.cols());
    g.db1 = Matrix(p.b1.rows(), p.b1.cols());
    g.dW2 = Matrix(p.W2.rows(), p.W2.cols());
    g.db2 = Matrix(p.b2.rows(), p.b2.cols());
    return g;
}

Mlp2Grads& Mlp2Grads::operator*=(double s) {
    dW1 *= s;
    db1 *= s;
    dW2 *= s;
    db2 *= s;
    return *this;
}

void Mlp2Grads::accumulate(const Mlp2Grads& other, double scale) {
    axpy(dW1, scale, other.dW1);
    axpy(db1, scale, other.db1);
    axpy(dW2, scale, other.dW2);
    axpy(db2, scale, other.db2);
}

std::vector<const Matrix*> Mlp2Grads::list() const { return {&dW1, &db1, &dW2, &db2}; }

std::uint64_t mlp2_params_token(const Mlp2Params& p) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    h = hash_matrix(h, p.W1);
    h = hash_matrix(h, p.b1);
    h = hash_matrix(h, p.W2);
    h = hash_matrix(h, p.b2);
    return h;
}

Matrix mlp2_forward(const Mlp2Params& p, const Matrix& x, Mlp2Cache* cache) {
    p.validate();
    if (x.cols() != p.in_dim()) {
        std::ostringstream msg;
        msg << "mlp2_forward: input width " << x.cols() << " does not match d_in " << p.in_dim();
        throw std::invalid_argument(msg.str());
    }
    Matrix preact = add_row_broadcast(matmul_nt(x, p.W1), p.b1);  // n x hidden
    Matrix hidden = preact;
    for (double& v : hidden.values()) v = leaky(v, p.slope);
    Matrix y = add_row_broadcast(matmul_nt(hidden, p.W2), p.b2);  // n x d_out
    if (cache) {
        cache->input = x;
        cache->preact = std::move(preact);
        cache->hidden = hidden;
        cache->params_token = mlp2_params_token(p);
    }
    return y;
}

Mlp2Backward mlp2_grads(const Mlp2Params& p, const Mlp2Cache& cache, const Matrix& dY) {
    if (cache.params_token != mlp2_params_token(p))
        throw std::logic_error("mlp2_grads: stale cache (parameters changed since forward)");
    if (dY.rows() != cache.input.rows() || dY.cols() != p.out_dim())
        throw std::invalid_argument("mlp2_grads: dY shape does not match forward output");

    Mlp2Backward out;
    out.params.dW2 = matmul_tn(dY, cache.hidden);  // d_out x hidden
    out.params.db2 = col_sums(dY);
    Matrix dHidden = matmul(dY, p.W2);  // n x hidden
    Matrix dPre = dHidden;
    for (std::size_t i = 0; i < dPre.size(); ++i)
        dPre.values()[i] *= leaky_deriv(cache.preact.values()[i], p.slope);
    out.params.dW1 = matmul_tn(dPre, cache.input);  // hidden x d_in
    out.params.db1 = col_sums(dPre);
    out.input = matmul(dPre, p.W1);  // n x d_in
    return out;
}

Matrix critic_input_gradient(const Mlp2Params& p, const Matrix& x) {
    p.validate();
    if (p.out_dim() != 1)
        throw std::invalid_argument("critic_input_gradient: requires a scalar-output network");
    if (x.cols() != p.in_dim())
        throw std::invalid_argument("critic_input_gradient: input width mismatch");

    const Matrix preact = add_row_broadcast(matmul_nt(x, p.W1), p.b1);
    // wbar_i = phi'(u_i) o W2 row, grad_i = wbar_i * W1
    Matrix wbar(x.rows(), p.hidden_dim());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t h = 0; h < p.hidden_dim(); ++h)
            wbar(i, h) = leaky_deriv(preact(i, h), p.slope) * p.W2(0, h);
    return matmul(wbar, p.W1);  // n x d_in
}

GpResult gp_value_and_grads(const Mlp2Params& p, const Matrix& xhat, double lambda_gp,
                            std::size_t penalized_cols) {
    p.validate();
    if (p.out_dim() != 1)
        throw std::invalid_argument("gp_value_and_grads: requires a scalar-output network");
    if (xhat.cols() != p.in_dim())
        throw std::invalid_argument("gp_value_and_grads: input width mismatch");
    const std::size_t d_pen = penalized_cols == static_cast<std::size_t>(-1)
                                  ? p.in_dim()
                                  : penalized_cols;
    if (d_pen == 0 || d_pen > p.in_dim())
        throw std::invalid_argument("gp_value_and_grads: bad penalized column count");

    const std::size_t n = xhat.rows();
    const std::size_t hidden = p.hidden_dim();
    const Matrix preact = add_row_broadcast(matmul_nt(xhat, p.W1), p.b1);

    Matrix slopes(n, hidden);   // phi'(u)
    Matrix wbar(n, hidden);     // phi'(u) o w2
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t h = 0; h < hidden; ++h) {
            slopes(i, h) = leaky_deriv(preact(i, h), p.slope);
            wbar(i, h) = slopes(i, h) * p.W2(0, h);
        }
    const Matrix grad = matmul(wbar, p.W1);  // n x d_in, full input gradient

    GpResult out;
    out.grads = Mlp2Grads::zeros_like(p);
    if (n == 0) return out;

    // v_i = dP/dgrad_i restricted to the penalized block; the rest stays 0
    // so the condition columns never enter the norm.
    Matrix v(n, p.in_dim());
    double penalty = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double norm_sq = 0.0;
        for (std::size_t j = 0; j < d_pen; ++j) norm_sq += grad(i, j) * grad(i, j);
        double norm = std::sqrt(norm_sq);
        if (norm < kGradNormFloor) norm = kGradNormFloor;
        const double diff = norm - 1.0;
        penalty += diff * diff;
        const double coeff = lambda_gp * (2.0 / static_cast<double>(n)) * diff / norm;
        for (std::size_t j = 0; j < d_pen; ++j) v(i, j) = coeff * grad(i, j);
    }
    out.penalty = lambda_gp * penalty / static_cast<double>(n);

    out.grads.dW1 = matmul_tn(wbar, v);  // hidden x d_in
    // dW2_h = sum_i phi'(u_ih) (v_i . W1 row h)
    const Matrix vW1t = matmul_nt(v, p.W1);  // n x hidden
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t h = 0; h < hidden; ++h) out.grads.dW2(0, h) += slopes(i, h) * vW1t(i, h);
    // db1 and db2 stay zero: the penalty reaches them only through phi'',
    // which vanishes away from the kinks.
    return out;
}

}  // namespace tzsl
