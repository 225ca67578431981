#include "tzsl/ver.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tzsl/io.hpp"

namespace tzsl {

KlResult kl_std_normal(const Matrix& mu, const Matrix& logvar) {
    if (!mu.same_shape(logvar)) detail::shape_fail("kl_std_normal", mu, logvar);
    const double n = static_cast<double>(mu.rows());
    KlResult out;
    out.d_mu = Matrix(mu.rows(), mu.cols());
    out.d_logvar = Matrix(mu.rows(), mu.cols());
    double acc = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double m = mu.values()[i];
        const double lv = logvar.values()[i];
        const double ev = std::exp(lv);
        acc += ev + m * m - 1.0 - lv;
        out.d_mu.values()[i] = m / n;
        out.d_logvar.values()[i] = 0.5 * (ev - 1.0) / n;
    }
    out.value = 0.5 * acc / n;
    return out;
}

Matrix reparameterize(const Matrix& mu, const Matrix& logvar, const Matrix& eps) {
    if (!mu.same_shape(logvar)) detail::shape_fail("reparameterize", mu, logvar);
    if (!mu.same_shape(eps)) detail::shape_fail("reparameterize (eps)", mu, eps);
    Matrix z = mu;
    for (std::size_t i = 0; i < z.size(); ++i)
        z.values()[i] += std::exp(0.5 * logvar.values()[i]) * eps.values()[i];
    return z;
}

Matrix reparameterize(const Matrix& mu, const Matrix& logvar, Rng& rng) {
    return reparameterize(mu, logvar, rng.normal_matrix(mu.rows(), mu.cols()));
}

namespace {

void clamp_logvar(Matrix& logvar, Matrix* mask = nullptr) {
    if (mask) *mask = Matrix(logvar.rows(), logvar.cols(), 1.0);
    for (std::size_t i = 0; i < logvar.size(); ++i) {
        double& v = logvar.values()[i];
        if (v < kLogVarClampLo) {
            v = kLogVarClampLo;
            if (mask) mask->values()[i] = 0.0;
        } else if (v > kLogVarClampHi) {
            v = kLogVarClampHi;
            if (mask) mask->values()[i] = 0.0;
        }
    }
}

}  // namespace

std::pair<Matrix, Matrix> ver_encode(const VerModel& m, const Matrix& x) {
    const Matrix y = mlp2_forward(m.encoder, x);
    Matrix mu = col_range(y, 0, m.d_z);
    Matrix logvar = col_range(y, m.d_z, 2 * m.d_z);
    clamp_logvar(logvar);
    return {std::move(mu), std::move(logvar)};
}

VerModel pretrain_ver(const Matrix& features, const VerTrainConfig& cfg, Rng& rng,
                      std::vector<double>* loss_trace) {
    if (cfg.epochs < 1) throw std::invalid_argument("pretrain_ver: epochs must be >= 1");
    if (features.rows() == 0) throw std::invalid_argument("pretrain_ver: empty feature pool");
    const std::size_t d_x = features.cols();
    const std::size_t d_z = cfg.d_z;

    VerModel model;
    model.d_z = d_z;
    model.encoder = Mlp2Params::init(d_x, cfg.hidden, 2 * d_z, cfg.slope, rng);
    model.decoder = Mlp2Params::init(d_z, cfg.hidden, d_x, cfg.slope, rng);

    std::vector<Matrix*> params = model.encoder.param_list();
    for (Matrix* p : model.decoder.param_list()) params.push_back(p);
    AdamWState opt(cfg.opt, {params.begin(), params.end()});

    const std::size_t n = features.rows();
    const std::size_t batch = std::min(cfg.batch, n);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto order = rng.permutation(n);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start + batch <= n; start += batch, ++batches) {
            std::vector<std::size_t> idx(order.begin() + start, order.begin() + start + batch);
            const Matrix xb = take_rows(features, idx);

            Mlp2Cache enc_cache;
            const Matrix enc_out = mlp2_forward(model.encoder, xb, &enc_cache);
            Matrix mu = col_range(enc_out, 0, d_z);
            Matrix logvar = col_range(enc_out, d_z, 2 * d_z);
            Matrix clamp_mask;
            clamp_logvar(logvar, &clamp_mask);

            const KlResult kl = kl_std_normal(mu, logvar);
            const Matrix eps = rng.normal_matrix(batch, d_z);
            const Matrix z = reparameterize(mu, logvar, eps);

            Mlp2Cache dec_cache;
            const Matrix recon = mlp2_forward(model.decoder, z, &dec_cache);

            // mean over rows of the squared reconstruction error
            double rec = 0.0;
            Matrix d_recon(batch, d_x);
            for (std::size_t i = 0; i < recon.size(); ++i) {
                const double diff = recon.values()[i] - xb.values()[i];
                rec += diff * diff;
                d_recon.values()[i] = 2.0 * diff / static_cast<double>(batch);
            }
            rec /= static_cast<double>(batch);

            const double loss = kl.value + rec;
            if (!std::isfinite(loss)) {
                std::ostringstream msg;
                msg << "pretrain_ver: non-finite loss at epoch " << epoch << " batch " << batches;
                throw std::runtime_error(msg.str());
            }
            epoch_loss += loss;

            const Mlp2Backward dec_back = mlp2_grads(model.decoder, dec_cache, d_recon);
            Matrix d_mu = kl.d_mu + dec_back.input;
            Matrix d_logvar = kl.d_logvar;
            for (std::size_t i = 0; i < d_logvar.size(); ++i)
                d_logvar.values()[i] += dec_back.input.values()[i] * eps.values()[i] * 0.5 *
                                        std::exp(0.5 * logvar.values()[i]);
            d_logvar = hadamard(d_logvar, clamp_mask);

            const Mlp2Backward enc_back =
                mlp2_grads(model.encoder, enc_cache, hconcat(d_mu, d_logvar));

            std::vector<const Matrix*> grads;
            for (const Matrix* g : enc_back.params.list()) grads.push_back(g);
            for (const Matrix* g : dec_back.params.list()) grads.push_back(g);
            adamw_step(opt, params, grads);
        }
        if (loss_trace) loss_trace->push_back(epoch_loss / static_cast<double>(batches));
    }

    model.frozen = true;
    return model;
}

Matrix ver_embed(const VerModel& m, const Matrix& x) {
    if (!m.frozen) throw std::logic_error("ver_embed: model must be frozen first");
    auto [mu, logvar] = ver_encode(m, x);
    return hconcat(x, mu, logvar);
}

std::uint64_t ver_checksum(const VerModel& m) {
    return mlp2_params_token(m.encoder) ^ (mlp2_params_token(m.decoder) * 0x9E3779B97F4A7C15ULL);
}

namespace {
constexpr const char* kCkptMagic = "IVGNCKPT1";

void write_ckpt_header(std::ofstream& out, const std::string& kind, const CheckpointMeta& meta) {
    out << kCkptMagic << "\n" << kind << "\n";
    out << std::hex << meta.fingerprint << " " << std::dec << meta.seed << "\n";
}

std::ifstream open_ckpt(const std::string& path, const std::string& kind, CheckpointMeta* meta) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::string magic, found_kind, meta_line;
    if (!std::getline(in, magic) || magic != kCkptMagic)
        throw std::runtime_error("not a checkpoint file: " + path);
    if (!std::getline(in, found_kind) || found_kind != kind)
        throw std::runtime_error("checkpoint kind mismatch: expected " + kind + ", found " +
                                 found_kind + " in " + path);
    if (!std::getline(in, meta_line)) throw std::runtime_error("checkpoint missing meta line");
    if (meta) {
        std::istringstream ms(meta_line);
        ms >> std::hex >> meta->fingerprint >> std::dec >> meta->seed;
    }
    return in;
}

}  // namespace

void save_ver(const VerModel& m, const std::string& path, const CheckpointMeta& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_ckpt_header(out, "ver", meta);
    out << m.d_z << " " << m.encoder.slope << " " << (m.frozen ? 1 : 0) << "\n";
    for (const Matrix* p : m.encoder.param_list()) write_matrix_record(out, *p);
    for (const Matrix* p : m.decoder.param_list()) write_matrix_record(out, *p);
    if (!out) throw std::runtime_error("write failure: " + path);
}

VerModel load_ver(const std::string& path, CheckpointMeta* meta) {
    std::ifstream in = open_ckpt(path, "ver", meta);
    std::string dims;
    if (!std::getline(in, dims)) throw std::runtime_error("ver checkpoint missing dims line");
    std::istringstream dl(dims);
    VerModel m;
    int frozen;
    double slope;
    if (!(dl >> m.d_z >> slope >> frozen))
        throw std::runtime_error("ver checkpoint: bad dims line");
    m.encoder.W1 = read_matrix_record(in, "encoder W1");
    m.encoder.b1 = read_matrix_record(in, "encoder b1");
    m.encoder.W2 = read_matrix_record(in, "encoder W2");
    m.encoder.b2 = read_matrix_record(in, "encoder b2");
    m.decoder.W1 = read_matrix_record(in, "decoder W1");
    m.decoder.b1 = read_matrix_record(in, "decoder b1");
    m.decoder.W2 = read_matrix_record(in, "decoder W2");
    m.decoder.b2 = read_matrix_record(in, "decoder b2");
    m.encoder.slope = slope;
    m.decoder.slope = slope;
    m.frozen = frozen != 0;
    m.encoder.validate();
    m.decoder.validate();
    return m;
}

}  // namespace tzsl
