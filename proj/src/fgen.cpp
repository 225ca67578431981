#include "tzsl/fgen.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "tzsl/io.hpp"
#include "tzsl/wgan.hpp"

namespace tzsl {

namespace {

void clamp_logvar_with_mask(Matrix& logvar, Matrix& mask) {
    mask = Matrix(logvar.rows(), logvar.cols(), 1.0);
    for (std::size_t i = 0; i < logvar.size(); ++i) {
        double& v = logvar.values()[i];
        if (v < kLogVarClampLo) {
            v = kLogVarClampLo;
            mask.values()[i] = 0.0;
        } else if (v > kLogVarClampHi) {
            v = kLogVarClampHi;
            mask.values()[i] = 0.0;
        }
    }
}

}  // namespace

SeenVaeForward seen_vae_forward(const GeneratorModel& m, const Matrix& xs, const Matrix& as,
                                Rng& rng) {
    if (xs.rows() != as.rows()) detail::shape_fail("seen_vae_forward", xs, as);
    SeenVaeForward f;
    const Matrix enc_out = mlp2_forward(m.E, hconcat(xs, as), &f.enc_cache);
    f.mu = col_range(enc_out, 0, m.d_z);
    f.logvar = col_range(enc_out, m.d_z, 2 * m.d_z);
    clamp_logvar_with_mask(f.logvar, f.clamp_mask);
    f.eps = rng.normal_matrix(xs.rows(), m.d_z);
    f.z = reparameterize(f.mu, f.logvar, f.eps);
    f.fake = mlp2_forward(m.G, hconcat(f.z, as), &f.gen_cache);
    return f;
}

void seen_vae_backward(const GeneratorModel& m, const SeenVaeForward& f, const Matrix& d_fake,
                       const Matrix& d_mu_extra, const Matrix& d_logvar_extra, Mlp2Grads& dE,
                       Mlp2Grads& dG) {
    const Mlp2Backward gen_back = mlp2_grads(m.G, f.gen_cache, d_fake);
    dG.accumulate(gen_back.params);

    const Matrix d_z = col_range(gen_back.input, 0, m.d_z);
    Matrix d_mu = d_mu_extra + d_z;
    Matrix d_logvar = d_logvar_extra;
    for (std::size_t i = 0; i < d_logvar.size(); ++i)
        d_logvar.values()[i] +=
            d_z.values()[i] * f.eps.values()[i] * 0.5 * std::exp(0.5 * f.logvar.values()[i]);
    d_logvar = hadamard(d_logvar, f.clamp_mask);

    const Mlp2Backward enc_back = mlp2_grads(m.E, f.enc_cache, hconcat(d_mu, d_logvar));
    dE.accumulate(enc_back.params);
}

VaeLossResult loss_vae_s(const GeneratorModel& m, const Matrix& xs, const Matrix& as, Rng& rng) {
    const SeenVaeForward f = seen_vae_forward(m, xs, as, rng);
    const KlResult kl = kl_std_normal(f.mu, f.logvar);

    const double inv_n = 1.0 / static_cast<double>(xs.rows());
    double rec = 0.0;
    Matrix d_fake(xs.rows(), xs.cols());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double diff = f.fake.values()[i] - xs.values()[i];
        rec += diff * diff;
        d_fake.values()[i] = 2.0 * diff * inv_n;
    }
    rec *= inv_n;

    VaeLossResult out;
    out.value = kl.value + rec;
    out.dE = Mlp2Grads::zeros_like(m.E);
    out.dG = Mlp2Grads::zeros_like(m.G);
    seen_vae_backward(m, f, d_fake, kl.d_mu, kl.d_logvar, out.dE, out.dG);
    return out;
}

GanLossResult loss_gan_s(const CriticSet& c, const GeneratorModel& m, const Matrix& xs,
                         const Matrix& as, Rng& rng, double lambda_gp) {
    const SeenVaeForward f = seen_vae_forward(m, xs, as, rng);
    const CriticTerms terms = wgan_critic_terms(c.D_s, hconcat(xs, as), hconcat(f.fake, as),
                                                lambda_gp, xs.cols(), rng);
    GanLossResult out;
    out.critic_objective = terms.critic_objective;
    out.gen_objective = terms.gen_objective;
    out.d_critic = terms.d_critic;
    out.d_fake = col_range(terms.d_fake_input, 0, xs.cols());
    return out;
}

GanLossResult loss_gan_u1(const CriticSet& c, const GeneratorModel& m, const Matrix& xu,
                          const Matrix& a_sampled, Rng& rng, double lambda_gp) {
    if (xu.rows() != a_sampled.rows()) detail::shape_fail("loss_gan_u1", xu, a_sampled);
    const Matrix z = rng.normal_matrix(xu.rows(), m.d_z);
    const Matrix fake = mlp2_forward(m.G, hconcat(z, a_sampled));
    const CriticTerms terms = wgan_critic_terms(c.D_u, xu, fake, lambda_gp, xu.cols(), rng);
    GanLossResult out;
    out.critic_objective = terms.critic_objective;
    out.gen_objective = terms.gen_objective;
    out.d_critic = terms.d_critic;
    out.d_fake = terms.d_fake_input;
    return out;
}

GanLossResult loss_gan_u2_pfa(const CriticSet& c, const GeneratorModel& m,
                              const RegressorModel& reg, const VerModel& ver, const Matrix& xu,
                              Rng& rng, double lambda_gp) {
    if (!reg.frozen) throw std::logic_error("loss_gan_u2_pfa: regressor must be frozen");
    if (!ver.frozen) throw std::logic_error("loss_gan_u2_pfa: VER model must be frozen");
    const Matrix cond = regress(reg, ver, xu);  // pseudo conditions, shared by both sides
    const Matrix z = rng.normal_matrix(xu.rows(), m.d_z);
    const Matrix fake = mlp2_forward(m.G, hconcat(z, cond));
    const CriticTerms terms =
        wgan_critic_terms(c.D_u2, hconcat(xu, cond), hconcat(fake, cond), lambda_gp, xu.cols(),
                          rng);
    GanLossResult out;
    out.critic_objective = terms.critic_objective;
    out.gen_objective = terms.gen_objective;
    out.d_critic = terms.d_critic;
    out.d_fake = col_range(terms.d_fake_input, 0, xu.cols());
    return out;
}

namespace {

void critic_ascent(AdamWState& opt, Mlp2Params& critic, const Mlp2Grads& d_objective) {
    Mlp2Grads neg = d_objective;
    neg *= -1.0;
    adamw_step(opt, critic.param_list(), neg.list());
}

}  // namespace

std::pair<GeneratorModel, CriticSet> train_generator(const TrainView& data, const VerModel& ver,
                                                     const RegressorModel& reg,
                                                     const StagePriors& priors,
                                                     const GenTrainConfig& cfg, Rng& rng,
                                                     GenTraces* traces) {
    if (cfg.epochs < 1) throw std::invalid_argument("train_generator: epochs must be >= 1");
    const bool use_u1 = cfg.lambda_u1 != 0.0;
    const bool use_u2 = cfg.lambda_u2 != 0.0;
    if (use_u1) priors.g_prior.validate();
    if (use_u1) priors.d_prior.validate();

    const std::size_t d_x = data.d_x();
    const std::size_t d_a = data.d_a();

    GeneratorModel m;
    m.d_z = cfg.d_z;
    m.E = Mlp2Params::init(d_x + d_a, cfg.hidden, 2 * cfg.d_z, cfg.slope, rng);
    m.G = Mlp2Params::init(cfg.d_z + d_a, cfg.hidden, d_x, cfg.slope, rng);

    CriticSet c;
    c.D_s = Mlp2Params::init(d_x + d_a, cfg.hidden, 1, cfg.slope, rng);
    c.D_u = Mlp2Params::init(d_x, cfg.hidden, 1, cfg.slope, rng);
    c.D_u2 = Mlp2Params::init(d_x + d_a, cfg.hidden, 1, cfg.slope, rng);

    std::vector<Matrix*> gen_params = m.E.param_list();
    for (Matrix* p : m.G.param_list()) gen_params.push_back(p);
    AdamWState gen_opt(cfg.opt, {gen_params.begin(), gen_params.end()});
    AdamWState ds_opt(cfg.opt, std::as_const(c.D_s).param_list());
    AdamWState du_opt(cfg.opt, std::as_const(c.D_u).param_list());
    AdamWState du2_opt(cfg.opt, std::as_const(c.D_u2).param_list());

    // Unseen-side randomness lives on its own stream so that disabling both
    // unseen losses reproduces the seen-only trajectory exactly.
    Rng unseen_rng = rng.fork(0xF6);

    // PFA conditions are a pure function of the unseen pool; fixed up front.
    Matrix pfa_conditions;
    if (use_u2) {
        if (!reg.frozen) throw std::logic_error("train_generator: regressor must be frozen");
        pfa_conditions = regress(reg, ver, data.Xu);
    }

    std::vector<std::size_t> label_rows(data.Ys.size());
    for (std::size_t i = 0; i < data.Ys.size(); ++i)
        label_rows[i] = data.seen_row_of(data.Ys[i]);

    const std::size_t n = data.Xs.rows();
    const std::size_t batch = std::min(cfg.batch, n);
    const double inv_b = 1.0 / static_cast<double>(batch);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto order = rng.permutation(n);
        double ep_vae = 0.0, ep_gan_s = 0.0, ep_gan_u1 = 0.0, ep_gan_u2 = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start + batch <= n; start += batch, ++batches) {
            std::vector<std::size_t> idx(order.begin() + start, order.begin() + start + batch);
            const Matrix xb = take_rows(data.Xs, idx);
            std::vector<std::size_t> rows(batch);
            for (std::size_t k = 0; k < batch; ++k) rows[k] = label_rows[idx[k]];
            const Matrix ab = take_rows(data.As, rows);

            // Seen VAE path, shared by the reconstruction loss and D_s.
            const SeenVaeForward f = seen_vae_forward(m, xb, ab, rng);

            // --- critic ascent steps ---
            const Matrix real_s = hconcat(xb, ab);
            const Matrix fake_s = hconcat(f.fake, ab);
            const CriticTerms ts = wgan_critic_terms(c.D_s, real_s, fake_s, cfg.lambda_gp, d_x,
                                                     rng);
            critic_ascent(ds_opt, c.D_s, ts.d_critic);
            ep_gan_s += ts.critic_objective;

            Matrix xu_b, u2_cond, fake_u2;
            Mlp2Cache u2_cache;
            if (use_u1 || use_u2) {
                const auto u_idx = unseen_rng.sample_indices(data.Xu.rows(), batch);
                xu_b = take_rows(data.Xu, u_idx);
                if (use_u2) u2_cond = take_rows(pfa_conditions, u_idx);
            }
            if (use_u1) {
                const Matrix a_d =
                    take_rows(data.Au, sample_classes(priors.d_prior, batch, unseen_rng));
                const Matrix z_d = unseen_rng.normal_matrix(batch, m.d_z);
                const Matrix fake_u1 = mlp2_forward(m.G, hconcat(z_d, a_d));
                const CriticTerms tu =
                    wgan_critic_terms(c.D_u, xu_b, fake_u1, cfg.lambda_gp, d_x, unseen_rng);
                critic_ascent(du_opt, c.D_u, tu.d_critic);
                ep_gan_u1 += tu.critic_objective;
            }
            if (use_u2) {
                const Matrix z2 = unseen_rng.normal_matrix(batch, m.d_z);
                fake_u2 = mlp2_forward(m.G, hconcat(z2, u2_cond), &u2_cache);
                const CriticTerms tu2 =
                    wgan_critic_terms(c.D_u2, hconcat(xu_b, u2_cond), hconcat(fake_u2, u2_cond),
                                      cfg.lambda_gp, d_x, unseen_rng);
                critic_ascent(du2_opt, c.D_u2, tu2.d_critic);
                ep_gan_u2 += tu2.critic_objective;
            }

            // --- generator/encoder descent ---
            Mlp2Grads dE = Mlp2Grads::zeros_like(m.E);
            Mlp2Grads dG = Mlp2Grads::zeros_like(m.G);

            const KlResult kl = kl_std_normal(f.mu, f.logvar);
            double rec = 0.0;
            Matrix d_fake_s(batch, d_x);
            for (std::size_t i = 0; i < d_fake_s.size(); ++i) {
                const double diff = f.fake.values()[i] - xb.values()[i];
                rec += diff * diff;
                d_fake_s.values()[i] = 2.0 * diff * inv_b;
            }
            rec *= inv_b;
            const double vae_value = kl.value + rec;
            if (!std::isfinite(vae_value)) {
                std::ostringstream msg;
                msg << "train_generator: non-finite loss at epoch " << epoch << " batch "
                    << batches;
                throw std::runtime_error(msg.str());
            }
            ep_vae += vae_value;

            const CriticScore gs = critic_neg_mean_score(c.D_s, hconcat(f.fake, ab));
            axpy(d_fake_s, 1.0, col_range(gs.d_input, 0, d_x));
            seen_vae_backward(m, f, d_fake_s, kl.d_mu, kl.d_logvar, dE, dG);

            if (use_u1) {
                const Matrix a_g =
                    take_rows(data.Au, sample_classes(priors.g_prior, batch, unseen_rng));
                const Matrix z_g = unseen_rng.normal_matrix(batch, m.d_z);
                Mlp2Cache u1_cache;
                const Matrix fake_g = mlp2_forward(m.G, hconcat(z_g, a_g), &u1_cache);
                const CriticScore gu = critic_neg_mean_score(c.D_u, fake_g);
                Mlp2Backward back = mlp2_grads(m.G, u1_cache, gu.d_input);
                dG.accumulate(back.params, cfg.lambda_u1);
            }
            if (use_u2) {
                const CriticScore gu2 = critic_neg_mean_score(c.D_u2, hconcat(fake_u2, u2_cond));
                Mlp2Backward back =
                    mlp2_grads(m.G, u2_cache, col_range(gu2.d_input, 0, d_x));
                dG.accumulate(back.params, cfg.lambda_u2);
            }

            std::vector<const Matrix*> grads;
            for (const Matrix* g : dE.list()) grads.push_back(g);
            for (const Matrix* g : dG.list()) grads.push_back(g);
            adamw_step(gen_opt, gen_params, grads);
        }
        if (traces) {
            const double inv = 1.0 / static_cast<double>(batches);
            traces->vae.push_back(ep_vae * inv);
            traces->gan_s.push_back(ep_gan_s * inv);
            traces->gan_u1.push_back(ep_gan_u1 * inv);
            traces->gan_u2.push_back(ep_gan_u2 * inv);
        }
    }
    return {std::move(m), std::move(c)};
}

Matrix synthesize(const GeneratorModel& m, const Matrix& a, std::size_t n_per_row, Rng& rng) {
    const std::size_t total = a.rows() * n_per_row;
    Matrix input(total, m.d_z + a.cols());
    std::size_t row = 0;
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* ar = a.row_ptr(r);
        for (std::size_t k = 0; k < n_per_row; ++k, ++row) {
            double* in = input.row_ptr(row);
            for (std::size_t j = 0; j < m.d_z; ++j) in[j] = rng.normal();
            for (std::size_t j = 0; j < a.cols(); ++j) in[m.d_z + j] = ar[j];
        }
    }
    return mlp2_forward(m.G, input);
}

void save_generator(const GeneratorModel& m, const CriticSet& c, const std::string& path,
                    const CheckpointMeta& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "IVGNCKPT1\ngenerator\n";
    out << std::hex << meta.fingerprint << " " << std::dec << meta.seed << "\n";
    out << m.d_z << " " << m.E.slope << "\n";
    for (const Mlp2Params* net : {&m.E, &m.G, &c.D_s, &c.D_u, &c.D_u2})
        for (const Matrix* p : net->param_list()) write_matrix_record(out, *p);
    if (!out) throw std::runtime_error("write failure: " + path);
}

std::pair<GeneratorModel, CriticSet> load_generator(const std::string& path,
                                                    CheckpointMeta* meta) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::string magic, kind, meta_line, dims;
    if (!std::getline(in, magic) || magic != "IVGNCKPT1")
        throw std::runtime_error("not a checkpoint file: " + path);
    if (!std::getline(in, kind) || kind != "generator")
        throw std::runtime_error("checkpoint kind mismatch: expected generator in " + path);
    if (!std::getline(in, meta_line) || !std::getline(in, dims))
        throw std::runtime_error("generator checkpoint: missing header lines");
    if (meta) {
        std::istringstream ms(meta_line);
        ms >> std::hex >> meta->fingerprint >> std::dec >> meta->seed;
    }
    std::istringstream dl(dims);
    GeneratorModel m;
    CriticSet c;
    double slope;
    if (!(dl >> m.d_z >> slope)) throw std::runtime_error("generator checkpoint: bad dims line");
    for (Mlp2Params* net : {&m.E, &m.G, &c.D_s, &c.D_u, &c.D_u2}) {
        net->W1 = read_matrix_record(in, "W1");
        net->b1 = read_matrix_record(in, "b1");
        net->W2 = read_matrix_record(in, "W2");
        net->b2 = read_matrix_record(in, "b2");
        net->slope = slope;
        net->validate();
    }
    return {std::move(m), std::move(c)};
}

}  // namespace tzsl
