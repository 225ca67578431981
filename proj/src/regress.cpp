#include "tzsl/regress.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "tzsl/io.hpp"

namespace tzsl {

Matrix regressor_input(const RegressorModel& m, const VerModel& ver, const Matrix& x) {
    return m.ver_input ? ver_embed(ver, x) : x;
}

Matrix regress(const RegressorModel& m, const VerModel& ver, const Matrix& x) {
    const Matrix input = regressor_input(m, ver, x);
    if (input.cols() != m.R.in_dim())
        throw std::invalid_argument("regress: input width does not match regressor");
    return mlp2_forward(m.R, input);
}

Matrix regressor_hidden(const RegressorModel& m, const VerModel& ver, const Matrix& x) {
    const Matrix input = regressor_input(m, ver, x);
    Mlp2Cache cache;
    mlp2_forward(m.R, input, &cache);
    return cache.hidden;
}

MseResult mse_loss(const Matrix& pred, const Matrix& target) {
    if (!pred.same_shape(target)) detail::shape_fail("mse_loss", pred, target);
    MseResult out;
    out.d_pred = Matrix(pred.rows(), pred.cols());
    const double inv = 1.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double diff = pred.values()[i] - target.values()[i];
        out.value += diff * diff * inv;
        out.d_pred.values()[i] = 2.0 * diff * inv;
    }
    return out;
}

AdvSemanticResult semantic_critic_losses(const SemanticCritic& critic, const Matrix& a_real_s,
                                         const Matrix& a_fake_s, const Matrix& a_real_u,
                                         const Matrix& a_fake_u, double lambda_gp, Rng& rng) {
    if (a_real_s.cols() != critic.D_r.in_dim() || a_real_u.cols() != critic.D_r.in_dim())
        throw std::invalid_argument("semantic_critic_losses: semantic width mismatch");

    const CriticTerms seen =
        wgan_critic_terms(critic.D_r, a_real_s, a_fake_s, lambda_gp, a_real_s.cols(), rng);
    const CriticTerms unseen =
        wgan_critic_terms(critic.D_r, a_real_u, a_fake_u, lambda_gp, a_real_u.cols(), rng);

    AdvSemanticResult out;
    out.critic_objective = seen.critic_objective + unseen.critic_objective;
    out.gen_objective = seen.gen_objective + unseen.gen_objective;
    out.d_critic = seen.d_critic;
    out.d_critic.accumulate(unseen.d_critic);
    out.d_fake_s = seen.d_fake_input;
    out.d_fake_u = unseen.d_fake_input;
    return out;
}

RegressorModel train_regressor(const TrainView& data, const VerModel& ver, const ClassPrior& prior,
                               const RegressTrainConfig& cfg, Rng& rng, RegressTraces* traces) {
    if (cfg.epochs < 1) throw std::invalid_argument("train_regressor: epochs must be >= 1");
    if (!ver.frozen && cfg.use_ver_embedding)
        throw std::logic_error("train_regressor: VER model must be frozen");
    prior.validate();
    if (prior.size() != data.unseen_ids.size())
        throw std::invalid_argument("train_regressor: prior length != unseen class count");

    const std::size_t d_a = data.d_a();
    RegressorModel model;
    model.ver_input = cfg.use_ver_embedding;
    const std::size_t in_dim = cfg.use_ver_embedding ? ver.embed_dim() : data.d_x();
    model.R = Mlp2Params::init(in_dim, cfg.hidden, d_a, cfg.slope, rng);

    SemanticCritic critic;
    critic.D_r = Mlp2Params::init(d_a, cfg.hidden, 1, cfg.slope, rng);

    AdamWState reg_opt(cfg.opt, std::as_const(model.R).param_list());
    AdamWState critic_opt(cfg.opt, std::as_const(critic.D_r).param_list());

    // Separate stream for the adversarial side: with lambda_r = 0 and the
    // critic disabled, the regressor trajectory must be unchanged.
    Rng critic_rng = rng.fork(0xD5);
    const bool adversarial = cfg.lambda_r != 0.0;

    // Frozen embeddings are pure functions of the features; compute once.
    const Matrix emb_s = cfg.use_ver_embedding ? ver_embed(ver, data.Xs) : data.Xs;
    const Matrix emb_u = cfg.use_ver_embedding ? ver_embed(ver, data.Xu) : data.Xu;

    std::vector<std::size_t> label_rows(data.Ys.size());
    for (std::size_t i = 0; i < data.Ys.size(); ++i)
        label_rows[i] = data.seen_row_of(data.Ys[i]);

    const std::size_t n = emb_s.rows();
    const std::size_t batch = std::min(cfg.batch, n);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto order = rng.permutation(n);
        double epoch_mse = 0.0, epoch_critic = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start + batch <= n; start += batch, ++batches) {
            std::vector<std::size_t> idx(order.begin() + start, order.begin() + start + batch);
            const Matrix xb = take_rows(emb_s, idx);
            std::vector<std::size_t> rows(batch);
            for (std::size_t k = 0; k < batch; ++k) rows[k] = label_rows[idx[k]];
            const Matrix ab = take_rows(data.As, rows);

            Mlp2Cache seen_cache;
            const Matrix pred_s = mlp2_forward(model.R, xb, &seen_cache);
            const MseResult mse = mse_loss(pred_s, ab);
            if (!std::isfinite(mse.value)) {
                std::ostringstream msg;
                msg << "train_regressor: non-finite loss at epoch " << epoch << " batch "
                    << batches;
                throw std::runtime_error(msg.str());
            }
            epoch_mse += mse.value;

            Matrix d_pred_s = mse.d_pred;
            Matrix d_pred_u;
            Mlp2Cache unseen_cache;
            bool have_unseen_term = false;

            if (cfg.critic_enabled) {
                const auto u_idx = critic_rng.sample_indices(emb_u.rows(), batch);
                const Matrix xu_b = take_rows(emb_u, u_idx);
                const Matrix fake_u = mlp2_forward(model.R, xu_b, &unseen_cache);
                const Matrix real_u = take_rows(data.Au, sample_classes(prior, batch, critic_rng));

                const AdvSemanticResult adv = semantic_critic_losses(
                    critic, ab, pred_s, real_u, fake_u, cfg.lambda_gp, critic_rng);
                epoch_critic += adv.critic_objective;

                // Ascent on the critic objective.
                Mlp2Grads neg = adv.d_critic;
                neg *= -1.0;
                adamw_step(critic_opt, critic.D_r.param_list(), neg.list());

                if (adversarial) {
                    // Re-score the fakes against the updated critic.
                    const CriticScore gs = critic_neg_mean_score(critic.D_r, pred_s);
                    const CriticScore gu = critic_neg_mean_score(critic.D_r, fake_u);
                    axpy(d_pred_s, cfg.lambda_r, gs.d_input);
                    d_pred_u = gu.d_input;
                    d_pred_u *= cfg.lambda_r;
                    have_unseen_term = true;
                }
            }

            Mlp2Backward back = mlp2_grads(model.R, seen_cache, d_pred_s);
            if (have_unseen_term)
                back.params.accumulate(mlp2_grads(model.R, unseen_cache, d_pred_u).params);
            adamw_step(reg_opt, model.R.param_list(), back.params.list());
        }
        if (traces) {
            traces->mse.push_back(epoch_mse / static_cast<double>(batches));
            traces->critic_objective.push_back(epoch_critic / static_cast<double>(batches));
        }
    }

    model.frozen = true;
    return model;
}

void save_regressor(const RegressorModel& m, const std::string& path, const CheckpointMeta& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "IVGNCKPT1\nregressor\n";
    out << std::hex << meta.fingerprint << " " << std::dec << meta.seed << "\n";
    out << (m.ver_input ? 1 : 0) << " " << (m.frozen ? 1 : 0) << " " << m.R.slope << "\n";
    for (const Matrix* p : m.R.param_list()) write_matrix_record(out, *p);
    if (!out) throw std::runtime_error("write failure: " + path);
}

RegressorModel load_regressor(const std::string& path, CheckpointMeta* meta) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::string magic, kind, meta_line, dims;
    if (!std::getline(in, magic) || magic != "IVGNCKPT1")
        throw std::runtime_error("not a checkpoint file: " + path);
    if (!std::getline(in, kind) || kind != "regressor")
        throw std::runtime_error("checkpoint kind mismatch: expected regressor in " + path);
    if (!std::getline(in, meta_line) || !std::getline(in, dims))
        throw std::runtime_error("regressor checkpoint: missing header lines");
    if (meta) {
        std::istringstream ms(meta_line);
        ms >> std::hex >> meta->fingerprint >> std::dec >> meta->seed;
    }
    std::istringstream dl(dims);
    int ver_input, frozen;
    double slope;
    if (!(dl >> ver_input >> frozen >> slope))
        throw std::runtime_error("regressor checkpoint: bad dims line");
    RegressorModel m;
    m.ver_input = ver_input != 0;
    m.frozen = frozen != 0;
    m.R.W1 = read_matrix_record(in, "R W1");
    m.R.b1 = read_matrix_record(in, "R b1");
    m.R.W2 = read_matrix_record(in, "R W2");
    m.R.b2 = read_matrix_record(in, "R b2");
    m.R.slope = slope;
    m.R.validate();
    return m;
}

}  // namespace tzsl
