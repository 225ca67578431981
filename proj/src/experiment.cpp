#include "tzsl/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace tzsl {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t derive_seed(std::uint64_t master, std::string_view stage) {
    std::uint64_t h = 0xCBF29CE484222325ULL ^ master;
    for (char ch : stage) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001B3ULL;
    }
    h ^= h >> 33;
    h *= 0xFF51AFD7ED558CCDULL;
    h ^= h >> 33;
    return h;
}

DataBundle acquire_dataset(const ExperimentConfig& cfg) {
    cfg.validate();
    DataBundle bundle;
    switch (cfg.source) {
        case DataSource::Synthetic: {
            auto [ds, oracle] = make_synthetic(cfg.synthetic_spec());
            bundle.ds = std::move(ds);
            bundle.oracle = std::move(oracle);
            break;
        }
        case DataSource::File:
            bundle.ds = load_dataset(cfg.data_path);
            break;
        case DataSource::Csv:
            bundle.ds = dataset_from_csv(cfg.csv_seen, cfg.csv_unseen, cfg.csv_semantics);
            break;
    }
    if (cfg.mode == EvalMode::TGZSL && !bundle.ds.Xs_test)
        bundle.ds = holdout_seen(bundle.ds, cfg.holdout_fraction,
                                 derive_seed(cfg.synth_seed, "holdout"));
    return bundle;
}

ClassPrior ground_truth_prior(const SplitDataset& ds) {
    if (!ds.Yu_hidden)
        throw std::runtime_error(
            "ground-truth prior unavailable: dataset carries no hidden unseen labels");
    ClassPrior prior;
    prior.p.assign(ds.unseen_ids.size(), 0.0);
    for (int y : *ds.Yu_hidden) prior.p[ds.unseen_row_of(y)] += 1.0;
    for (double& v : prior.p) v /= static_cast<double>(ds.Yu_hidden->size());
    return prior;
}

Matrix cpe_anchors_from_generator(const GeneratorModel& gen, const Matrix& Au,
                                  std::size_t n_per_class, Rng& rng) {
    const Matrix samples = synthesize(gen, Au, n_per_class, rng);
    Matrix anchors(Au.rows(), samples.cols());
    for (std::size_t c = 0; c < Au.rows(); ++c) {
        for (std::size_t k = 0; k < n_per_class; ++k) {
            const double* x = samples.row_ptr(c * n_per_class + k);
            double* a = anchors.row_ptr(c);
            for (std::size_t j = 0; j < samples.cols(); ++j) a[j] += x[j];
        }
        for (std::size_t j = 0; j < samples.cols(); ++j)
            anchors(c, j) /= static_cast<double>(n_per_class);
    }
    return anchors;
}

Matrix cpe_anchors_from_regression(const RegressorModel& reg, const VerModel& ver,
                                   const Matrix& Xu, const Matrix& Au) {
    const Matrix sem = regress(reg, ver, Xu);
    const auto assign = nearest_anchor_assignment(sem, Au);
    Matrix anchors(Au.rows(), Xu.cols());
    std::vector<std::size_t> counts(Au.rows(), 0);
    for (std::size_t i = 0; i < Xu.rows(); ++i) {
        ++counts[assign[i]];
        const double* x = Xu.row_ptr(i);
        double* a = anchors.row_ptr(assign[i]);
        for (std::size_t j = 0; j < Xu.cols(); ++j) a[j] += x[j];
    }
    for (std::size_t c = 0; c < Au.rows(); ++c) {
        if (counts[c] > 0) {
            for (std::size_t j = 0; j < Xu.cols(); ++j)
                anchors(c, j) /= static_cast<double>(counts[c]);
            continue;
        }
        // No sample claimed this class; fall back to the single feature
        // whose regressed semantic is closest to the class semantic.
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < Xu.rows(); ++i) {
            double d = 0.0;
            for (std::size_t j = 0; j < sem.cols(); ++j) {
                const double diff = sem(i, j) - Au(c, j);
                d += diff * diff;
            }
            if (d < best) {
                best = d;
                best_i = i;
            }
        }
        for (std::size_t j = 0; j < Xu.cols(); ++j) anchors(c, j) = Xu(best_i, j);
    }
    return anchors;
}

ClassPrior resolve_prior(PriorKind kind, const ExperimentConfig& cfg, const SplitDataset& ds,
                         const VerModel& ver) {
    switch (kind) {
        case PriorKind::Uniform:
            return uniform_prior(ds.unseen_ids.size());
        case PriorKind::GroundTruth:
            return ground_truth_prior(ds);
        case PriorKind::Cpe:
            break;
    }

    Rng rng(derive_seed(cfg.seed, "cpe"));
    Matrix anchors;
    if (cfg.cpe_source == CpeAnchorSource::Generator) {
        // Seen-only generator: with both unseen weights at zero the unseen
        // pool never enters training, so no prior is needed to build one.
        GenTrainConfig boot = cfg.gen_config();
        boot.lambda_u1 = 0.0;
        boot.lambda_u2 = 0.0;
        boot.epochs = cfg.cpe_bootstrap_epochs;
        RegressorModel unused;
        unused.R = Mlp2Params::init(1, 1, 1, cfg.slope, rng);
        StagePriors no_priors;
        auto [gen, critics] = train_generator(train_view(ds), ver, unused, no_priors, boot, rng);
        anchors = cpe_anchors_from_generator(gen, ds.Au, cfg.cpe_samples_per_class, rng);
    } else {
        RegressTrainConfig provisional = cfg.regress_config();
        RegressorModel reg = train_regressor(train_view(ds), ver,
                                             uniform_prior(ds.unseen_ids.size()), provisional,
                                             rng);
        anchors = cpe_anchors_from_regression(reg, ver, ds.Xu, ds.Au);
    }
    return estimate_prior_cpe(ds.Xu, anchors, cfg.cpe_iters);
}

VerModel run_pretrain_stage(const ExperimentConfig& cfg, const SplitDataset& ds,
                            std::vector<double>* trace) {
    Rng rng(derive_seed(cfg.seed, "pretrain"));
    const Matrix pool = vconcat(ds.Xs, ds.Xu);
    return pretrain_ver(pool, cfg.ver_config(), rng, trace);
}

RegressorModel run_regress_stage(const ExperimentConfig& cfg, const SplitDataset& ds,
                                 const VerModel& ver, RegressTraces* traces) {
    const ClassPrior prior = resolve_prior(cfg.prior_regressor, cfg, ds, ver);
    Rng rng(derive_seed(cfg.seed, "regress"));
    return train_regressor(train_view(ds), ver, prior, cfg.regress_config(), rng, traces);
}

std::pair<GeneratorModel, CriticSet> run_generator_stage(const ExperimentConfig& cfg,
                                                         const SplitDataset& ds,
                                                         const VerModel& ver,
                                                         const RegressorModel& reg,
                                                         GenTraces* traces) {
    StagePriors priors;
    priors.g_prior = resolve_prior(cfg.prior_g, cfg, ds, ver);
    priors.d_prior = resolve_prior(cfg.prior_d, cfg, ds, ver);
    Rng rng(derive_seed(cfg.seed, "generator"));
    return train_generator(train_view(ds), ver, reg, priors, cfg.gen_config(), rng, traces);
}

EvalReport run_eval_stage(const ExperimentConfig& cfg, const SplitDataset& ds,
                          const PipelineModels& models) {
    Rng rng(derive_seed(cfg.seed, "eval"));
    const SoftmaxClassifier clf =
        train_fzsl(models.gen, models.reg, models.ver, ds, cfg.fzsl_config(), rng);
    return evaluate(clf, models.reg, models.ver, ds, cfg.mode);
}

PipelineModels run_pipeline(const ExperimentConfig& cfg, const SplitDataset& ds) {
    PipelineModels models;
    models.ver = run_pretrain_stage(cfg, ds);
    models.reg = run_regress_stage(cfg, ds, models.ver);
    auto [gen, critics] = run_generator_stage(cfg, ds, models.ver, models.reg);
    models.gen = std::move(gen);
    models.critics = std::move(critics);
    return models;
}

namespace {

std::string hex64(std::uint64_t v) {
    std::ostringstream out;
    out << std::hex << v;
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failure: " + path);
}

class CsvWriter {
public:
    CsvWriter(const ExperimentConfig& cfg, const std::string& header) {
        out_.precision(17);
        out_ << "# fingerprint=" << hex64(config_fingerprint(cfg)) << " seed=" << cfg.seed << "\n";
        out_ << header << "\n";
    }
    template <typename... Ts>
    void row(const Ts&... fields) {
        bool first = true;
        ((out_ << (first ? "" : ","), first = false, out_ << fields), ...);
        out_ << "\n";
    }
    void save(const std::string& path) { write_text_file(path, out_.str()); }

private:
    std::ostringstream out_;
};

void write_trace_csv(const ExperimentConfig& cfg, const std::string& path,
                     const std::vector<std::pair<std::string, const std::vector<double>*>>& cols) {
    std::string header = "epoch";
    for (const auto& [name, values] : cols) header += "," + name;
    CsvWriter csv(cfg, header);
    const std::size_t n = cols.empty() ? 0 : cols.front().second->size();
    std::ostringstream row;
    row.precision(17);
    for (std::size_t e = 0; e < n; ++e) {
        row.str("");
        row << e;
        for (const auto& [name, values] : cols) row << "," << (*values)[e];
        csv.row(row.str());
    }
    csv.save(path);
}

CheckpointMeta meta_of(const ExperimentConfig& cfg) {
    return CheckpointMeta{config_fingerprint(cfg), cfg.seed};
}

std::string artifact(const ExperimentConfig& cfg, const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
}

void require_artifact(const std::string& path, const std::string& producer) {
    if (!fs::exists(path)) {
        throw std::runtime_error("missing checkpoint: " + path + " (run `tzsl " + producer +
                                 "` first)");
    }
}

json report_to_json(const ExperimentConfig& cfg, const EvalReport& report) {
    json j;
    j["config_fingerprint"] = hex64(config_fingerprint(cfg));
    j["seed"] = cfg.seed;
    j["mode"] = cfg.mode == EvalMode::TZSL ? "tzsl" : "tgzsl";
    j["T1"] = report.T1;
    if (report.U) j["U"] = *report.U;
    if (report.S) j["S"] = *report.S;
    if (report.H) j["H"] = *report.H;
    j["classes"] = report.classes;
    j["per_class_acc"] = report.per_class_acc;
    j["empty_classes"] = report.empty_classes;
    return j;
}

void write_confusion_csv(const ExperimentConfig& cfg, const EvalReport& report,
                         const std::string& path) {
    std::string header = "true\\pred";
    for (int c : report.classes) header += "," + std::to_string(c);
    CsvWriter csv(cfg, header);
    for (std::size_t i = 0; i < report.confusion.rows(); ++i) {
        std::ostringstream row;
        row << report.classes[i];
        for (std::size_t j = 0; j < report.confusion.cols(); ++j)
            row << "," << static_cast<long long>(report.confusion(i, j));
        csv.row(row.str());
    }
    csv.save(path);
}

std::vector<NamedPrior> named_prior_grid(const ExperimentConfig& cfg, const SplitDataset& ds,
                                         const VerModel& ver) {
    std::vector<NamedPrior> grid;
    grid.emplace_back("uniform", resolve_prior(PriorKind::Uniform, cfg, ds, ver));
    grid.emplace_back("cpe", resolve_prior(PriorKind::Cpe, cfg, ds, ver));
    grid.emplace_back("gt", resolve_prior(PriorKind::GroundTruth, cfg, ds, ver));
    return grid;
}

PipelineStageConfigs stage_configs(const ExperimentConfig& cfg) {
    return PipelineStageConfigs{cfg.regress_config(), cfg.gen_config(), cfg.fzsl_config()};
}

}  // namespace

std::string eval_report_json(const ExperimentConfig& cfg, const EvalReport& report) {
    return report_to_json(cfg, report).dump(2) + "\n";
}

int run_command(const std::string& command, const ExperimentConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);

    if (command == "synth-data") {
        if (cfg.source != DataSource::Synthetic)
            throw std::runtime_error("synth-data requires data.source=synthetic");
        DataBundle bundle = acquire_dataset(cfg);
        save_dataset(bundle.ds, artifact(cfg, "dataset.ivgn"));
        std::cout << "wrote " << artifact(cfg, "dataset.ivgn") << "\n";
        return 0;
    }

    DataBundle bundle = acquire_dataset(cfg);

    if (command == "pretrain") {
        std::vector<double> trace;
        VerModel ver = run_pretrain_stage(cfg, bundle.ds, &trace);
        save_ver(ver, artifact(cfg, "ver.ckpt"), meta_of(cfg));
        write_trace_csv(cfg, artifact(cfg, "ver_trace.csv"), {{"loss", &trace}});
        std::cout << "wrote " << artifact(cfg, "ver.ckpt") << "\n";
        return 0;
    }

    if (command == "train-regressor") {
        require_artifact(artifact(cfg, "ver.ckpt"), "pretrain");
        VerModel ver = load_ver(artifact(cfg, "ver.ckpt"));
        RegressTraces traces;
        RegressorModel reg = run_regress_stage(cfg, bundle.ds, ver, &traces);
        save_regressor(reg, artifact(cfg, "regressor.ckpt"), meta_of(cfg));
        write_trace_csv(cfg, artifact(cfg, "regress_trace.csv"),
                        {{"mse", &traces.mse}, {"critic_objective", &traces.critic_objective}});
        std::cout << "wrote " << artifact(cfg, "regressor.ckpt") << "\n";
        return 0;
    }

    if (command == "train-generator") {
        require_artifact(artifact(cfg, "ver.ckpt"), "pretrain");
        require_artifact(artifact(cfg, "regressor.ckpt"), "train-regressor");
        VerModel ver = load_ver(artifact(cfg, "ver.ckpt"));
        RegressorModel reg = load_regressor(artifact(cfg, "regressor.ckpt"));
        GenTraces traces;
        auto [gen, critics] = run_generator_stage(cfg, bundle.ds, ver, reg, &traces);
        save_generator(gen, critics, artifact(cfg, "generator.ckpt"), meta_of(cfg));
        write_trace_csv(cfg, artifact(cfg, "gen_trace.csv"),
                        {{"vae", &traces.vae},
                         {"gan_s", &traces.gan_s},
                         {"gan_u1", &traces.gan_u1},
                         {"gan_u2", &traces.gan_u2}});
        std::cout << "wrote " << artifact(cfg, "generator.ckpt") << "\n";
        return 0;
    }

    if (command == "evaluate") {
        require_artifact(artifact(cfg, "ver.ckpt"), "pretrain");
        require_artifact(artifact(cfg, "regressor.ckpt"), "train-regressor");
        require_artifact(artifact(cfg, "generator.ckpt"), "train-generator");
        PipelineModels models;
        models.ver = load_ver(artifact(cfg, "ver.ckpt"));
        models.reg = load_regressor(artifact(cfg, "regressor.ckpt"));
        auto [gen, critics] = load_generator(artifact(cfg, "generator.ckpt"));
        models.gen = std::move(gen);
        models.critics = std::move(critics);
        const EvalReport report = run_eval_stage(cfg, bundle.ds, models);
        write_text_file(artifact(cfg, "eval.json"), eval_report_json(cfg, report));
        write_confusion_csv(cfg, report, artifact(cfg, "confusion.csv"));
        std::cout << "T1 " << report.T1 << "\n";
        return 0;
    }

    if (command == "all") {
        std::vector<double> ver_trace;
        PipelineModels models;
        models.ver = run_pretrain_stage(cfg, bundle.ds, &ver_trace);
        save_ver(models.ver, artifact(cfg, "ver.ckpt"), meta_of(cfg));
        write_trace_csv(cfg, artifact(cfg, "ver_trace.csv"), {{"loss", &ver_trace}});

        RegressTraces reg_traces;
        models.reg = run_regress_stage(cfg, bundle.ds, models.ver, &reg_traces);
        save_regressor(models.reg, artifact(cfg, "regressor.ckpt"), meta_of(cfg));
        write_trace_csv(cfg, artifact(cfg, "regress_trace.csv"),
                        {{"mse", &reg_traces.mse},
                         {"critic_objective", &reg_traces.critic_objective}});

        GenTraces gen_traces;
        auto [gen, critics] = run_generator_stage(cfg, bundle.ds, models.ver, models.reg,
                                                  &gen_traces);
        models.gen = std::move(gen);
        models.critics = std::move(critics);
        save_generator(models.gen, models.critics, artifact(cfg, "generator.ckpt"), meta_of(cfg));
        write_trace_csv(cfg, artifact(cfg, "gen_trace.csv"),
                        {{"vae", &gen_traces.vae},
                         {"gan_s", &gen_traces.gan_s},
                         {"gan_u1", &gen_traces.gan_u1},
                         {"gan_u2", &gen_traces.gan_u2}});

        const EvalReport report = run_eval_stage(cfg, bundle.ds, models);
        write_text_file(artifact(cfg, "eval.json"), eval_report_json(cfg, report));
        write_confusion_csv(cfg, report, artifact(cfg, "confusion.csv"));
        std::cout << "T1 " << report.T1 << "\n";
        return 0;
    }

    if (command == "ape") {
        if (!bundle.oracle)
            throw std::runtime_error("ape requires a synthetic benchmark (exact densities)");
        require_artifact(artifact(cfg, "ver.ckpt"), "pretrain");
        require_artifact(artifact(cfg, "regressor.ckpt"), "train-regressor");
        require_artifact(artifact(cfg, "generator.ckpt"), "train-generator");
        VerModel ver = load_ver(artifact(cfg, "ver.ckpt"));
        RegressorModel reg = load_regressor(artifact(cfg, "regressor.ckpt"));
        auto [gen, critics] = load_generator(artifact(cfg, "generator.ckpt"));
        Rng rng(derive_seed(cfg.seed, "ape"));
        const ApeReport report = ape_gaussian(*bundle.oracle, gen, bundle.ds.Au, nullptr, nullptr,
                                              cfg.ape_fit_samples, cfg.ape_mc_budget, rng);

        json j;
        j["config_fingerprint"] = hex64(config_fingerprint(cfg));
        j["seed"] = cfg.seed;
        j["class_mean_ape"] = report.class_mean_conditional();
        j["conditional_route"] = report.conditional_route;
        j["posterior_route"] = report.posterior_route;
        j["route_discrepancy"] = report.route_discrepancy;
        j["variance_floored"] = report.variance_floored;
        write_text_file(artifact(cfg, "ape.json"), j.dump(2) + "\n");

        CsvWriter csv(cfg, "class,conditional_route,posterior_route");
        for (std::size_t u = 0; u < report.conditional_route.size(); ++u)
            csv.row(bundle.ds.unseen_ids[u], report.conditional_route[u],
                    report.posterior_route[u]);
        csv.save(artifact(cfg, "ape.csv"));
        std::cout << "class-mean APE " << report.class_mean_conditional() << "\n";
        return 0;
    }

    if (command == "chain") {
        require_artifact(artifact(cfg, "ver.ckpt"), "pretrain");
        require_artifact(artifact(cfg, "regressor.ckpt"), "train-regressor");
        VerModel ver = load_ver(artifact(cfg, "ver.ckpt"));
        RegressorModel reg = load_regressor(artifact(cfg, "regressor.ckpt"));
        const auto grid = named_prior_grid(cfg, bundle.ds, ver);
        const auto cells = chain_experiment(bundle.ds, ver, reg, grid, stage_configs(cfg),
                                            derive_seed(cfg.seed, "chain"));
        CsvWriter csv(cfg, "g_prior,d_prior,T1");
        for (const auto& cell : cells) csv.row(cell.g_prior, cell.d_prior, cell.t1);
        csv.save(artifact(cfg, "chain.csv"));
        std::cout << "wrote " << artifact(cfg, "chain.csv") << "\n";
        return 0;
    }

    if (command == "sweep") {
        require_artifact(artifact(cfg, "ver.ckpt"), "pretrain");
        VerModel ver = load_ver(artifact(cfg, "ver.ckpt"));

        if (cfg.sweep_kind == SweepKind::Priors) {
            const auto priors = named_prior_grid(cfg, bundle.ds, ver);
            const auto rows = prior_sweep(bundle.ds, ver, priors, ground_truth_prior(bundle.ds),
                                          stage_configs(cfg), derive_seed(cfg.seed, "sweep"));
            CsvWriter csv(cfg, "prior,PB,T1");
            for (const auto& row : rows) csv.row(row.prior_name, row.prior_bias_pct, row.t1);
            csv.save(artifact(cfg, "sweep.csv"));
            std::cout << "wrote " << artifact(cfg, "sweep.csv") << "\n";
            return 0;
        }

        // lambda_u2 sensitivity sweep over a shared stage-1/2.
        require_artifact(artifact(cfg, "regressor.ckpt"), "train-regressor");
        RegressorModel reg = load_regressor(artifact(cfg, "regressor.ckpt"));
        StagePriors priors;
        priors.g_prior = resolve_prior(cfg.prior_g, cfg, bundle.ds, ver);
        priors.d_prior = resolve_prior(cfg.prior_d, cfg, bundle.ds, ver);
        CsvWriter csv(cfg, "lambda_u2,T1");
        for (double lambda : cfg.sweep_lambda_values) {
            GenTrainConfig gen_cfg = cfg.gen_config();
            gen_cfg.lambda_u2 = lambda;
            Rng rng(derive_seed(cfg.seed, "sweep"));
            auto [gen, critics] =
                train_generator(train_view(bundle.ds), ver, reg, priors, gen_cfg, rng);
            PipelineModels models{ver, reg, std::move(gen), std::move(critics)};
            const EvalReport report = run_eval_stage(cfg, bundle.ds, models);
            csv.row(lambda, report.T1);
        }
        csv.save(artifact(cfg, "lambda_sweep.csv"));
        std::cout << "wrote " << artifact(cfg, "lambda_sweep.csv") << "\n";
        return 0;
    }

    throw std::runtime_error("unknown subcommand: " + command);
}

}  // namespace tzsl
