#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tzsl/eval.hpp"
#include "tzsl/fgen.hpp"
#include "tzsl/regress.hpp"
#include "tzsl/ver.hpp"

namespace tzsl {

enum class DataSource { Synthetic, File, Csv };
enum class PriorKind { GroundTruth, Uniform, Cpe };
enum class CpeAnchorSource { Generator, Regression };
enum class SweepKind { Priors, LambdaU2 };

// Flat key=value experiment configuration with a strict schema: unknown
// keys are rejected before anything runs. Round-trips losslessly through
// canonical_config_text / parse_config_text.
struct ExperimentConfig {
    // data
    DataSource source = DataSource::Synthetic;
    std::string data_path;
    std::string csv_seen, csv_unseen, csv_semantics;
    double holdout_fraction = 0.2;

    // synthetic benchmark
    std::size_t synth_d_x = 16;
    std::size_t synth_d_a = 8;
    std::size_t synth_d_z = 4;
    std::size_t synth_seen_classes = 8;
    std::size_t synth_unseen_classes = 4;
    std::size_t synth_samples_per_class = 200;
    double synth_map_scale = 1.0;
    double synth_noise_std = 0.12;
    std::vector<double> synth_unseen_prior;  // empty = uniform
    std::uint64_t synth_seed = 9001;

    // networks and optimization
    std::size_t hidden = 64;
    std::size_t batch = 64;
    double slope = 0.2;
    std::size_t n_pre = 60;
    std::size_t n_r = 80;
    std::size_t n_g = 120;
    double lambda_r = 0.01;
    double lambda_u1 = 1.0;
    double lambda_u2 = 0.09;
    double lambda_gp = 10.0;
    double opt_lr = 0.001;
    double opt_beta1 = 0.5;
    double opt_beta2 = 0.999;
    double opt_weight_decay = 0.0;

    // priors
    PriorKind prior_g = PriorKind::GroundTruth;
    PriorKind prior_d = PriorKind::GroundTruth;
    PriorKind prior_regressor = PriorKind::GroundTruth;
    CpeAnchorSource cpe_source = CpeAnchorSource::Generator;
    std::size_t cpe_iters = 10;
    std::size_t cpe_samples_per_class = 50;
    std::size_t cpe_bootstrap_epochs = 40;

    // classifier and evaluation
    std::size_t n_syn = 200;
    std::size_t clf_epochs = 50;
    EvalMode mode = EvalMode::TZSL;

    // diagnostics
    std::size_t ape_fit_samples = 2000;
    std::size_t ape_mc_budget = 4000;
    SweepKind sweep_kind = SweepKind::Priors;
    std::vector<double> sweep_lambda_values = {0.0, 0.03, 0.09, 0.3};

    // run
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    void validate() const;

    SyntheticSpec synthetic_spec() const;
    VerTrainConfig ver_config() const;
    RegressTrainConfig regress_config() const;
    GenTrainConfig gen_config() const;
    FzslConfig fzsl_config() const;
    AdamWConfig adamw_config() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);
std::string canonical_config_text(const ExperimentConfig& cfg);
std::uint64_t config_fingerprint(const ExperimentConfig& cfg);

std::string to_string(PriorKind kind);

}  // namespace tzsl
