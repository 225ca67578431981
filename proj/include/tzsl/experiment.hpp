#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "tzsl/config.hpp"
#include "tzsl/dataset.hpp"
#include "tzsl/diagnostics.hpp"
#include "tzsl/eval.hpp"
#include "tzsl/fgen.hpp"
#include "tzsl/priors.hpp"
#include "tzsl/regress.hpp"
#include "tzsl/ver.hpp"

namespace tzsl {

// Stable per-stage seed derivation so that a stage re-run from checkpoints
// reproduces the same stage inside a full `all` run.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage);

struct DataBundle {
    SplitDataset ds;
    std::optional<DensityOracle> oracle;  // synthetic sources only
};

DataBundle acquire_dataset(const ExperimentConfig& cfg);

// Empirical unseen-class distribution of the evaluation labels; the
// ground-truth prior protocol. Requires Yu_hidden.
ClassPrior ground_truth_prior(const SplitDataset& ds);

Matrix cpe_anchors_from_generator(const GeneratorModel& gen, const Matrix& Au,
                                  std::size_t n_per_class, Rng& rng);
Matrix cpe_anchors_from_regression(const RegressorModel& reg, const VerModel& ver,
                                   const Matrix& Xu, const Matrix& Au);

// Resolves a prior selection. CPE bootstraps its anchors from a seen-only
// generator or a provisionally trained regressor, per cfg.cpe_source.
ClassPrior resolve_prior(PriorKind kind, const ExperimentConfig& cfg, const SplitDataset& ds,
                         const VerModel& ver);

struct PipelineModels {
    VerModel ver;
    RegressorModel reg;
    GeneratorModel gen;
    CriticSet critics;
};

// In-process stage runners (no artifact IO).
VerModel run_pretrain_stage(const ExperimentConfig& cfg, const SplitDataset& ds,
                            std::vector<double>* trace = nullptr);
RegressorModel run_regress_stage(const ExperimentConfig& cfg, const SplitDataset& ds,
                                 const VerModel& ver, RegressTraces* traces = nullptr);
std::pair<GeneratorModel, CriticSet> run_generator_stage(const ExperimentConfig& cfg,
                                                         const SplitDataset& ds,
                                                         const VerModel& ver,
                                                         const RegressorModel& reg,
                                                         GenTraces* traces = nullptr);
EvalReport run_eval_stage(const ExperimentConfig& cfg, const SplitDataset& ds,
                          const PipelineModels& models);

PipelineModels run_pipeline(const ExperimentConfig& cfg, const SplitDataset& ds);

std::string eval_report_json(const ExperimentConfig& cfg, const EvalReport& report);

// CLI entry point: executes one subcommand, writing artifacts under
// cfg.out_dir. Returns a process exit code.
int run_command(const std::string& command, const ExperimentConfig& cfg);

}  // namespace tzsl
