#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tzsl/dataset.hpp"
#include "tzsl/fgen.hpp"
#include "tzsl/matrix.hpp"
#include "tzsl/optim.hpp"
#include "tzsl/regress.hpp"
#include "tzsl/rng.hpp"
#include "tzsl/ver.hpp"

namespace tzsl {

enum class EvalMode { TZSL, TGZSL };

// Linear softmax head over the multimodal input space. class_map maps
// logit columns to global class ids.
struct SoftmaxClassifier {
    Matrix W;  // classes x input width
    Matrix b;  // 1 x classes
    std::vector<int> class_map;
};

// T1 and per_class_acc are fractions in [0, 1]; U, S, H are percentages.
struct EvalReport {
    double T1 = 0.0;
    std::optional<double> U, S, H;
    std::vector<double> per_class_acc;
    std::vector<int> classes;      // aligned with per_class_acc
    Matrix confusion;              // rows true class, cols predicted, class_map order
    std::vector<int> empty_classes;  // eval classes absent from the test labels
};

// [x | regressed semantics | regressor hidden layer], the classifier input.
Matrix multimodal_input(const Matrix& x, const RegressorModel& reg, const VerModel& ver);

struct FzslConfig {
    std::size_t n_syn = 200;
    std::size_t epochs = 50;
    std::size_t batch = 128;
    EvalMode mode = EvalMode::TZSL;
    AdamWConfig opt;  // lr 0.001 by default
};

// Cross-entropy training on n_syn synthesized samples per unseen class,
// plus the real seen training features in TGZSL mode.
SoftmaxClassifier train_fzsl(const GeneratorModel& gen, const RegressorModel& reg,
                             const VerModel& ver, const SplitDataset& ds, const FzslConfig& cfg,
                             Rng& rng);

// Macro-averaged top-1: per-class accuracy, then the unweighted mean over
// `classes`. Classes absent from `labels` are excluded and reported.
std::pair<double, std::vector<double>> top1_per_class(const std::vector<int>& preds,
                                                      const std::vector<int>& labels,
                                                      const std::vector<int>& classes,
                                                      std::vector<int>* excluded = nullptr);

// 2US/(U+S) on percentages; 0 when U + S == 0.
double harmonic_mean(double u, double s);

std::vector<int> classify(const SoftmaxClassifier& clf, const Matrix& inputs);

EvalReport evaluate(const SoftmaxClassifier& clf, const RegressorModel& reg, const VerModel& ver,
                    const SplitDataset& ds, EvalMode mode);

// Evaluation-side regression metric: mean |a~ - a_true| over the unseen pool.
double unseen_semantic_mae(const RegressorModel& reg, const VerModel& ver, const SplitDataset& ds);

}  // namespace tzsl
