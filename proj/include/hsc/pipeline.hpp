#pragma once

#include "hsc/coding.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hsc {

/// One subject after pooling: feature vector of length t plus binary label
/// (1 = positive / converter / patient group).
struct SubjectRecord {
    std::string subject_id;
    Eigen::VectorXd pooled;
    int label = 0;
    std::string group_tag;
};

enum class PoolingMode {
    signed_max,    // raw signed maximum, absent coordinates count as zero
    absolute_max,  // maximum of |z_j|
};

/// Per-coordinate maximum over a subject's sparse codes.
Eigen::VectorXd max_pool(const std::vector<SparseCode>& codes, int t,
                         PoolingMode mode = PoolingMode::signed_max);

struct Stump {
    int feature = 0;
    double threshold = 0.0;
    int polarity = 1;  // +1: predict positive above the threshold
    double alpha = 0.0;
};

/// Apply one stump: +/- polarity depending on the threshold comparison.
inline int stump_predict(const Stump& stump, Eigen::Ref<const Eigen::VectorXd> x) {
    return x[stump.feature] > stump.threshold ? stump.polarity : -stump.polarity;
}

/// Weighted vote of decision stumps. `rounds` may be empty only for the
/// degenerate all-identical-features case, where every margin is zero and
/// the negative class is predicted by the tie rule.
struct StumpEnsemble {
    std::vector<Stump> rounds;
};

/// Discrete AdaBoost with decision stumps. Candidate thresholds are the
/// midpoints between consecutive sorted distinct feature values; each round
/// picks the stump with the lowest weighted error, weights alpha =
/// 0.5 * ln((1 - eps) / eps) with eps floored at 1e-10, and reweights
/// exponentially. Stops early on a perfect stump or when no stump beats 0.5.
StumpEnsemble adaboost_train(const std::vector<SubjectRecord>& records, int rounds);

/// Ensemble margin; predictions threshold it at zero with ties negative.
double adaboost_score(const StumpEnsemble& model, Eigen::Ref<const Eigen::VectorXd> pooled);
inline int adaboost_predict(const StumpEnsemble& model, Eigen::Ref<const Eigen::VectorXd> pooled) {
    return adaboost_score(model, pooled) > 0.0 ? 1 : 0;
}

struct EvalReport {
    double acc = 0.0;
    double sen = 0.0;
    double spe = 0.0;
    double auc = 0.0;
    long tp = 0, fn = 0, tn = 0, fp = 0;
};

/// Confusion at margin threshold zero (ties negative), rates by the usual
/// formulas, AUC as the rank statistic with half credit for tied scores.
/// Throws if only one class is present.
EvalReport evaluate(const std::vector<double>& scores, const std::vector<int>& labels);

/// Stratified 7:1:2 split into train/validation/test index sets.
struct NestedSplit {
    std::vector<int> train;
    std::vector<int> validation;
    std::vector<int> test;
};
NestedSplit nested_split(const std::vector<int>& labels, std::uint64_t seed);

/// Stratified k-fold partition; element f lists the test indices of fold f.
/// Fold sizes differ by at most one and every record appears exactly once.
std::vector<std::vector<int>> kfold_split(const std::vector<int>& labels, int k,
                                          std::uint64_t seed);

/// `HSCADA 1` container: header line plus a JSON list of rounds.
void save_ensemble(const StumpEnsemble& model, const std::filesystem::path& path);
StumpEnsemble load_ensemble(const std::filesystem::path& path);

}  // namespace hsc
