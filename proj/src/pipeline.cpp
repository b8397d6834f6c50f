#include "hsc/pipeline.hpp"

#include "hsc/errors.hpp"
#include "hsc/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace hsc {

Eigen::VectorXd max_pool(const std::vector<SparseCode>& codes, int t, PoolingMode mode) {
    if (codes.empty()) {
        throw Error("max_pool: empty patch list");
    }
    for (const SparseCode& code : codes) {
        if (code.dim != t) {
            throw Error("max_pool: code dimension does not match t");
        }
    }

    const double lowest = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd pooled = Eigen::VectorXd::Constant(t, lowest);
    std::vector<long> seen(static_cast<std::size_t>(t), 0);
    for (const SparseCode& code : codes) {
        for (std::size_t k = 0; k < code.indices.size(); ++k) {
            const int j = code.indices[k];
            const double v =
                mode == PoolingMode::absolute_max ? std::abs(code.values[k]) : code.values[k];
            pooled[j] = std::max(pooled[j], v);
            ++seen[static_cast<std::size_t>(j)];
        }
    }
    // A coordinate absent from any patch contributes a zero.
    const long patch_count = static_cast<long>(codes.size());
    for (int j = 0; j < t; ++j) {
        if (seen[static_cast<std::size_t>(j)] < patch_count) {
            pooled[j] = std::max(pooled[j], 0.0);
        }
    }
    return pooled;
}

namespace {

struct StumpCandidate {
    Stump stump;
    double error = std::numeric_limits<double>::infinity();
    bool valid = false;
};

/// Best stump over one feature given current weights; presorted order in.
StumpCandidate best_stump_for_feature(const std::vector<SubjectRecord>& records,
                                      const std::vector<int>& sorted_order, int feature,
                                      const std::vector<double>& weights) {
    // For polarity +1 (positive above threshold), the weighted error at a
    // threshold is: positives at-or-below + negatives above. Scan the sorted
    // values maintaining the below-side class weights.
    double pos_total = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].label == 1) {
            pos_total += weights[i];
        }
    }
    const double neg_total = 1.0 - pos_total;

    StumpCandidate best;
    double pos_below = 0.0;
    double neg_below = 0.0;
    for (std::size_t i = 0; i + 1 < sorted_order.size(); ++i) {
        const int idx = sorted_order[i];
        const double value = records[static_cast<std::size_t>(idx)].pooled[feature];
        if (records[static_cast<std::size_t>(idx)].label == 1) {
            pos_below += weights[static_cast<std::size_t>(idx)];
        } else {
            neg_below += weights[static_cast<std::size_t>(idx)];
        }
        const double next_value =
            records[static_cast<std::size_t>(sorted_order[i + 1])].pooled[feature];
        if (next_value == value) {
            continue;  // thresholds only between distinct values
        }
        const double threshold = 0.5 * (value + next_value);
        const double err_plus = pos_below + (neg_total - neg_below);
        const double err_minus = 1.0 - err_plus;
        if (err_plus < best.error) {
            best.error = err_plus;
            best.stump = Stump{feature, threshold, +1, 0.0};
            best.valid = true;
        }
        if (err_minus < best.error) {
            best.error = err_minus;
            best.stump = Stump{feature, threshold, -1, 0.0};
            best.valid = true;
        }
    }
    return best;
}

}  // namespace

StumpEnsemble adaboost_train(const std::vector<SubjectRecord>& records, int rounds) {
    if (rounds < 1) {
        throw ConfigError("adaboost_train: rounds must be >= 1");
    }
    if (records.empty()) {
        throw Error("adaboost_train: no records");
    }
    const int t = static_cast<int>(records.front().pooled.size());
    long positives = 0;
    for (const SubjectRecord& r : records) {
        if (r.pooled.size() != static_cast<Eigen::Index>(t)) {
            throw Error("adaboost_train: inconsistent feature lengths");
        }
        positives += r.label == 1;
    }
    if (positives == 0 || positives == static_cast<long>(records.size())) {
        throw Error("adaboost_train: both classes must be present");
    }

    // Sort orders are weight-independent; compute them once.
    std::vector<std::vector<int>> orders(static_cast<std::size_t>(t));
    for (int f = 0; f < t; ++f) {
        auto& order = orders[static_cast<std::size_t>(f)];
        order.resize(records.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return records[static_cast<std::size_t>(a)].pooled[f] <
                   records[static_cast<std::size_t>(b)].pooled[f];
        });
    }

    std::vector<double> weights(records.size(), 1.0 / static_cast<double>(records.size()));
    StumpEnsemble model;

    for (int round = 0; round < rounds; ++round) {
        StumpCandidate best;
        for (int f = 0; f < t; ++f) {
            const StumpCandidate candidate =
                best_stump_for_feature(records, orders[static_cast<std::size_t>(f)], f, weights);
            if (candidate.valid && candidate.error < best.error) {
                best = candidate;
            }
        }
        if (!best.valid || best.error >= 0.5) {
            break;  // no improving stump; degenerate when model.rounds is empty
        }

        const double eps = std::max(best.error, 1e-10);
        best.stump.alpha = 0.5 * std::log((1.0 - eps) / eps);
        model.rounds.push_back(best.stump);

        double total = 0.0;
        for (std::size_t i = 0; i < records.size(); ++i) {
            const int y = records[i].label == 1 ? 1 : -1;
            const int h = stump_predict(best.stump, records[i].pooled);
            weights[i] *= std::exp(-best.stump.alpha * y * h);
            total += weights[i];
        }
        for (double& w : weights) {
            w /= total;
        }

        if (best.error == 0.0) {
            break;  // perfect stump
        }
    }

    // Exponential-loss bound on the training error: err <= prod_r Z_r where
    // Z_r is the weight normalizer of round r under the trained alpha. With
    // the epsilon floor inactive this is exactly prod_r 2 sqrt(eps (1 - eps)).
    // A violation would mean the round bookkeeping is broken.
    if (!model.rounds.empty()) {
        double bound = 1.0;
        std::vector<double> check(records.size(), 1.0 / static_cast<double>(records.size()));
        for (const Stump& stump : model.rounds) {
            double total = 0.0;
            for (std::size_t i = 0; i < records.size(); ++i) {
                const int y = records[i].label == 1 ? 1 : -1;
                check[i] *= std::exp(-stump.alpha * y * stump_predict(stump, records[i].pooled));
                total += check[i];
            }
            bound *= total;
            for (double& w : check) {
                w /= total;
            }
        }
        long mistakes = 0;
        for (const SubjectRecord& r : records) {
            mistakes += adaboost_predict(model, r.pooled) != r.label;
        }
        const double train_error = static_cast<double>(mistakes) / records.size();
        if (train_error > bound + 1e-9) {
            throw std::logic_error("adaboost_train: exponential-loss bound violated");
        }
    }
    return model;
}

double adaboost_score(const StumpEnsemble& model, Eigen::Ref<const Eigen::VectorXd> pooled) {
    double margin = 0.0;
    for (const Stump& stump : model.rounds) {
        margin += stump.alpha * stump_predict(stump, pooled);
    }
    return margin;
}

EvalReport evaluate(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw Error("evaluate: scores and labels must be equal-length and non-empty");
    }
    EvalReport report;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted_positive = scores[i] > 0.0;
        if (labels[i] == 1) {
            predicted_positive ? ++report.tp : ++report.fn;
        } else {
            predicted_positive ? ++report.fp : ++report.tn;
        }
    }
    const long positives = report.tp + report.fn;
    const long negatives = report.tn + report.fp;
    if (positives == 0 || negatives == 0) {
        throw Error("evaluate: AUC undefined with a single class");
    }
    report.acc = static_cast<double>(report.tp + report.tn) /
                 static_cast<double>(positives + negatives);
    report.sen = static_cast<double>(report.tp) / static_cast<double>(positives);
    report.spe = static_cast<double>(report.tn) / static_cast<double>(negatives);

    // Mann-Whitney statistic via midranks (ties get half credit).
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] < scores[b]; });
    double rank_sum_positive = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) {
            ++j;
        }
        const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]] == 1) {
                rank_sum_positive += midrank;
            }
        }
        i = j + 1;
    }
    const double p = static_cast<double>(positives);
    const double n = static_cast<double>(negatives);
    report.auc = (rank_sum_positive - p * (p + 1.0) / 2.0) / (p * n);
    return report;
}

namespace {

/// Indices of each class, shuffled deterministically.
std::vector<std::vector<int>> shuffled_class_indices(const std::vector<int>& labels,
                                                     std::uint64_t seed) {
    std::vector<std::vector<int>> classes(2);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        classes[labels[i] == 1 ? 1 : 0].push_back(static_cast<int>(i));
    }
    Rng rng(derive_seed(seed, std::string_view("split")));
    for (auto& idx : classes) {
        for (std::size_t i = idx.size(); i > 1; --i) {
            std::swap(idx[i - 1], idx[rng.next_index(i)]);
        }
    }
    return classes;
}

}  // namespace

NestedSplit nested_split(const std::vector<int>& labels, std::uint64_t seed) {
    const auto classes = shuffled_class_indices(labels, seed);
    NestedSplit split;
    for (const auto& idx : classes) {
        const std::size_t n = idx.size();
        // Largest-remainder allocation of 7:1:2.
        std::array<double, 3> exact = {0.7 * n, 0.1 * n, 0.2 * n};
        std::array<std::size_t, 3> count;
        std::array<double, 3> frac;
        std::size_t assigned = 0;
        for (int part = 0; part < 3; ++part) {
            count[part] = static_cast<std::size_t>(exact[part]);
            frac[part] = exact[part] - static_cast<double>(count[part]);
            assigned += count[part];
        }
        while (assigned < n) {
            const int part = static_cast<int>(std::max_element(frac.begin(), frac.end()) -
                                              frac.begin());
            ++count[part];
            frac[part] = -1.0;
            ++assigned;
        }
        if (count[0] == 0 || count[1] == 0 || count[2] == 0) {
            throw Error("nested_split: a class is too small to stratify 7:1:2");
        }
        std::size_t cursor = 0;
        for (std::size_t i = 0; i < count[0]; ++i) split.train.push_back(idx[cursor++]);
        for (std::size_t i = 0; i < count[1]; ++i) split.validation.push_back(idx[cursor++]);
        for (std::size_t i = 0; i < count[2]; ++i) split.test.push_back(idx[cursor++]);
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

std::vector<std::vector<int>> kfold_split(const std::vector<int>& labels, int k,
                                          std::uint64_t seed) {
    if (k < 2) {
        throw ConfigError("kfold_split: k must be >= 2");
    }
    const auto classes = shuffled_class_indices(labels, seed);
    for (const auto& idx : classes) {
        if (static_cast<int>(idx.size()) < k) {
            throw Error("kfold_split: a class has fewer records than folds");
        }
    }
    // Deal records round-robin, continuing the fold cursor across classes so
    // the totals stay balanced.
    std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
    std::size_t cursor = 0;
    for (const auto& idx : classes) {
        for (int record : idx) {
            folds[cursor % static_cast<std::size_t>(k)].push_back(record);
            ++cursor;
        }
    }
    for (auto& fold : folds) {
        std::sort(fold.begin(), fold.end());
    }
    return folds;
}

void save_ensemble(const StumpEnsemble& model, const std::filesystem::path& path) {
    nlohmann::json rounds = nlohmann::json::array();
    for (const Stump& stump : model.rounds) {
        rounds.push_back({{"feature", stump.feature},
                          {"threshold", stump.threshold},
                          {"polarity", stump.polarity},
                          {"alpha", stump.alpha}});
    }
    std::ofstream file(path);
    if (!file) {
        throw IoError("save_ensemble: cannot open " + path.string() + " for writing");
    }
    file << "HSCADA 1\n" << nlohmann::json{{"rounds", rounds}}.dump(2) << "\n";
    if (!file) {
        throw IoError("save_ensemble: failed to write " + path.string());
    }
}

StumpEnsemble load_ensemble(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) {
        throw IoError("load_ensemble: cannot open " + path.string());
    }
    std::string header;
    std::getline(file, header);
    if (header != "HSCADA 1") {
        throw ParseError("load_ensemble: bad header, expected 'HSCADA 1'", 1);
    }
    nlohmann::json body;
    try {
        file >> body;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("load_ensemble: " + path.string() + ": " + e.what());
    }
    StumpEnsemble model;
    try {
        for (const auto& item : body.at("rounds")) {
            Stump stump;
            stump.feature = item.at("feature").get<int>();
            stump.threshold = item.at("threshold").get<double>();
            stump.polarity = item.at("polarity").get<int>();
            stump.alpha = item.at("alpha").get<double>();
            model.rounds.push_back(stump);
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("load_ensemble: " + path.string() + ": " + e.what());
    }
    return model;
}

}  // namespace hsc
