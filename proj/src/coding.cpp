#include "hsc/coding.hpp"

#include "hsc/errors.hpp"
#include "hsc/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace hsc {

SparseCode SparseCode::from_dense(Eigen::Ref<const Eigen::VectorXd> dense) {
    SparseCode code;
    code.dim = static_cast<int>(dense.size());
    for (int j = 0; j < code.dim; ++j) {
        if (dense[j] != 0.0) {
            code.indices.push_back(j);
            code.values.push_back(dense[j]);
        }
    }
    return code;
}

Eigen::VectorXd SparseCode::to_dense() const {
    Eigen::VectorXd dense = Eigen::VectorXd::Zero(dim);
    for (std::size_t k = 0; k < indices.size(); ++k) {
        dense[indices[k]] = values[k];
    }
    return dense;
}

double SparseCode::l1_norm() const {
    double sum = 0.0;
    for (double v : values) {
        sum += std::abs(v);
    }
    return sum;
}

double SparseCode::squared_norm() const {
    double sum = 0.0;
    for (double v : values) {
        sum += v * v;
    }
    return sum;
}

void SccConfig::validate() const {
    if (!(lambda > 0.0)) {
        throw ConfigError("SccConfig: lambda must be > 0");
    }
    if (epochs < 1) {
        throw ConfigError("SccConfig: epochs must be >= 1");
    }
    if (cd_support_passes < 0) {
        throw ConfigError("SccConfig: cd_support_passes must be >= 0");
    }
    if (!(encode_tolerance > 0.0) || encode_max_passes < 1) {
        throw ConfigError("SccConfig: invalid encode stopping rule");
    }
}

Dictionary::Dictionary(Eigen::MatrixXd columns, Eigen::VectorXd hessian_diag)
    : columns_(std::move(columns)), hessian_diag_(std::move(hessian_diag)) {
    if (hessian_diag_.size() != columns_.cols()) {
        throw Error("Dictionary: Hessian diagonal length does not match atom count");
    }
}

Dictionary Dictionary::init_from_patches(const Eigen::MatrixXd& init) {
    Eigen::MatrixXd columns = init;
    const Eigen::Index t = columns.cols();
    for (Eigen::Index j = 0; j < t; ++j) {
        const double norm = columns.col(j).norm();
        if (norm == 0.0) {
            throw NumericError("Dictionary: cannot normalize a zero init patch (atom " +
                               std::to_string(j) + ")");
        }
        columns.col(j) /= norm;
    }
    return Dictionary(std::move(columns), Eigen::VectorXd::Zero(t));
}

double soft_threshold(double v, double lambda) {
    if (v < -lambda) {
        return v + lambda;
    }
    if (v > lambda) {
        return v - lambda;
    }
    return 0.0;
}

namespace {

/// x - D z for sparse z, in O(m * support).
Eigen::VectorXd residual_of(const Eigen::MatrixXd& D, const SparseCode& code,
                            Eigen::Ref<const Eigen::VectorXd> x) {
    Eigen::VectorXd r = x;
    for (std::size_t k = 0; k < code.indices.size(); ++k) {
        r -= code.values[k] * D.col(code.indices[k]);
    }
    return r;
}

double reconstruction_error(const Eigen::MatrixXd& D, const SparseCode& code,
                            Eigen::Ref<const Eigen::VectorXd> x) {
    return 0.5 * residual_of(D, code, x).squaredNorm();
}

}  // namespace

double objective_single(const Dictionary& dictionary, const SparseCode& code,
                        Eigen::Ref<const Eigen::VectorXd> x, double lambda) {
    if (code.dim != dictionary.atom_count() || x.size() != dictionary.patch_dim()) {
        throw Error("objective_single: dimension mismatch");
    }
    return reconstruction_error(dictionary.columns(), code, x) + lambda * code.l1_norm();
}

SparseCode cd_update(const Dictionary& dictionary, const SparseCode& warm_start,
                     Eigen::Ref<const Eigen::VectorXd> x, const SccConfig& config) {
    const Eigen::MatrixXd& D = dictionary.columns();
    const int t = dictionary.atom_count();
    if (warm_start.dim != t || x.size() != D.rows()) {
        throw Error("cd_update: dimension mismatch");
    }

    Eigen::VectorXd z = warm_start.to_dense();
    Eigen::VectorXd residual = residual_of(D, warm_start, x);

    auto update_coordinate = [&](int j) {
        const double proposal = soft_threshold(D.col(j).dot(residual) + z[j], config.lambda);
        const double delta = proposal - z[j];
        if (delta != 0.0) {
            residual -= delta * D.col(j);
            z[j] = proposal;
        }
    };

    // Full pass finds the support, the extra passes refine it.
    for (int j = 0; j < t; ++j) {
        update_coordinate(j);
    }
    std::vector<int> support;
    for (int j = 0; j < t; ++j) {
        if (z[j] != 0.0) {
            support.push_back(j);
        }
    }
    for (int pass = 0; pass < config.cd_support_passes; ++pass) {
        for (int j : support) {
            update_coordinate(j);
        }
    }
    return SparseCode::from_dense(z);
}

void sgd_dictionary_update(Dictionary& dictionary, const SparseCode& code,
                           Eigen::Ref<const Eigen::VectorXd> x) {
    if (code.dim != dictionary.atom_count() || x.size() != dictionary.patch_dim()) {
        throw Error("sgd_dictionary_update: dimension mismatch");
    }
    if (code.indices.empty()) {
        return;
    }

    Eigen::MatrixXd& D = dictionary.columns_;
    Eigen::VectorXd& h = dictionary.hessian_diag_;

    // Gradient w.r.t. a support column is z_j * (D z - x), taken at the
    // incoming dictionary: compute the shared residual first.
    Eigen::VectorXd residual = -x;
    for (std::size_t k = 0; k < code.indices.size(); ++k) {
        residual += code.values[k] * D.col(code.indices[k]);
    }

    for (std::size_t k = 0; k < code.indices.size(); ++k) {
        h[code.indices[k]] += code.values[k] * code.values[k];
    }

    // Rate cap keeps eta * ||z||^2 < 1, the sufficient-decrease condition.
    const double eta_cap = (1.0 - 1e-9) / code.squared_norm();
    for (std::size_t k = 0; k < code.indices.size(); ++k) {
        const int j = code.indices[k];
        assert(h[j] > 0.0);
        const double eta = std::min(1.0 / h[j], eta_cap);
        D.col(j) -= (eta * code.values[k]) * residual;
        const double norm_sq = D.col(j).squaredNorm();
        if (norm_sq > 1.0) {
            D.col(j) /= std::sqrt(norm_sq);
        }
    }
}

double ConvergenceDiag::max_cd_increase() const {
    double worst = -std::numeric_limits<double>::infinity();
    for (const StepRecord& r : records) {
        worst = std::max(worst, r.f_after_cd - r.f_before_cd);
    }
    return worst;
}

double ConvergenceDiag::max_sgd_increase() const {
    double worst = -std::numeric_limits<double>::infinity();
    for (const StepRecord& r : records) {
        worst = std::max(worst, r.g_after_sgd - r.g_before_sgd);
    }
    return worst;
}

std::vector<std::pair<double, double>> ConvergenceDiag::epoch_averages(
    int samples_per_epoch) const {
    std::vector<std::pair<double, double>> averages;
    if (samples_per_epoch <= 0 || records.size() % static_cast<std::size_t>(samples_per_epoch)) {
        throw Error("epoch_averages: record count is not a whole number of epochs");
    }
    const std::size_t epochs = records.size() / static_cast<std::size_t>(samples_per_epoch);
    for (std::size_t k = 0; k < epochs; ++k) {
        double start = 0.0, end = 0.0;
        for (int i = 0; i < samples_per_epoch; ++i) {
            const StepRecord& r = records[k * static_cast<std::size_t>(samples_per_epoch) +
                                          static_cast<std::size_t>(i)];
            start += r.f_before_cd;
            end += r.g_after_sgd + r.code_l1;  // code_l1 already carries lambda
        }
        averages.emplace_back(start / samples_per_epoch, end / samples_per_epoch);
    }
    return averages;
}

struct TrainState {
    static void bump_counters(Dictionary& d, std::int64_t epoch, std::int64_t index) {
        d.epoch_ = epoch;
        d.within_epoch_index_ = index;
    }
};

TrainResult train(const Eigen::MatrixXd& X, const SccConfig& config, const Eigen::MatrixXd& init) {
    config.validate();
    const Eigen::Index n = X.cols();
    const Eigen::Index m = X.rows();
    const Eigen::Index t = init.cols();
    if (n == 0) {
        throw Error("train: empty patch stream");
    }
    if (init.rows() != m) {
        throw Error("train: init patch dimension does not match input dimension");
    }
    if (t > n) {
        throw Error("train: atom count exceeds sample count");
    }

    Eigen::MatrixXd samples = X;
    if (config.normalize_inputs) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double norm = samples.col(i).norm();
            if (norm > 0.0) {
                samples.col(i) /= norm;
            }
        }
    }

    Dictionary dictionary = Dictionary::init_from_patches(init);
    std::vector<SparseCode> warm(static_cast<std::size_t>(n));
    for (auto& code : warm) {
        code.dim = static_cast<int>(t);
    }

    ConvergenceDiag diag;
    diag.records.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(config.epochs));

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config.seed, std::string_view("scc-shuffle")));

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        if (config.shuffle) {
            for (std::size_t i = order.size(); i > 1; --i) {
                std::swap(order[i - 1], order[rng.next_index(i)]);
            }
        }
        for (Eigen::Index step = 0; step < n; ++step) {
            const int i = order[static_cast<std::size_t>(step)];
            const auto x = samples.col(i);

            StepRecord record;
            record.epoch = epoch;
            record.sample = i;
            record.lipschitz_estimate = dictionary.lipschitz_estimate();
            record.f_before_cd = objective_single(dictionary, warm[i], x, config.lambda);

            SparseCode code = cd_update(dictionary, warm[i], x, config);
            record.code_l1 = config.lambda * code.l1_norm();
            record.g_before_sgd = reconstruction_error(dictionary.columns(), code, x);
            record.f_after_cd = record.g_before_sgd + record.code_l1;

            sgd_dictionary_update(dictionary, code, x);
            record.g_after_sgd = reconstruction_error(dictionary.columns(), code, x);

            warm[i] = std::move(code);
            TrainState::bump_counters(dictionary, epoch, step + 1);
            diag.records.push_back(record);
        }
    }
    return TrainResult{std::move(dictionary), std::move(diag)};
}

SparseCode encode(const Dictionary& dictionary, Eigen::Ref<const Eigen::VectorXd> x_in,
                  const SccConfig& config) {
    const Eigen::MatrixXd& D = dictionary.columns();
    const int t = dictionary.atom_count();
    if (x_in.size() != D.rows()) {
        throw Error("encode: dimension mismatch");
    }

    Eigen::VectorXd x = x_in;
    if (config.normalize_inputs) {
        const double norm = x.norm();
        if (norm > 0.0) {
            x /= norm;
        }
    }

    Eigen::VectorXd z = Eigen::VectorXd::Zero(t);
    Eigen::VectorXd residual = x;

    auto sweep = [&](const auto& coords) {
        double max_change = 0.0;
        for (int j : coords) {
            const double proposal = soft_threshold(D.col(j).dot(residual) + z[j], config.lambda);
            const double delta = proposal - z[j];
            if (delta != 0.0) {
                residual -= delta * D.col(j);
                z[j] = proposal;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        return max_change;
    };

    std::vector<int> all(static_cast<std::size_t>(t));
    std::iota(all.begin(), all.end(), 0);

    // Converged means a full cyclic pass moves no coordinate by more than the
    // tolerance. Between full passes the active set is refined on its own,
    // which is where the zigzagging between correlated atoms happens; those
    // sweeps are cheap because the support is small.
    int passes_used = 0;
    while (passes_used < config.encode_max_passes) {
        const double full_change = sweep(all);
        ++passes_used;
        if (full_change < config.encode_tolerance) {
            break;
        }
        std::vector<int> support;
        for (int j = 0; j < t; ++j) {
            if (z[j] != 0.0) {
                support.push_back(j);
            }
        }
        while (!support.empty() && passes_used < config.encode_max_passes) {
            const double support_change = sweep(support);
            ++passes_used;
            if (support_change < config.encode_tolerance) {
                break;
            }
        }
        // Refresh the residual so incremental rounding cannot accumulate
        // across a long encode.
        residual = x - D * z;
    }
    return SparseCode::from_dense(z);
}

void save_dictionary(const Dictionary& dictionary, double lambda,
                     const std::filesystem::path& path) {
    nlohmann::json body;
    body["m"] = dictionary.patch_dim();
    body["t"] = dictionary.atom_count();
    body["lambda"] = lambda;
    body["epoch"] = dictionary.epoch();
    body["within_epoch_index"] = dictionary.within_epoch_index();
    std::vector<double> columns(dictionary.columns().data(),
                                dictionary.columns().data() + dictionary.columns().size());
    body["columns"] = columns;  // column-major
    std::vector<double> hessian(dictionary.hessian_diag().data(),
                                dictionary.hessian_diag().data() + dictionary.hessian_diag().size());
    body["hessian_diag"] = hessian;

    std::ofstream file(path);
    if (!file) {
        throw IoError("save_dictionary: cannot open " + path.string() + " for writing");
    }
    file << "HSCDICT 1\n" << body.dump(2) << "\n";
    if (!file) {
        throw IoError("save_dictionary: failed to write " + path.string());
    }
}

LoadedDictionary load_dictionary(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) {
        throw IoError("load_dictionary: cannot open " + path.string());
    }
    std::string header;
    std::getline(file, header);
    if (header != "HSCDICT 1") {
        throw ParseError("load_dictionary: bad header, expected 'HSCDICT 1'", 1);
    }
    nlohmann::json body;
    try {
        file >> body;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("load_dictionary: " + path.string() + ": " + e.what());
    }

    try {
        const int m = body.at("m").get<int>();
        const int t = body.at("t").get<int>();
        const auto columns = body.at("columns").get<std::vector<double>>();
        const auto hessian = body.at("hessian_diag").get<std::vector<double>>();
        if (m < 1 || t < 1 ||
            columns.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(t) ||
            hessian.size() != static_cast<std::size_t>(t)) {
            throw IoError("load_dictionary: " + path.string() + ": inconsistent dimensions");
        }

        Eigen::MatrixXd cols = Eigen::Map<const Eigen::MatrixXd>(columns.data(), m, t);
        Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(hessian.data(), t);
        Dictionary dictionary(std::move(cols), std::move(h));
        TrainState::bump_counters(dictionary, body.at("epoch").get<std::int64_t>(),
                                  body.at("within_epoch_index").get<std::int64_t>());
        return LoadedDictionary{std::move(dictionary), body.at("lambda").get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw IoError("load_dictionary: " + path.string() + ": " + e.what());
    }
}

}  // namespace hsc
