#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace hsc {

/// Sparse coefficient vector with explicit support: strictly ascending
/// indices, nonzero values, ambient dimension `dim`.
struct SparseCode {
    std::vector<int> indices;
    std::vector<double> values;
    int dim = 0;

    static SparseCode from_dense(Eigen::Ref<const Eigen::VectorXd> dense);
    Eigen::VectorXd to_dense() const;

    std::size_t support_size() const { return indices.size(); }
    double l1_norm() const;
    double squared_norm() const;
};

struct SccConfig {
    double lambda = 0.10;
    int epochs = 10;
    int cd_support_passes = 3;
    bool normalize_inputs = true;
    bool shuffle = false;  // fixed ascending sample order unless enabled
    std::uint64_t seed = 0;

    // encode() stopping rule. The pass budget is a safety valve only; on
    // coherent dictionaries a few hundred passes can be needed before the
    // per-pass change reaches the tolerance, and stopping earlier leaves the
    // first-order optimality residual orders of magnitude above it.
    double encode_tolerance = 1e-8;
    int encode_max_passes = 2000;

    void validate() const;
};

/// Dictionary of unit-ball atoms plus the diagonal Hessian accumulator that
/// drives the per-column learning rates.
class Dictionary {
public:
    Dictionary(Eigen::MatrixXd columns, Eigen::VectorXd hessian_diag);

    /// Columns taken from `init` (one training patch per atom), each rescaled
    /// to unit norm; Hessian accumulator starts at zero.
    static Dictionary init_from_patches(const Eigen::MatrixXd& init);

    int patch_dim() const { return static_cast<int>(columns_.rows()); }   // m
    int atom_count() const { return static_cast<int>(columns_.cols()); }  // t

    const Eigen::MatrixXd& columns() const { return columns_; }
    const Eigen::VectorXd& hessian_diag() const { return hessian_diag_; }

    std::int64_t epoch() const { return epoch_; }
    std::int64_t within_epoch_index() const { return within_epoch_index_; }

    /// Squared Frobenius norm; an upper bound for the CD Lipschitz constant.
    double lipschitz_estimate() const { return columns_.squaredNorm(); }

private:
    friend void sgd_dictionary_update(Dictionary&, const SparseCode&,
                                      Eigen::Ref<const Eigen::VectorXd>);
    friend struct TrainState;

    Eigen::MatrixXd columns_;      // m x t
    Eigen::VectorXd hessian_diag_; // t
    std::int64_t epoch_ = 0;
    std::int64_t within_epoch_index_ = 0;
};

/// One optimizer step of the convergence diagnostics.
struct StepRecord {
    int epoch = 0;   // 1-based
    int sample = 0;  // 0-based index within the epoch
    double f_before_cd = 0.0;
    double f_after_cd = 0.0;
    double g_before_sgd = 0.0;
    double g_after_sgd = 0.0;
    double code_l1 = 0.0;
    double lipschitz_estimate = 0.0;
};

struct ConvergenceDiag {
    std::vector<StepRecord> records;

    /// Largest objective increase across CD steps (<= 0 when all descend).
    double max_cd_increase() const;
    /// Largest reconstruction-error increase across SGD steps.
    double max_sgd_increase() const;

    /// Per-epoch averages (start, end) where start averages f_i at the
    /// pre-CD dictionary/code and end averages f_i at the post-SGD
    /// dictionary with the new code.
    std::vector<std::pair<double, double>> epoch_averages(int samples_per_epoch) const;
};

struct TrainResult {
    Dictionary dictionary;
    ConvergenceDiag diag;
};

/// Soft-thresholding shrinkage: v + lambda below -lambda, zero inside the
/// dead zone, v - lambda above.
double soft_threshold(double v, double lambda);

/// 0.5 * ||D z - x||^2 + lambda * ||z||_1
double objective_single(const Dictionary& dictionary, const SparseCode& code,
                        Eigen::Ref<const Eigen::VectorXd> x, double lambda);

/// One full cyclic coordinate-descent pass (z_j <- h_lambda(d_j . (x - Dz) + z_j)
/// with the residual maintained incrementally), then cd_support_passes extra
/// passes restricted to the support found. Never increases the objective.
SparseCode cd_update(const Dictionary& dictionary, const SparseCode& warm_start,
                     Eigen::Ref<const Eigen::VectorXd> x, const SccConfig& config);

/// Projected second-order SGD step on the support columns: accumulates z_j^2
/// into the Hessian diagonal, steps each support column against the shared
/// residual with rate min(1/h_jj, (1 - 1e-9)/||z||^2), and rescales any
/// column that leaves the unit ball. Never increases 0.5 * ||D z - x||^2.
void sgd_dictionary_update(Dictionary& dictionary, const SparseCode& code,
                           Eigen::Ref<const Eigen::VectorXd> x);

/// Stochastic coordinate coding over the columns of X (one sample per step,
/// warm-started codes persisted across epochs). `init` supplies one column
/// per atom.
TrainResult train(const Eigen::MatrixXd& X, const SccConfig& config, const Eigen::MatrixXd& init);

/// Sparse code of x against a frozen dictionary: cyclic CD from zero until
/// the largest coordinate change in a pass falls below encode_tolerance or
/// encode_max_passes is reached.
SparseCode encode(const Dictionary& dictionary, Eigen::Ref<const Eigen::VectorXd> x,
                  const SccConfig& config);

/// `HSCDICT 1` container: header line, then a JSON body with dimensions,
/// lambda, counters, column-major matrix and Hessian diagonal.
void save_dictionary(const Dictionary& dictionary, double lambda,
                     const std::filesystem::path& path);
struct LoadedDictionary {
    Dictionary dictionary;
    double lambda = 0.0;
};
LoadedDictionary load_dictionary(const std::filesystem::path& path);

}  // namespace hsc
