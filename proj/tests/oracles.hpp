// Test-only oracles, intentionally independent of the library code paths
// they cross-check.
#pragma once

#include <Eigen/Core>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracles {

// ---------------------------------------------------------------------------
// Hyperbolic distance via the Poincare model. Uses its own Klein->Poincare
// conversion and the arcosh form of the Poincare metric, sharing nothing with
// the chord construction in the library.
// ---------------------------------------------------------------------------

inline std::pair<double, double> klein_to_poincare_point(double u, double v) {
    const double norm_sq = u * u + v * v;
    const double scale = 1.0 / (1.0 + std::sqrt(1.0 - norm_sq));
    return {scale * u, scale * v};
}

inline double poincare_distance(double pu, double pv, double qu, double qv) {
    const double diff_sq = (pu - qu) * (pu - qu) + (pv - qv) * (pv - qv);
    const double p_sq = pu * pu + pv * pv;
    const double q_sq = qu * qu + qv * qv;
    const double argument = 1.0 + 2.0 * diff_sq / ((1.0 - p_sq) * (1.0 - q_sq));
    return std::acosh(argument);
}

/// Klein-model distance through the Poincare model.
inline double hyperbolic_distance_via_poincare(double au, double av, double bu, double bv) {
    const auto [pu, pv] = klein_to_poincare_point(au, av);
    const auto [qu, qv] = klein_to_poincare_point(bu, bv);
    return poincare_distance(pu, pv, qu, qv);
}

// ---------------------------------------------------------------------------
// Exhaustive cyclic coordinate descent for the lasso
//   min_z 0.5 ||D z - x||^2 + lambda ||z||_1
// with the residual recomputed densely every update. Converges for any
// column norms <= 1; used as the ground-truth solver on small instances.
// ---------------------------------------------------------------------------

inline Eigen::VectorXd exhaustive_cd_lasso(const Eigen::MatrixXd& D, const Eigen::VectorXd& x,
                                           double lambda, double tolerance = 1e-12,
                                           int max_passes = 200000) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(D.cols());
    for (int pass = 0; pass < max_passes; ++pass) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < D.cols(); ++j) {
            const Eigen::VectorXd residual = x - D * z;  // dense recompute
            const double raw = D.col(j).dot(residual) + z[j];
            double updated;
            if (raw < -lambda) {
                updated = raw + lambda;
            } else if (raw > lambda) {
                updated = raw - lambda;
            } else {
                updated = 0.0;
            }
            max_change = std::max(max_change, std::abs(updated - z[j]));
            z[j] = updated;
        }
        if (max_change < tolerance) {
            break;
        }
    }
    return z;
}

inline double lasso_objective(const Eigen::MatrixXd& D, const Eigen::VectorXd& z,
                              const Eigen::VectorXd& x, double lambda) {
    return 0.5 * (D * z - x).squaredNorm() + lambda * z.lpNorm<1>();
}

/// Largest violation of the lasso first-order conditions: inactive atoms need
/// |d_j . r| <= lambda, active atoms d_j . r = lambda * sign(z_j).
inline double kkt_residual(const Eigen::MatrixXd& D, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& x, double lambda) {
    const Eigen::VectorXd residual = x - D * z;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < D.cols(); ++j) {
        const double corr = D.col(j).dot(residual);
        if (z[j] == 0.0) {
            worst = std::max(worst, std::abs(corr) - lambda);
        } else {
            worst = std::max(worst, std::abs(corr - lambda * (z[j] > 0.0 ? 1.0 : -1.0)));
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Two-sample Welch t-test, normal approximation of the p-value (the sample
// sizes in these tests run to thousands, where the approximation error is
// far below the asserted significance level).
// ---------------------------------------------------------------------------

struct Sample {
    double mean = 0.0;
    double variance = 0.0;
    long count = 0;
};

inline Sample summarize(const std::vector<double>& values) {
    Sample sample;
    sample.count = static_cast<long>(values.size());
    for (double v : values) {
        sample.mean += v;
    }
    sample.mean /= static_cast<double>(sample.count);
    for (double v : values) {
        sample.variance += (v - sample.mean) * (v - sample.mean);
    }
    sample.variance /= static_cast<double>(sample.count - 1);
    return sample;
}

inline double welch_p_value(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2) {
        throw std::invalid_argument("welch_p_value: need two samples of size >= 2");
    }
    const Sample sa = summarize(a);
    const Sample sb = summarize(b);
    const double se = std::sqrt(sa.variance / sa.count + sb.variance / sb.count);
    const double t = (sa.mean - sb.mean) / se;
    // Two-sided via the normal tail.
    return std::erfc(std::abs(t) / std::sqrt(2.0));
}

// ---------------------------------------------------------------------------
// Deterministic random generators for property tests.
// ---------------------------------------------------------------------------

/// Point with |p| <= max_radius, uniform in area.
inline std::pair<double, double> random_disk_point(std::mt19937_64& rng,
                                                   double max_radius = 0.95) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double radius = max_radius * std::sqrt(unit(rng));
    const double angle = 2.0 * 3.141592653589793 * unit(rng);
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace oracles
