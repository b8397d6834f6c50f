#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "hsc/coding.hpp"
#include "hsc/errors.hpp"
#include "oracles.hpp"

#include <Eigen/QR>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace hsc;
namespace fs = std::filesystem;

namespace {

Eigen::MatrixXd random_unit_columns(int m, int t, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd D(m, t);
    for (int j = 0; j < t; ++j) {
        for (int i = 0; i < m; ++i) {
            D(i, j) = gauss(rng);
        }
        D.col(j).normalize();
    }
    return D;
}

Eigen::VectorXd random_vector(int m, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd x(m);
    for (int i = 0; i < m; ++i) {
        x[i] = gauss(rng);
    }
    return x;
}

SccConfig test_config(double lambda) {
    SccConfig config;
    config.lambda = lambda;
    config.normalize_inputs = false;
    return config;
}

}  // namespace

TEST_CASE("soft_threshold piecewise definition") {
    CHECK(soft_threshold(0.0, 0.1) == 0.0);
    CHECK(soft_threshold(0.5, 0.1) == doctest::Approx(0.4));
    CHECK(soft_threshold(-0.05, 0.1) == 0.0);
    CHECK(soft_threshold(-0.5, 0.1) == doctest::Approx(-0.4));
    CHECK(std::abs(soft_threshold(-0.5, 0.1)) <= 0.5);
}

TEST_CASE("objective_single closed forms and independent recomputation") {
    std::mt19937_64 rng(1);

    SUBCASE("zero code gives half the squared norm") {
        const Dictionary dict = Dictionary::init_from_patches(random_unit_columns(6, 9, rng));
        const Eigen::VectorXd x = random_vector(6, rng);
        SparseCode zero;
        zero.dim = 9;
        CHECK(objective_single(dict, zero, x, 0.3) ==
              doctest::Approx(0.5 * x.squaredNorm()).epsilon(1e-12));
    }

    SUBCASE("identity dictionary with dense code leaves only the l1 term") {
        const Dictionary dict(Eigen::MatrixXd::Identity(5, 5), Eigen::VectorXd::Zero(5));
        const Eigen::VectorXd x = random_vector(5, rng);
        const SparseCode code = SparseCode::from_dense(x);
        CHECK(objective_single(dict, code, x, 0.2) ==
              doctest::Approx(0.2 * x.lpNorm<1>()).epsilon(1e-12));
    }

    SUBCASE("random instance matches a two-term evaluation") {
        const Dictionary dict = Dictionary::init_from_patches(random_unit_columns(7, 11, rng));
        const Eigen::VectorXd x = random_vector(7, rng);
        Eigen::VectorXd dense = Eigen::VectorXd::Zero(11);
        dense[2] = 0.8;
        dense[7] = -1.3;
        const SparseCode code = SparseCode::from_dense(dense);
        const double expected = 0.5 * (dict.columns() * dense - x).squaredNorm() +
                                0.4 * dense.lpNorm<1>();
        CHECK(objective_single(dict, code, x, 0.4) == doctest::Approx(expected).epsilon(1e-12));
        CHECK_THROWS_AS(objective_single(dict, code, random_vector(6, rng), 0.4), Error);
    }
}

TEST_CASE("cd_update with an orthonormal dictionary solves in one pass") {
    std::mt19937_64 rng(2);
    const int m = 8;
    const Eigen::MatrixXd gaussian = random_unit_columns(m, m, rng);
    const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian).householderQ();
    const Dictionary dict(Q, Eigen::VectorXd::Zero(m));
    const Eigen::VectorXd x = random_vector(m, rng);

    SparseCode zero;
    zero.dim = m;
    const SparseCode code = cd_update(dict, zero, x, test_config(0.25));
    const Eigen::VectorXd dense = code.to_dense();
    for (int j = 0; j < m; ++j) {
        CHECK(dense[j] == doctest::Approx(soft_threshold(Q.col(j).dot(x), 0.25)).epsilon(1e-12));
    }
}

TEST_CASE("cd_update single-atom analytic solution") {
    Eigen::VectorXd x(4);
    x << 0.5, -0.5, 0.5, 0.5;  // unit norm
    Eigen::MatrixXd D = x;
    const Dictionary dict(D, Eigen::VectorXd::Zero(1));
    SparseCode zero;
    zero.dim = 1;
    const SparseCode code = cd_update(dict, zero, x, test_config(0.1));
    REQUIRE(code.indices == std::vector<int>{0});
    CHECK(code.values[0] == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("cd_update never increases the objective and the support is valid") {
    std::mt19937_64 rng(3);
    const SccConfig config = test_config(0.15);
    for (int trial = 0; trial < 50; ++trial) {
        const Dictionary dict = Dictionary::init_from_patches(random_unit_columns(8, 12, rng));
        const Eigen::VectorXd x = random_vector(8, rng).normalized();

        SparseCode code;
        code.dim = 12;
        double objective = objective_single(dict, code, x, config.lambda);
        for (int step = 0; step < 4; ++step) {
            code = cd_update(dict, code, x, config);
            const double next = objective_single(dict, code, x, config.lambda);
            CHECK(next <= objective + 1e-12);
            objective = next;
        }
        for (std::size_t k = 0; k < code.indices.size(); ++k) {
            CHECK(code.values[k] != 0.0);
            if (k > 0) {
                CHECK(code.indices[k] > code.indices[k - 1]);
            }
        }
    }
}

TEST_CASE("encode satisfies the exhaustive-CD oracle and KKT conditions") {
    std::mt19937_64 rng(4);
    const SccConfig config = test_config(0.2);
    for (int trial = 0; trial < 25; ++trial) {
        const int m = 5 + static_cast<int>(rng() % 6);   // <= 10
        const int t = m + static_cast<int>(rng() % 5);   // <= 15
        const Eigen::MatrixXd D = random_unit_columns(m, t, rng);
        const Dictionary dict(D, Eigen::VectorXd::Zero(t));
        const Eigen::VectorXd x = random_vector(m, rng).normalized();

        const SparseCode code = encode(dict, x, config);
        const Eigen::VectorXd dense = code.to_dense();
        CHECK(oracles::kkt_residual(D, dense, x, config.lambda) <= 1e-6);

        const Eigen::VectorXd oracle = oracles::exhaustive_cd_lasso(D, x, config.lambda);
        CHECK(oracles::lasso_objective(D, dense, x, config.lambda) <=
              oracles::lasso_objective(D, oracle, x, config.lambda) + 1e-8);
        CHECK(std::abs(oracles::lasso_objective(D, dense, x, config.lambda) -
                       oracles::lasso_objective(D, oracle, x, config.lambda)) <= 1e-8);
    }
}

TEST_CASE("encode trivia: zero input, atom recovery, idempotence, l1 bound") {
    std::mt19937_64 rng(5);
    const int m = 40;
    const int t = 6;
    const Eigen::MatrixXd D = random_unit_columns(m, t, rng);
    const Dictionary dict(D, Eigen::VectorXd::Zero(t));
    SccConfig config = test_config(0.1);

    SUBCASE("zero input gives the empty code") {
        const SparseCode code = encode(dict, Eigen::VectorXd::Zero(m), config);
        CHECK(code.indices.empty());
    }

    SUBCASE("an atom is recovered with weight close to 1 - lambda") {
        // Random high-dimensional atoms are near-orthogonal.
        const SparseCode code = encode(dict, D.col(2), config);
        const Eigen::VectorXd dense = code.to_dense();
        CHECK(dense[2] == doctest::Approx(1.0 - config.lambda).epsilon(0.05));
    }

    SUBCASE("idempotent on a frozen dictionary") {
        const Eigen::VectorXd x = random_vector(m, rng);
        const SparseCode a = encode(dict, x, config);
        const SparseCode b = encode(dict, x, config);
        CHECK(a.indices == b.indices);
        CHECK(a.values == b.values);
    }

    SUBCASE("converged codes satisfy the l1 bound for unit inputs") {
        config.normalize_inputs = true;
        for (int trial = 0; trial < 20; ++trial) {
            const SparseCode code = encode(dict, random_vector(m, rng), config);
            CHECK(code.l1_norm() <= 1.0 / (2.0 * config.lambda) + 1e-9);
        }
    }
}

TEST_CASE("sgd_dictionary_update support handling and descent") {
    std::mt19937_64 rng(6);

    SUBCASE("empty code changes nothing") {
        Dictionary dict = Dictionary::init_from_patches(random_unit_columns(6, 8, rng));
        const Eigen::MatrixXd before = dict.columns();
        const Eigen::VectorXd h_before = dict.hessian_diag();
        SparseCode zero;
        zero.dim = 8;
        sgd_dictionary_update(dict, zero, random_vector(6, rng));
        CHECK(dict.columns() == before);
        CHECK(dict.hessian_diag() == h_before);
    }

    SUBCASE("only support columns move") {
        Dictionary dict = Dictionary::init_from_patches(random_unit_columns(6, 8, rng));
        const Eigen::MatrixXd before = dict.columns();
        SparseCode code;
        code.dim = 8;
        code.indices = {3};
        code.values = {0.7};
        sgd_dictionary_update(dict, code, random_vector(6, rng));
        for (int j = 0; j < 8; ++j) {
            if (j == 3) {
                CHECK(dict.columns().col(j) != before.col(j));
                CHECK(dict.hessian_diag()[j] == doctest::Approx(0.49));
            } else {
                CHECK(dict.columns().col(j) == before.col(j));
                CHECK(dict.hessian_diag()[j] == 0.0);
            }
        }
    }

    SUBCASE("reconstruction error never increases; feasibility holds") {
        const SccConfig config = test_config(0.12);
        for (int trial = 0; trial < 50; ++trial) {
            Dictionary dict = Dictionary::init_from_patches(random_unit_columns(7, 10, rng));
            const Eigen::VectorXd x = random_vector(7, rng).normalized();
            SparseCode zero;
            zero.dim = 10;
            const SparseCode code = cd_update(dict, zero, x, config);
            if (code.indices.empty()) {
                continue;
            }
            const double g_before =
                0.5 * (dict.columns() * code.to_dense() - x).squaredNorm();
            Eigen::VectorXd h_before = dict.hessian_diag();
            sgd_dictionary_update(dict, code, x);
            const double g_after =
                0.5 * (dict.columns() * code.to_dense() - x).squaredNorm();
            CHECK(g_after <= g_before + 1e-12);
            for (int j = 0; j < 10; ++j) {
                CHECK(dict.columns().col(j).squaredNorm() <= 1.0 + 1e-12);
                CHECK(dict.hessian_diag()[j] >= h_before[j]);  // monotone accumulator
            }
        }
    }
}

TEST_CASE("train reaches low reconstruction error on a basis-vector stream") {
    const int m = 6;
    Eigen::MatrixXd X = Eigen::MatrixXd::Identity(m, m);
    SccConfig config = test_config(0.01);
    config.epochs = 10;

    const TrainResult result = train(X, config, X);
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
        const SparseCode code = encode(result.dictionary, X.col(i), config);
        total += 0.5 * (result.dictionary.columns() * code.to_dense() - X.col(i)).squaredNorm();
    }
    CHECK(total / m < config.lambda);
}

TEST_CASE("train diagnostics count steps and satisfy the descent guarantees") {
    std::mt19937_64 rng(7);
    const int m = 10, t = 14, n = 40;
    Eigen::MatrixXd X(m, n);
    for (int i = 0; i < n; ++i) {
        X.col(i) = random_vector(m, rng);
    }
    Eigen::MatrixXd init(m, t);
    for (int j = 0; j < t; ++j) {
        init.col(j) = X.col(j % n);
    }

    SccConfig config;
    config.lambda = 0.17;
    config.epochs = 3;

    const TrainResult result = train(X, config, init);
    CHECK(result.diag.records.size() == static_cast<std::size_t>(n * config.epochs));
    CHECK(result.diag.max_cd_increase() <= 1e-12);
    CHECK(result.diag.max_sgd_increase() <= 1e-12);
    CHECK(result.dictionary.epoch() == config.epochs);
    CHECK(result.dictionary.within_epoch_index() == n);

    for (const auto& [start, end] : result.diag.epoch_averages(n)) {
        CHECK(end <= start + 1e-10);
    }
    for (const StepRecord& record : result.diag.records) {
        // Feasible columns have norm^2 <= 1, so L >= 1 implies the required
        // L >= max column-norm^2.
        CHECK(record.lipschitz_estimate >= 1.0 - 1e-12);
    }

    SUBCASE("epochs = 1 gives exactly n records") {
        SccConfig one = config;
        one.epochs = 1;
        CHECK(train(X, one, init).diag.records.size() == static_cast<std::size_t>(n));
    }

    SUBCASE("identical runs are bit-identical") {
        const TrainResult again = train(X, config, init);
        CHECK(again.dictionary.columns() == result.dictionary.columns());
        CHECK(again.dictionary.hessian_diag() == result.dictionary.hessian_diag());
    }

    SUBCASE("column feasibility after training") {
        for (int j = 0; j < t; ++j) {
            CHECK(result.dictionary.columns().col(j).squaredNorm() <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("shuffled sample order keeps the step guarantees and stays seeded") {
    std::mt19937_64 rng(17);
    const int m = 8, t = 10, n = 30;
    Eigen::MatrixXd X(m, n);
    for (int i = 0; i < n; ++i) {
        X.col(i) = random_vector(m, rng);
    }
    SccConfig config;
    config.lambda = 0.15;
    config.epochs = 4;
    config.shuffle = true;
    config.seed = 2027;

    const TrainResult a = train(X, config, X.leftCols(t));
    const TrainResult b = train(X, config, X.leftCols(t));
    CHECK(a.dictionary.columns() == b.dictionary.columns());
    CHECK(a.diag.max_cd_increase() <= 1e-12);
    CHECK(a.diag.max_sgd_increase() <= 1e-12);

    // Shuffling really reorders the later epochs.
    bool reordered = false;
    for (int i = 0; i < n; ++i) {
        if (a.diag.records[static_cast<std::size_t>(n + i)].sample != i) {
            reordered = true;
        }
    }
    CHECK(reordered);

    SccConfig reseeded = config;
    reseeded.seed = 2028;
    const TrainResult c = train(X, reseeded, X.leftCols(t));
    CHECK(c.dictionary.columns() != a.dictionary.columns());
}

TEST_CASE("encode satisfies KKT against sub-unit-norm atoms") {
    // SGD steps can leave columns strictly inside the unit ball; the
    // coordinate update must still land on a first-order optimal point.
    std::mt19937_64 rng(18);
    std::uniform_real_distribution<double> shrink(0.2, 1.0);
    SccConfig config = test_config(0.15);
    for (int trial = 0; trial < 30; ++trial) {
        Eigen::MatrixXd D = random_unit_columns(7, 11, rng);
        for (int j = 0; j < 11; ++j) {
            D.col(j) *= shrink(rng);
        }
        const Dictionary dict(D, Eigen::VectorXd::Zero(11));
        const Eigen::VectorXd x = random_vector(7, rng).normalized();
        const SparseCode code = encode(dict, x, config);
        CHECK(oracles::kkt_residual(D, code.to_dense(), x, config.lambda) <= 1e-6);
    }
}

TEST_CASE("sgd rate cap binds for large codes and still descends") {
    std::mt19937_64 rng(19);
    Dictionary dict = Dictionary::init_from_patches(random_unit_columns(6, 8, rng));
    SparseCode code;
    code.dim = 8;
    code.indices = {1, 4};
    code.values = {6.0, -8.0};  // fresh Hessian entries, so 1/h_jj > the cap
    const Eigen::VectorXd x = random_vector(6, rng);

    const Eigen::VectorXd dense = code.to_dense();
    const double g_before = 0.5 * (dict.columns() * dense - x).squaredNorm();
    sgd_dictionary_update(dict, code, x);
    const double g_after = 0.5 * (dict.columns() * dense - x).squaredNorm();
    CHECK(g_after <= g_before + 1e-12);
    CHECK(dict.hessian_diag()[1] == doctest::Approx(36.0));
    CHECK(dict.hessian_diag()[4] == doctest::Approx(64.0));
    for (int j = 0; j < 8; ++j) {
        CHECK(dict.columns().col(j).squaredNorm() <= 1.0 + 1e-12);
    }
}

TEST_CASE("train input validation") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Identity(4, 4);
    SccConfig config = test_config(0.1);

    SccConfig bad_epochs = config;
    bad_epochs.epochs = 0;
    CHECK_THROWS_AS(train(X, bad_epochs, X), ConfigError);

    SccConfig bad_lambda = config;
    bad_lambda.lambda = 0.0;
    CHECK_THROWS_AS(train(X, bad_lambda, X), ConfigError);

    Eigen::MatrixXd empty(4, 0);
    CHECK_THROWS_AS(train(empty, config, X), Error);

    Eigen::MatrixXd too_many_atoms(4, 6);
    too_many_atoms.setOnes();
    CHECK_THROWS_AS(train(X, config, too_many_atoms), Error);

    Eigen::MatrixXd zero_init = Eigen::MatrixXd::Zero(4, 2);
    CHECK_THROWS_AS(train(X, config, zero_init), NumericError);
}

TEST_CASE("dictionary serialization round trip") {
    std::mt19937_64 rng(8);
    Eigen::MatrixXd X(5, 12);
    for (int i = 0; i < 12; ++i) {
        X.col(i) = random_vector(5, rng);
    }
    SccConfig config = test_config(0.21);
    config.epochs = 2;
    const TrainResult result = train(X, config, X.leftCols(7));

    const fs::path dir = fs::temp_directory_path() / "hsc_coding_tests";
    fs::create_directories(dir);
    const fs::path path = dir / "dictionary.hscdict";
    save_dictionary(result.dictionary, config.lambda, path);

    const LoadedDictionary loaded = load_dictionary(path);
    CHECK(loaded.lambda == config.lambda);
    CHECK(loaded.dictionary.columns() == result.dictionary.columns());
    CHECK(loaded.dictionary.hessian_diag() == result.dictionary.hessian_diag());
    CHECK(loaded.dictionary.epoch() == result.dictionary.epoch());
    CHECK(loaded.dictionary.within_epoch_index() == result.dictionary.within_epoch_index());

    const fs::path bad = dir / "bad.hscdict";
    {
        std::ofstream file(bad);
        file << "HSCDICT 2\n{}\n";
    }
    CHECK_THROWS_AS(load_dictionary(bad), ParseError);
    CHECK_THROWS_AS(load_dictionary(dir / "missing.hscdict"), IoError);
}
