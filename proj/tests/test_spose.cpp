#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "test_util.hpp"
#include "tripalign/rng.hpp"
#include "tripalign/spose.hpp"

using namespace tripalign;

namespace {

EmbeddingMatrix nonneg(Eigen::MatrixXd m) {
    EmbeddingMatrix emb;
    emb.values = std::move(m);
    emb.nonnegative = true;
    return emb;
}

/// Random sorted triple of distinct items.
std::array<int, 3> random_triple(Rng& rng, int n) {
    const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    int j = i, k = i;
    while (j == i) j = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    while (k == i || k == j) k = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    std::array<int, 3> t = {i, j, k};
    std::sort(t.begin(), t.end());
    return t;
}

/// Judgments whose chosen pair is the most similar pair under `x`.
std::vector<OddOneOutJudgment> planted_judgments(const Eigen::MatrixXd& x, int count,
                                                 std::uint64_t seed) {
    Rng rng(seed);
    const int n = static_cast<int>(x.rows());
    std::vector<OddOneOutJudgment> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int t = 0; t < count; ++t) {
        const auto [i, j, k] = random_triple(rng, n);
        const double s_ij = x.row(i).dot(x.row(j));
        const double s_ik = x.row(i).dot(x.row(k));
        const double s_jk = x.row(j).dot(x.row(k));
        OddOneOutJudgment o;
        o.first = i;
        o.second = j;
        o.third = k;
        if (s_ij >= s_ik && s_ij >= s_jk) {
            o.pair_a = i;
            o.pair_b = j;
        } else if (s_ik >= s_jk) {
            o.pair_a = i;
            o.pair_b = k;
        } else {
            o.pair_a = j;
            o.pair_b = k;
        }
        out.push_back(o);
    }
    return out;
}

std::vector<OddOneOutJudgment> random_judgments(int n, int count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<OddOneOutJudgment> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int t = 0; t < count; ++t) {
        const auto [i, j, k] = random_triple(rng, n);
        OddOneOutJudgment o;
        o.first = i;
        o.second = j;
        o.third = k;
        const auto pick = rng.below(3);
        if (pick == 0) {
            o.pair_a = i;
            o.pair_b = j;
        } else if (pick == 1) {
            o.pair_a = i;
            o.pair_b = k;
        } else {
            o.pair_a = j;
            o.pair_b = k;
        }
        out.push_back(o);
    }
    return out;
}

/// Two tight clusters in the nonnegative quadrant; high within-cluster dots.
Eigen::MatrixXd two_cluster_points(int n, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, 2);
    for (int i = 0; i < n; ++i) {
        const bool first_cluster = i < n / 2;
        x(i, first_cluster ? 0 : 1) = 2.0 + 0.1 * rng.uniform();
        x(i, first_cluster ? 1 : 0) = 0.1 * rng.uniform();
    }
    return x;
}

}  // namespace

TEST_CASE("choice probabilities: symmetry, hand value, normalization") {
    const auto flat = nonneg(Eigen::MatrixXd::Zero(4, 3));
    auto p = spose_choice_probability(flat, 0, 1, 2);
    CHECK(p[0] == doctest::Approx(1.0 / 3).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(1.0 / 3).epsilon(1e-14));
    CHECK(p[2] == doctest::Approx(1.0 / 3).epsilon(1e-14));

    const auto ones = nonneg(Eigen::MatrixXd::Ones(4, 3));
    p = spose_choice_probability(ones, 0, 2, 3);
    CHECK(p[0] == doctest::Approx(1.0 / 3).epsilon(1e-14));

    // s_ij=1, s_ik=0, s_jk=0 gives Pr[(i,j)] = e/(e+2).
    Eigen::MatrixXd m(3, 2);
    m << 1, 0, 1, 0, 0, 0;
    p = spose_choice_probability(nonneg(m), 0, 1, 2);
    CHECK(p[0] == doctest::Approx(0.57611688476582912).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx((1.0 - 0.57611688476582912) / 2).epsilon(1e-12));
    CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("choice probabilities are equivariant under pair relabeling") {
    Rng rng(1);
    Eigen::MatrixXd m(8, 4);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 4; ++j) m(i, j) = rng.uniform();
    const auto emb = nonneg(m);
    for (int rep = 0; rep < 50; ++rep) {
        const auto [i, j, k] = random_triple(rng, 8);
        const auto p = spose_choice_probability(emb, i, j, k);
        // Swapping the roles of i and j permutes pair slots (ij,ik,jk)->(ij,jk,ik).
        const auto q = spose_choice_probability(emb, j, i, k);
        CHECK(q[0] == doctest::Approx(p[0]).epsilon(1e-12));
        CHECK(q[1] == doctest::Approx(p[2]).epsilon(1e-12));
        CHECK(q[2] == doctest::Approx(p[1]).epsilon(1e-12));
        CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("huge similarities do not overflow the softmax") {
    Eigen::MatrixXd m(3, 2);
    m << 800, 0, 800, 0, 0, 800;
    const auto p = spose_choice_probability(nonneg(m), 0, 1, 2);
    CHECK(std::isfinite(p[0]));
    CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("choice probabilities validate their inputs") {
    const auto flat = nonneg(Eigen::MatrixXd::Zero(4, 3));
    CHECK_CATEGORY(spose_choice_probability(flat, 0, 1, 9), "IdOutOfRange");
    CHECK_CATEGORY(spose_choice_probability(flat, 0, 1, 1), "InvalidJudgment");
    EmbeddingMatrix neg;
    neg.values = Eigen::MatrixXd::Constant(4, 3, -1.0);
    neg.nonnegative = true;
    CHECK_CATEGORY(spose_choice_probability(neg, 0, 1, 2), "InvalidEmbedding");
    EmbeddingMatrix unflagged;
    unflagged.values = Eigen::MatrixXd::Zero(4, 3);
    unflagged.nonnegative = false;
    CHECK_CATEGORY(spose_choice_probability(unflagged, 0, 1, 2), "InvalidEmbedding");
}

TEST_CASE("fit keeps every entry nonnegative and is deterministic") {
    const auto judgments = planted_judgments(two_cluster_points(16, 2), 1500, 3);
    SposeConfig sc;
    sc.dimension = 4;
    sc.epochs = 30;
    sc.seed = 4;
    const auto [emb1, rep1] = fit_spose(judgments, 16, sc);
    const auto [emb2, rep2] = fit_spose(judgments, 16, sc);
    CHECK(emb1.nonnegative);
    CHECK(emb1.values.minCoeff() >= 0.0);
    CHECK((emb1.values - emb2.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK(rep1.holdout_loss == rep2.holdout_loss);
}

TEST_CASE("zero epochs returns the projected init") {
    const auto judgments = random_judgments(12, 400, 5);
    SposeConfig sc;
    sc.dimension = 3;
    sc.epochs = 0;
    sc.seed = 6;
    const auto [emb, rep] = fit_spose(judgments, 12, sc);
    CHECK(emb.values.minCoeff() >= 0.0);
    CHECK(emb.values.maxCoeff() > 0.0);
    // Clipping a centered Gaussian init zeroes roughly half the entries.
    const double zero_frac = sparsity(emb, 1e-12);
    CHECK(zero_frac > 0.25);
    CHECK(zero_frac < 0.75);
    CHECK(rep.train_loss_curve.empty());
}

TEST_CASE("an overwhelming penalty empties the embedding") {
    const auto judgments = random_judgments(16, 2000, 7);
    SposeConfig sc;
    sc.lambda = 1000.0;
    sc.seed = 8;
    const auto [emb, rep] = fit_spose(judgments, 16, sc);
    CHECK(sparsity(emb, 1e-3) >= 0.90);
    CHECK(emb.values.minCoeff() >= 0.0);
}

TEST_CASE("two planted clusters are recovered as similarity structure") {
    const Eigen::MatrixXd planted = two_cluster_points(16, 9);
    const auto judgments = planted_judgments(planted, 3000, 10);
    SposeConfig sc;
    sc.dimension = 4;
    sc.lambda = 0.001;
    sc.seed = 11;
    const auto [emb, rep] = fit_spose(judgments, 16, sc);

    double within = 0.0, between = 0.0;
    int n_within = 0, n_between = 0;
    for (int i = 0; i < 16; ++i) {
        for (int j = i + 1; j < 16; ++j) {
            const double s = emb.values.row(i).dot(emb.values.row(j));
            if ((i < 8) == (j < 8)) {
                within += s;
                ++n_within;
            } else {
                between += s;
                ++n_between;
            }
        }
    }
    CHECK(within / n_within > between / n_between);
    CHECK(rep.holdout_accuracy > 1.0 / 3.0);
}

TEST_CASE("fit rejects malformed inputs") {
    const auto judgments = random_judgments(8, 200, 12);
    SposeConfig sc;
    sc.dimension = 8;
    CHECK_CATEGORY(fit_spose(judgments, 8, sc), "InvalidCount");
    sc.dimension = 2;
    CHECK_CATEGORY(fit_spose({}, 8, sc), "InvalidCount");
    sc.lambda = -0.5;
    CHECK_CATEGORY(fit_spose(judgments, 8, sc), "InvalidLambda");
    sc.lambda = 0.01;

    OddOneOutJudgment unsorted{3, 1, 5, 1, 3};
    CHECK_CATEGORY(fit_spose({unsorted, unsorted}, 8, sc), "InvalidJudgment");
    OddOneOutJudgment foreign_pair{1, 3, 5, 1, 4};
    CHECK_CATEGORY(fit_spose({foreign_pair, foreign_pair}, 8, sc), "InvalidJudgment");
    OddOneOutJudgment out_of_range{1, 3, 9, 1, 3};
    CHECK_CATEGORY(fit_spose({out_of_range, out_of_range}, 8, sc), "IdOutOfRange");
}

TEST_CASE("a runaway learning rate raises a divergence error") {
    const auto judgments = random_judgments(12, 600, 13);
    SposeConfig sc;
    sc.dimension = 3;
    sc.learning_rate = 1e12;
    sc.epochs = 50;
    sc.seed = 14;
    CHECK_CATEGORY(fit_spose(judgments, 12, sc), "Divergence");
}

TEST_CASE("lambda tuning selects by held-out log-likelihood") {
    const auto judgments = planted_judgments(two_cluster_points(16, 15), 2000, 16);
    SposeConfig sc;
    sc.dimension = 4;
    sc.epochs = 40;
    sc.seed = 17;

    const auto [single, single_results] = tune_lambda(judgments, 16, {0.05}, sc);
    CHECK(single == 0.05);
    REQUIRE(single_results.size() == 1);
    CHECK(single_results[0].first == 0.05);

    const auto [best, results] = tune_lambda(judgments, 16, {0.001, 1000.0}, sc);
    CHECK(best == 0.001);
    REQUIRE(results.size() == 2);
    // Far beyond the optimum the held-out log-likelihood has dropped.
    CHECK(results[0].second > results[1].second);

    CHECK_CATEGORY(tune_lambda(judgments, 16, {}, sc), "InvalidLambda");
    CHECK_CATEGORY(tune_lambda(judgments, 16, {0.1, -0.1}, sc), "InvalidLambda");
}

TEST_CASE("median sparsity is nondecreasing along an increasing lambda grid") {
    const auto judgments = planted_judgments(two_cluster_points(16, 18), 1500, 19);
    const std::vector<double> grid = {0.001, 0.01, 0.1, 1.0};
    std::vector<double> medians;
    for (double lambda : grid) {
        std::vector<double> values;
        for (std::uint64_t seed : {0ull, 1ull, 2ull}) {
            SposeConfig sc;
            sc.dimension = 10;
            sc.lambda = lambda;
            sc.seed = seed;
            const auto [emb, rep] = fit_spose(judgments, 16, sc);
            values.push_back(sparsity(emb, 1e-3));
        }
        std::sort(values.begin(), values.end());
        medians.push_back(values[1]);
    }
    for (std::size_t i = 1; i < medians.size(); ++i) CHECK(medians[i] >= medians[i - 1]);
}

TEST_CASE("sparsity counts small entries") {
    EmbeddingMatrix zero;
    zero.values = Eigen::MatrixXd::Zero(5, 4);
    CHECK(sparsity(zero, 1e-6) == 1.0);

    EmbeddingMatrix ones;
    ones.values = Eigen::MatrixXd::Ones(5, 4);
    CHECK(sparsity(ones, 0.5) == 0.0);

    EmbeddingMatrix half;
    half.values = Eigen::MatrixXd::Zero(2, 4);
    half.values.row(0).setOnes();
    CHECK(sparsity(half, 0.5) == 0.5);

    CHECK_CATEGORY(sparsity(ones, 0.0), "InvalidCount");
}
