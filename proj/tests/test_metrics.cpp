#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "test_util.hpp"
#include "tripalign/metrics.hpp"
#include "tripalign/rng.hpp"

using namespace tripalign;

namespace {

EmbeddingMatrix wrap(Eigen::MatrixXd m) {
    EmbeddingMatrix emb;
    emb.values = std::move(m);
    return emb;
}

Eigen::MatrixXd random_points(int n, int d, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
    return x;
}

Eigen::MatrixXd random_orthogonal(int d, std::uint64_t seed) {
    const Eigen::MatrixXd g = random_points(d, d, seed);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    return qr.householderQ();
}

/// Best R^2 over a dense grid of planar rotations and reflections, with the
/// optimal scale in closed form per candidate. Independent of the SVD path.
double procrustes_r2_grid_2d(const Eigen::MatrixXd& model, const Eigen::MatrixXd& reference) {
    const Eigen::MatrixXd x = model.rowwise() - model.colwise().mean();
    const Eigen::MatrixXd y = reference.rowwise() - reference.colwise().mean();
    const double x_ss = x.squaredNorm();
    const double y_ss = y.squaredNorm();
    double best = -1e300;
    for (int reflect = 0; reflect < 2; ++reflect) {
        for (int step = 0; step < 2000000; ++step) {
            const double theta = 2.0 * M_PI * step / 2000000.0;
            Eigen::Matrix2d q;
            q << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
            if (reflect) q.col(1) = -q.col(1);
            const double cross = (x * q).cwiseProduct(y).sum();
            // min over real s of |y - s xQ|^2 = y_ss - cross^2/x_ss.
            const double resid = y_ss - cross * cross / x_ss;
            best = std::max(best, 1.0 - resid / y_ss);
        }
    }
    return best;
}

}  // namespace

TEST_CASE("procrustes r2: self and transform-orbit alignment score 1") {
    const auto x = wrap(random_points(20, 4, 1));
    CHECK(procrustes_r2(x, x) == doctest::Approx(1.0).epsilon(1e-9));

    const Eigen::MatrixXd q = random_orthogonal(4, 2);
    Eigen::MatrixXd moved = 2.0 * x.values * q;
    moved.rowwise() += Eigen::RowVector4d(1.0, -3.0, 0.25, 10.0);
    CHECK(procrustes_r2(x, wrap(moved)) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(procrustes_r2(wrap(moved), x) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("procrustes r2 matches an independent fixed-case oracle") {
    // Frozen 6x2 Gaussian draws; the expected value comes from an external
    // SVD-free direct computation of the same least-squares problem.
    Eigen::MatrixXd x(6, 2), y(6, 2);
    x << 0.30471708, -1.03998411,
         0.7504512, 0.94056472,
         -1.95103519, -1.30217951,
         0.1278404, -0.31624259,
         -0.01680116, -0.85304393,
         0.87939797, 0.77779194;
    y << 0.0660307, 1.12724121,
         0.46750934, -0.85929246,
         0.36875078, -0.9588826,
         0.8784503, -0.04992591,
         -0.18486236, -0.68092954,
         1.22254134, -0.15452948;
    CHECK(procrustes_r2(wrap(x), wrap(y)) == doctest::Approx(0.2698432161084686).epsilon(1e-12));
}

TEST_CASE("procrustes r2 agrees with a dense rotation-grid optimizer") {
    for (std::uint64_t seed : {3ull, 4ull, 5ull}) {
        const Eigen::MatrixXd x = random_points(12, 2, seed);
        const Eigen::MatrixXd y = random_points(12, 2, seed + 50);
        const double via_svd = procrustes_r2(wrap(x), wrap(y));
        const double via_grid = procrustes_r2_grid_2d(x, y);
        CHECK(via_svd == doctest::Approx(via_grid).epsilon(1e-6));
        CHECK(via_svd >= via_grid - 1e-9);   // SVD is the true optimum
        CHECK(via_svd <= 1.0);
    }
}

TEST_CASE("independent gaussians score near d/(n-1)") {
    const int n = 128, d = 30;
    double mean = 0.0;
    const int reps = 8;
    for (int rep = 0; rep < reps; ++rep) {
        const double r2 = procrustes_r2(wrap(random_points(n, d, 100 + rep)),
                                        wrap(random_points(n, d, 200 + rep)));
        CHECK(r2 > 0.0);
        CHECK(r2 < 0.6);
        mean += r2;
    }
    mean /= reps;
    CHECK(mean == doctest::Approx(static_cast<double>(d) / (n - 1)).epsilon(0.25));
}

TEST_CASE("procrustes r2 is invariant to joint rotation and solo similarity maps") {
    const Eigen::MatrixXd x = random_points(15, 3, 7);
    const Eigen::MatrixXd y = random_points(15, 3, 8);
    const double base = procrustes_r2(wrap(x), wrap(y));

    const Eigen::MatrixXd q = random_orthogonal(3, 9);
    CHECK(procrustes_r2(wrap(x * q), wrap(y * q)) == doctest::Approx(base).epsilon(1e-6));

    const Eigen::MatrixXd q2 = random_orthogonal(3, 10);
    Eigen::MatrixXd x_sim = 0.3 * x * q2;
    x_sim.rowwise() += Eigen::RowVector3d(5.0, 5.0, -2.0);
    CHECK(procrustes_r2(wrap(x_sim), wrap(y)) == doctest::Approx(base).epsilon(1e-6));
}

TEST_CASE("dimension mismatches are zero-padded and flagged") {
    const Eigen::MatrixXd y = random_points(10, 5, 11);
    const Eigen::MatrixXd x = y.leftCols(3);
    const double r2 = procrustes_r2(wrap(x), wrap(y));
    CHECK(r2 > 0.0);
    CHECK(r2 < 1.0);
    const AlignmentReport report = align(wrap(x), wrap(y), "m");
    CHECK(report.padded);
    CHECK(report.d == 5);
    const AlignmentReport same = align(wrap(y), wrap(y), "m");
    CHECK(!same.padded);
}

TEST_CASE("procrustes r2 degenerate and mismatch errors") {
    const auto x = wrap(random_points(8, 2, 12));
    CHECK_CATEGORY(procrustes_r2(x, wrap(Eigen::MatrixXd::Zero(8, 2))), "DegenerateReference");
    CHECK(procrustes_r2(wrap(Eigen::MatrixXd::Zero(8, 2)), x) == 0.0);
    CHECK_CATEGORY(procrustes_r2(x, wrap(random_points(9, 2, 13))), "SizeMismatch");

    EmbeddingMatrix named_a = x, named_b = x;
    named_a.names = {"a", "b", "c", "d", "e", "f", "g", "h"};
    named_b.names = {"a", "b", "c", "d", "e", "f", "h", "g"};
    CHECK_CATEGORY(procrustes_r2(named_a, named_b), "OrderMismatch");
}

TEST_CASE("linear cka: invariances and the hand-evaluated case") {
    const auto x = wrap(random_points(20, 4, 14));
    CHECK(linear_cka(x, x) == doctest::Approx(1.0).epsilon(1e-12));

    const Eigen::MatrixXd q = random_orthogonal(4, 15);
    CHECK(linear_cka(wrap(x.values * q), x) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(linear_cka(wrap(3.0 * x.values), x) == doctest::Approx(1.0).epsilon(1e-9));

    Eigen::MatrixXd a(3, 1), b(3, 1);
    a << 0, 1, 2;
    b << 0, 1, 4;
    CHECK(linear_cka(wrap(a), wrap(b)) == doctest::Approx(12.0 / 13.0).epsilon(1e-14));

    const auto y = wrap(random_points(20, 6, 16));
    CHECK(linear_cka(x, y) == doctest::Approx(linear_cka(y, x)).epsilon(1e-12));
    const double v = linear_cka(x, y);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);

    CHECK_CATEGORY(linear_cka(x, wrap(Eigen::MatrixXd::Zero(20, 4))), "ConstantInput");
}

TEST_CASE("rsm holds pairwise euclidean distances with a zero diagonal") {
    const auto flat = wrap(Eigen::MatrixXd::Ones(5, 3));
    CHECK(rsm(flat).values.cwiseAbs().maxCoeff() == 0.0);

    Eigen::MatrixXd two(2, 2);
    two << 0, 0, 3, 4;
    const RSM d = rsm(wrap(two));
    CHECK(d.values(0, 1) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(d.values(1, 0) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(d.values(0, 0) == 0.0);
    CHECK(d.metric_tag == "euclidean");

    Eigen::MatrixXd square(4, 2);
    square << 0, 0, 1, 0, 1, 1, 0, 1;
    const RSM s = rsm(wrap(square));
    std::vector<double> upper;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) upper.push_back(s.values(i, j));
    std::sort(upper.begin(), upper.end());
    const double rt2 = std::sqrt(2.0);
    CHECK(upper == std::vector<double>{1.0, 1.0, 1.0, 1.0, rt2, rt2});
    // Symmetry within 1e-12 and exact zero diagonal.
    CHECK((s.values - s.values.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    for (int i = 0; i < 4; ++i) CHECK(s.values(i, i) == 0.0);
}

TEST_CASE("rsa: rank correlation of distance structure") {
    const auto x = wrap(random_points(10, 3, 17));
    // Rigid motion preserves every distance.
    const Eigen::MatrixXd q = random_orthogonal(3, 18);
    Eigen::MatrixXd moved = x.values * q;
    moved.rowwise() += Eigen::RowVector3d(4.0, 4.0, 4.0);
    CHECK(rsa_correlation(x, wrap(moved)) == doctest::Approx(1.0).epsilon(1e-12));
    // Any strictly monotone distance transform (scaling by 7) keeps ranks.
    CHECK(rsa_correlation(x, wrap(7.0 * x.values)) == doctest::Approx(1.0).epsilon(1e-12));

    // Hand case: two 4-point configurations whose 6 distances have ranks
    // (1,3,4,2,5,6) vs (2,3,4,1,5,6); Spearman = 1 - 6*2/(6*35) = 33/35.
    Eigen::MatrixXd a(4, 2), b(4, 2);
    a << 0, 0, 1, 0, 3, 0, 0, 6;
    b << 0, 0, 2, 0, 3, 0, 0, 9;
    CHECK(rsa_correlation(wrap(a), wrap(b)) == doctest::Approx(33.0 / 35.0).epsilon(1e-14));

    CHECK_CATEGORY(rsa_correlation(wrap(Eigen::MatrixXd::Ones(10, 3)), x), "ConstantInput");
    CHECK_CATEGORY(rsa_correlation(wrap(random_points(3, 2, 19)), wrap(random_points(3, 2, 20))),
                   "InvalidCount");
}

TEST_CASE("dimensionality selection by cumulative explained variance") {
    // One dominant direction.
    Eigen::MatrixXd dominant = Eigen::MatrixXd::Zero(10, 3);
    for (int i = 0; i < 10; ++i) dominant(i, 0) = i - 4.5;
    dominant.col(1) = 1e-9 * dominant.col(0);
    CHECK(select_dimensionality(wrap(dominant), 0.95) == 1);

    // Exactly 3 equal nonzero singular values force d = 3 at 95%.
    // Rows of a 4x3 orthogonal-contrast design: the centered matrix has
    // three identical singular values.
    Eigen::MatrixXd equal(4, 3);
    equal << 1, 1, 1,
             1, -1, -1,
             -1, 1, -1,
             -1, -1, 1;
    CHECK(select_dimensionality(wrap(equal), 0.95) == 3);
    CHECK(select_dimensionality(wrap(equal), 0.66) == 2);
    CHECK(select_dimensionality(wrap(equal), 0.34) == 2);
    CHECK(select_dimensionality(wrap(equal), 0.33) == 1);

    CHECK_CATEGORY(select_dimensionality(wrap(Eigen::MatrixXd::Zero(5, 3)), 0.95),
                   "DegenerateReference");
    CHECK_CATEGORY(select_dimensionality(wrap(equal), 0.0), "InvalidFraction");
    CHECK_CATEGORY(select_dimensionality(wrap(equal), 1.5), "InvalidFraction");
}

TEST_CASE("align bundles the three metrics and the csv contract") {
    const auto x = wrap(random_points(16, 3, 21));
    const auto y = wrap(random_points(16, 3, 22));
    const AlignmentReport report = align(x, y, "demo");
    CHECK(report.model_id == "demo");
    CHECK(report.procrustes_r2 == doctest::Approx(procrustes_r2(x, y)));
    CHECK(report.cka == doctest::Approx(linear_cka(x, y)));
    CHECK(report.rsa_spearman == doctest::Approx(rsa_correlation(x, y)));
    CHECK(report.d == 3);
    CHECK(!report.padded);
    CHECK(AlignmentReport::csv_header() == "model_id,procrustes_r2,cka,rsa,d,padded");
    const std::string row = AlignmentReport{"m", 0.5, 0.25, 0.1, 30, true}.to_csv_row();
    CHECK(row.substr(0, 2) == "m,");
    CHECK(row.substr(row.size() - 5) == ",30,1");
}
