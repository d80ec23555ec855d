#include "tripalign/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "tripalign/csv.hpp"
#include "tripalign/error.hpp"

namespace tripalign {

namespace {

Eigen::MatrixXd centered(const Eigen::MatrixXd& m) {
    return m.rowwise() - m.colwise().mean();
}

/// Zero-pads whichever matrix is narrower so both have max(dx, dy) columns.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> pad_to_common_width(const Eigen::MatrixXd& x,
                                                                const Eigen::MatrixXd& y,
                                                                bool* padded) {
    const Eigen::Index d = std::max(x.cols(), y.cols());
    if (padded) *padded = x.cols() != y.cols();
    auto widen = [d](const Eigen::MatrixXd& m) {
        if (m.cols() == d) return m;
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.rows(), d);
        out.leftCols(m.cols()) = m;
        return out;
    };
    return {widen(x), widen(y)};
}

void check_same_items(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    if (a.n() != b.n())
        fail("SizeMismatch", "embeddings have " + std::to_string(a.n()) + " vs " +
                                 std::to_string(b.n()) + " rows");
    if (!a.names.empty() && !b.names.empty() && a.names != b.names)
        fail("OrderMismatch", "embeddings do not list the same concepts in the same order");
}

/// Average ranks (ties averaged), 1-based.
std::vector<double> rank_transform(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson_plain(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) fail("ConstantInput", "zero variance in rank correlation input");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

std::string AlignmentReport::csv_header() { return "model_id,procrustes_r2,cka,rsa,d,padded"; }

std::string AlignmentReport::to_csv_row() const {
    std::ostringstream out;
    out << csv::quote(model_id) << ',' << csv::format_double(procrustes_r2) << ','
        << csv::format_double(cka) << ',' << csv::format_double(rsa_spearman) << ',' << d << ','
        << (padded ? 1 : 0);
    return out.str();
}

double procrustes_r2(const EmbeddingMatrix& model_emb, const EmbeddingMatrix& reference_emb) {
    check_same_items(model_emb, reference_emb);
    auto [x, y] = pad_to_common_width(model_emb.values, reference_emb.values, nullptr);
    x = centered(x);
    y = centered(y);

    const double y_ss = y.squaredNorm();
    if (y_ss == 0.0) fail("DegenerateReference", "reference embedding has zero variance");
    const double x_ss = x.squaredNorm();
    if (x_ss == 0.0) return 0.0;   // best transform of a point mass is the reference mean

    // argmin_{s, Q orthogonal} |y - s x Q|_F^2: Q from the SVD of x'y, then
    // the optimal scale in closed form.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x.transpose() * y, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double trace_sigma = svd.singularValues().sum();
    const double residual = y_ss - trace_sigma * trace_sigma / x_ss;
    return 1.0 - residual / y_ss;
}

double linear_cka(const EmbeddingMatrix& x_emb, const EmbeddingMatrix& y_emb) {
    check_same_items(x_emb, y_emb);
    const Eigen::MatrixXd x = centered(x_emb.values);
    const Eigen::MatrixXd y = centered(y_emb.values);
    const double cross = (x.transpose() * y).squaredNorm();
    const double xx = (x.transpose() * x).norm();
    const double yy = (y.transpose() * y).norm();
    if (xx == 0.0 || yy == 0.0) fail("ConstantInput", "zero-variance embedding in CKA");
    return cross / (xx * yy);
}

RSM rsm(const EmbeddingMatrix& emb) {
    if (!emb.values.allFinite()) fail("InvalidEmbedding", "embedding has non-finite entries");
    const int n = emb.n();
    RSM out;
    out.metric_tag = "euclidean";
    out.values = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double d = (emb.values.row(i) - emb.values.row(j)).norm();
            out.values(i, j) = d;
            out.values(j, i) = d;
        }
    }
    return out;
}

double rsa_correlation(const EmbeddingMatrix& x, const EmbeddingMatrix& y) {
    check_same_items(x, y);
    if (x.n() < 4) fail("InvalidCount", "RSA needs at least 4 items");
    const RSM rx = rsm(x);
    const RSM ry = rsm(y);
    std::vector<double> ux, uy;
    const int n = x.n();
    ux.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    uy.reserve(ux.capacity());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            ux.push_back(rx.values(i, j));
            uy.push_back(ry.values(i, j));
        }
    }
    return pearson_plain(rank_transform(ux), rank_transform(uy));
}

int select_dimensionality(const EmbeddingMatrix& emb, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) fail("InvalidFraction", "threshold must lie in (0,1]");
    const Eigen::MatrixXd x = centered(emb.values);
    const double total = x.squaredNorm();
    if (total == 0.0) fail("DegenerateReference", "zero-variance matrix has no principal components");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x);
    const auto& sv = svd.singularValues();
    double cum = 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        cum += sv(i) * sv(i);
        if (cum / total >= threshold) return static_cast<int>(i) + 1;
    }
    return static_cast<int>(sv.size());
}

AlignmentReport align(const EmbeddingMatrix& model_emb, const EmbeddingMatrix& reference_emb,
                      const std::string& model_id) {
    AlignmentReport report;
    report.model_id = model_id;
    report.procrustes_r2 = procrustes_r2(model_emb, reference_emb);
    report.cka = linear_cka(model_emb, reference_emb);
    report.rsa_spearman = rsa_correlation(model_emb, reference_emb);
    report.d = std::max(model_emb.d(), reference_emb.d());
    report.padded = model_emb.d() != reference_emb.d();
    return report;
}

}  // namespace tripalign
