#include "tripalign/ordinal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tripalign/error.hpp"
#include "tripalign/rng.hpp"

namespace tripalign {

double link_probability(double delta) {
    if (delta >= 0.0) return 1.0 / (1.0 + std::exp(-delta));
    const double e = std::exp(delta);
    return e / (1.0 + e);
}

namespace {

/// -log sigma(delta), stable for large |delta|.
double nll(double delta) {
    if (delta > 0.0) return std::log1p(std::exp(-delta));
    return -delta + std::log1p(std::exp(delta));
}

void check_ids(const std::vector<OrdinalConstraint>& constraints, int n_items) {
    for (const auto& c : constraints) {
        if (c.i < 0 || c.i >= n_items || c.j < 0 || c.j >= n_items || c.k < 0 || c.k >= n_items)
            fail("IdOutOfRange", "constraint references an item outside [0, " +
                                     std::to_string(n_items) + ")");
        if (c.i == c.j || c.i == c.k || c.j == c.k)
            fail("InvalidConstraint", "constraint items must be distinct");
    }
}

}  // namespace

std::pair<std::vector<OrdinalConstraint>, std::vector<OrdinalConstraint>>
holdout_split(const std::vector<OrdinalConstraint>& constraints, double fraction, std::uint64_t seed) {
    const std::size_t n = constraints.size();
    if (n < 2) fail("InvalidCount", "need at least 2 constraints to split");
    if (!(fraction > 0.0 && fraction < 1.0))
        fail("InvalidFraction", "holdout fraction must lie in (0,1)");
    const auto heldout_n =
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (heldout_n == 0 || heldout_n >= n)
        fail("DegenerateSplit", "holdout fraction leaves an empty train or holdout set");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = rng.below(i + 1);
        std::swap(order[i], order[j]);
    }
    std::pair<std::vector<OrdinalConstraint>, std::vector<OrdinalConstraint>> split;
    split.second.reserve(heldout_n);
    split.first.reserve(n - heldout_n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i < heldout_n) split.second.push_back(constraints[order[i]]);
        else split.first.push_back(constraints[order[i]]);
    }
    return split;
}

double triplet_loss(const Eigen::MatrixXd& points, const std::vector<OrdinalConstraint>& constraints) {
    if (constraints.empty()) fail("InvalidCount", "empty constraint list");
    double total = 0.0;
    for (const auto& c : constraints) {
        const double dij = (points.row(c.i) - points.row(c.j)).squaredNorm();
        const double dik = (points.row(c.i) - points.row(c.k)).squaredNorm();
        total += nll(dik - dij);
    }
    return total / static_cast<double>(constraints.size());
}

std::pair<EmbeddingMatrix, FitReport> fit_ordinal(const std::vector<OrdinalConstraint>& constraints,
                                                  int n_items, const FitConfig& config) {
    if (config.dimension < 1) fail("InvalidCount", "dimension must be >= 1");
    if (config.dimension >= n_items)
        fail("InvalidCount", "dimension " + std::to_string(config.dimension) +
                                 " must be < item count " + std::to_string(n_items));
    if (config.batch_size < 1) fail("InvalidCount", "batch size must be >= 1");
    if (constraints.empty()) fail("InvalidCount", "no constraints to fit");
    check_ids(constraints, n_items);

    auto [train, heldout] = holdout_split(constraints, config.holdout_fraction, config.seed);

    Rng rng(config.seed + 0x9e3779b97f4a7c15ull);
    const int d = config.dimension;
    Eigen::MatrixXd x(n_items, d);
    for (int i = 0; i < n_items; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = config.init_scale * rng.normal();

    // Items that appear in no constraint stay where they start; pin them at
    // the origin and report them.
    std::vector<bool> seen(static_cast<std::size_t>(n_items), false);
    for (const auto& c : constraints) {
        seen[static_cast<std::size_t>(c.i)] = true;
        seen[static_cast<std::size_t>(c.j)] = true;
        seen[static_cast<std::size_t>(c.k)] = true;
    }
    FitReport report;
    for (int i = 0; i < n_items; ++i) {
        if (!seen[static_cast<std::size_t>(i)]) {
            report.unseen_items.push_back(i);
            x.row(i).setZero();
        }
    }

    Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(n_items, d);
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n_items, d);
    const double momentum = 0.9;
    const std::size_t train_n = train.size();
    std::vector<std::size_t> order(train_n);
    std::iota(order.begin(), order.end(), 0);

    report.train_loss_curve.reserve(static_cast<std::size_t>(config.epochs));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = train_n - 1; i > 0; --i) {
            const std::size_t j = rng.below(i + 1);
            std::swap(order[i], order[j]);
        }
        for (std::size_t start = 0; start < train_n; start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(train_n, start + static_cast<std::size_t>(config.batch_size));
            grad.setZero();
            for (std::size_t t = start; t < end; ++t) {
                const auto& c = train[order[t]];
                const auto xi = x.row(c.i);
                const auto xj = x.row(c.j);
                const auto xk = x.row(c.k);
                const double delta = (xi - xk).squaredNorm() - (xi - xj).squaredNorm();
                const double w = link_probability(delta) - 1.0;   // d(-log sigma)/d delta
                grad.row(c.i) += w * 2.0 * (xj - xk);
                grad.row(c.j) += w * 2.0 * (xi - xj);
                grad.row(c.k) += w * -2.0 * (xi - xk);
            }
            grad /= static_cast<double>(end - start);
            velocity = momentum * velocity - config.learning_rate * grad;
            x += velocity;
        }
        const double epoch_loss = triplet_loss(x, train);
        if (!std::isfinite(epoch_loss))
            fail("Divergence", "training loss is non-finite at epoch " + std::to_string(epoch) +
                                   "; lower the learning rate");
        report.train_loss_curve.push_back(epoch_loss);
    }

    // Center on the observed rows; unseen items must stay at the origin.
    if (report.unseen_items.empty()) {
        x.rowwise() -= x.colwise().mean();
    } else {
        Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(d);
        int observed = 0;
        for (int i = 0; i < n_items; ++i) {
            if (seen[static_cast<std::size_t>(i)]) {
                mean += x.row(i);
                ++observed;
            }
        }
        mean /= static_cast<double>(observed);
        for (int i = 0; i < n_items; ++i)
            if (seen[static_cast<std::size_t>(i)]) x.row(i) -= mean;
    }

    EmbeddingMatrix emb;
    emb.values = std::move(x);
    emb.nonnegative = false;
    report.holdout_loss = triplet_loss(emb.values, heldout);
    report.holdout_accuracy = triplet_accuracy(emb, heldout);
    return {std::move(emb), std::move(report)};
}

double triplet_accuracy(const EmbeddingMatrix& emb, const std::vector<OrdinalConstraint>& constraints) {
    if (constraints.empty()) fail("InvalidCount", "empty constraint list");
    double correct = 0.0;
    for (const auto& c : constraints) {
        const double dij = (emb.values.row(c.i) - emb.values.row(c.j)).squaredNorm();
        const double dik = (emb.values.row(c.i) - emb.values.row(c.k)).squaredNorm();
        if (dij < dik) correct += 1.0;
        else if (dij == dik) correct += 0.5;
    }
    return correct / static_cast<double>(constraints.size());
}

}  // namespace tripalign
