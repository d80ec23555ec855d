#include "tripalign/spose.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tripalign/error.hpp"
#include "tripalign/rng.hpp"

namespace tripalign {

namespace {

struct TripleSims {
    double s_ij, s_ik, s_jk;
};

TripleSims sims(const Eigen::MatrixXd& x, int i, int j, int k) {
    return {x.row(i).dot(x.row(j)), x.row(i).dot(x.row(k)), x.row(j).dot(x.row(k))};
}

std::array<double, 3> softmax3(const TripleSims& s) {
    const double m = std::max({s.s_ij, s.s_ik, s.s_jk});
    const double e0 = std::exp(s.s_ij - m);
    const double e1 = std::exp(s.s_ik - m);
    const double e2 = std::exp(s.s_jk - m);
    const double z = e0 + e1 + e2;
    return {e0 / z, e1 / z, e2 / z};
}

/// Index of the judged pair among {(i,j),(i,k),(j,k)} of the sorted triple.
int chosen_pair_index(const OddOneOutJudgment& j) {
    const int i = j.first, m = j.second, k = j.third;
    if (j.pair_a == i && j.pair_b == m) return 0;
    if (j.pair_a == i && j.pair_b == k) return 1;
    if (j.pair_a == m && j.pair_b == k) return 2;
    fail("InvalidJudgment", "chosen pair is not a subset of the triple");
}

void validate(const std::vector<OddOneOutJudgment>& judgments, int n_items) {
    for (const auto& j : judgments) {
        if (!(j.first < j.second && j.second < j.third))
            fail("InvalidJudgment", "triple must be sorted and distinct");
        if (j.first < 0 || j.third >= n_items)
            fail("IdOutOfRange", "judgment references an item outside [0, " +
                                     std::to_string(n_items) + ")");
        chosen_pair_index(j);
    }
}

double mean_log_likelihood(const Eigen::MatrixXd& x, const std::vector<OddOneOutJudgment>& judgments) {
    double total = 0.0;
    for (const auto& j : judgments) {
        const auto p = softmax3(sims(x, j.first, j.second, j.third));
        total += std::log(std::max(p[static_cast<std::size_t>(chosen_pair_index(j))], 1e-300));
    }
    return total / static_cast<double>(judgments.size());
}

double choice_accuracy(const Eigen::MatrixXd& x, const std::vector<OddOneOutJudgment>& judgments) {
    double correct = 0.0;
    for (const auto& j : judgments) {
        const auto p = softmax3(sims(x, j.first, j.second, j.third));
        const auto best = std::distance(p.begin(), std::max_element(p.begin(), p.end()));
        if (best == chosen_pair_index(j)) correct += 1.0;
    }
    return correct / static_cast<double>(judgments.size());
}

}  // namespace

std::array<double, 3> spose_choice_probability(const EmbeddingMatrix& emb, int i, int j, int k) {
    const int n = emb.n();
    if (i < 0 || i >= n || j < 0 || j >= n || k < 0 || k >= n)
        fail("IdOutOfRange", "triple indices must lie in [0, " + std::to_string(n) + ")");
    if (i == j || i == k || j == k) fail("InvalidJudgment", "triple items must be distinct");
    if (!emb.nonnegative || emb.values.minCoeff() < 0.0)
        fail("InvalidEmbedding", "choice probabilities require a nonnegative embedding");
    return softmax3(sims(emb.values, i, j, k));
}

std::pair<EmbeddingMatrix, FitReport> fit_spose(const std::vector<OddOneOutJudgment>& judgments,
                                                int n_items, const SposeConfig& config) {
    if (judgments.empty()) fail("InvalidCount", "no judgments to fit");
    if (config.lambda < 0.0) fail("InvalidLambda", "lambda must be >= 0");
    if (config.dimension < 1) fail("InvalidCount", "dimension must be >= 1");
    if (config.dimension >= n_items)
        fail("InvalidCount", "dimension " + std::to_string(config.dimension) +
                                 " must be < item count " + std::to_string(n_items));
    validate(judgments, n_items);

    // Shared index split so every lambda on a tuning grid sees the same data.
    std::vector<std::size_t> order(judgments.size());
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng(config.seed);
    for (std::size_t i = order.size() - 1; i > 0; --i) {
        const std::size_t j = split_rng.below(i + 1);
        std::swap(order[i], order[j]);
    }
    const auto heldout_n = static_cast<std::size_t>(
        std::llround(config.holdout_fraction * static_cast<double>(judgments.size())));
    if (heldout_n == 0 || heldout_n >= judgments.size())
        fail("DegenerateSplit", "holdout fraction leaves an empty train or holdout set");
    std::vector<OddOneOutJudgment> heldout, train;
    heldout.reserve(heldout_n);
    train.reserve(judgments.size() - heldout_n);
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i < heldout_n) heldout.push_back(judgments[order[i]]);
        else train.push_back(judgments[order[i]]);
    }

    Rng rng(config.seed + 0x9e3779b97f4a7c15ull);
    const int d = config.dimension;
    Eigen::MatrixXd x(n_items, d);
    for (int i = 0; i < n_items; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = config.init_scale * rng.normal();
    x = x.cwiseMax(0.0);   // projected init

    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n_items, d);
    const std::size_t train_n = train.size();
    std::vector<std::size_t> batch_order(train_n);
    std::iota(batch_order.begin(), batch_order.end(), 0);

    FitReport report;
    report.train_loss_curve.reserve(static_cast<std::size_t>(config.epochs));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = train_n - 1; i > 0; --i) {
            const std::size_t j = rng.below(i + 1);
            std::swap(batch_order[i], batch_order[j]);
        }
        for (std::size_t start = 0; start < train_n; start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(train_n, start + static_cast<std::size_t>(config.batch_size));
            grad.setZero();
            for (std::size_t t = start; t < end; ++t) {
                const auto& jd = train[batch_order[t]];
                const int i = jd.first, m = jd.second, k = jd.third;
                const auto p = softmax3(sims(x, i, m, k));
                const int chosen = chosen_pair_index(jd);
                // d log P(chosen) / d s_pair = 1{pair == chosen} - P(pair)
                const double w_im = (chosen == 0 ? 1.0 : 0.0) - p[0];
                const double w_ik = (chosen == 1 ? 1.0 : 0.0) - p[1];
                const double w_mk = (chosen == 2 ? 1.0 : 0.0) - p[2];
                grad.row(i) += w_im * x.row(m) + w_ik * x.row(k);
                grad.row(m) += w_im * x.row(i) + w_mk * x.row(k);
                grad.row(k) += w_ik * x.row(i) + w_mk * x.row(m);
            }
            grad /= static_cast<double>(end - start);
            // L1 subgradient: -lambda on positive entries, 0 at 0.
            for (int r = 0; r < n_items; ++r)
                for (int c = 0; c < d; ++c)
                    if (x(r, c) > 0.0) grad(r, c) -= config.lambda;
            x += config.learning_rate * grad;
            x = x.cwiseMax(0.0);
        }
        const double epoch_loss = -mean_log_likelihood(x, train);
        if (!std::isfinite(epoch_loss))
            fail("Divergence", "training loss is non-finite at epoch " + std::to_string(epoch) +
                                   "; lower the learning rate");
        report.train_loss_curve.push_back(epoch_loss);
    }

    EmbeddingMatrix emb;
    emb.values = std::move(x);
    emb.nonnegative = true;
    report.holdout_loss = -mean_log_likelihood(emb.values, heldout);
    report.holdout_accuracy = choice_accuracy(emb.values, heldout);
    return {std::move(emb), std::move(report)};
}

std::pair<double, std::vector<std::pair<double, double>>> tune_lambda(
    const std::vector<OddOneOutJudgment>& judgments, int n_items,
    const std::vector<double>& grid, const SposeConfig& config) {
    if (grid.empty()) fail("InvalidLambda", "lambda grid is empty");
    for (double l : grid)
        if (l < 0.0) fail("InvalidLambda", "lambda grid values must be >= 0");

    std::vector<std::pair<double, double>> results;
    results.reserve(grid.size());
    double best_lambda = grid.front();
    double best_ll = -std::numeric_limits<double>::infinity();
    for (double l : grid) {
        SposeConfig c = config;
        c.lambda = l;
        auto [emb, report] = fit_spose(judgments, n_items, c);
        const double holdout_ll = -report.holdout_loss;
        results.emplace_back(l, holdout_ll);
        if (holdout_ll > best_ll || (holdout_ll == best_ll && l > best_lambda)) {
            best_ll = holdout_ll;
            best_lambda = l;
        }
    }
    return {best_lambda, results};
}

double sparsity(const EmbeddingMatrix& emb, double eps) {
    if (eps <= 0.0) fail("InvalidCount", "eps must be > 0");
    const auto total = static_cast<double>(emb.values.size());
    if (total == 0.0) fail("InvalidCount", "empty embedding");
    const double below = (emb.values.array().abs() < eps).count();
    return below / total;
}

}  // namespace tripalign
