#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tripalign/embedding.hpp"
#include "tripalign/triplets.hpp"

namespace tripalign {

struct FitConfig {
    int dimension = 30;
    double learning_rate = 0.05;
    int epochs = 200;
    int batch_size = 256;
    double holdout_fraction = 0.2;
    std::uint64_t seed = 0;
    double init_scale = 0.1;
};

struct FitReport {
    std::vector<double> train_loss_curve;   // mean loss per epoch
    double holdout_loss = 0.0;
    double holdout_accuracy = 0.0;
    std::vector<int> unseen_items;          // left at the origin
};

/// Logistic link: the probability of answering "i closer to j" given the
/// distance gap delta = D_ik - D_ij. f(0) = 1/2, strictly increasing.
double link_probability(double delta);

/// Disjoint (train, heldout) partition with |heldout| = round(fraction * N).
/// Deterministic given seed.
std::pair<std::vector<OrdinalConstraint>, std::vector<OrdinalConstraint>>
holdout_split(const std::vector<OrdinalConstraint>& constraints, double fraction, std::uint64_t seed);

/// Fits n_items x d coordinates by minibatch SGD (momentum 0.9) on the
/// triplet negative log-likelihood
///     sum -log sigma(|x_i - x_k|^2 - |x_i - x_j|^2),
/// holding out a validation fraction. The returned matrix is column-centered.
std::pair<EmbeddingMatrix, FitReport> fit_ordinal(const std::vector<OrdinalConstraint>& constraints,
                                                  int n_items, const FitConfig& config);

/// Fraction of constraints the embedding ranks correctly; exact ties 0.5.
double triplet_accuracy(const EmbeddingMatrix& emb, const std::vector<OrdinalConstraint>& constraints);

/// Mean -log sigma over a constraint list (the held-out monitoring loss).
double triplet_loss(const Eigen::MatrixXd& points, const std::vector<OrdinalConstraint>& constraints);

}  // namespace tripalign
