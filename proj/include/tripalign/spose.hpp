#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "tripalign/embedding.hpp"
#include "tripalign/ordinal.hpp"
#include "tripalign/triplets.hpp"

namespace tripalign {

struct SposeConfig {
    int dimension = 10;
    double lambda = 0.01;
    double learning_rate = 0.05;
    int epochs = 200;
    int batch_size = 256;
    std::uint64_t seed = 0;
    double holdout_fraction = 0.2;
    double init_scale = 0.1;
};

/// Choice probabilities over the pairs (i,j), (i,k), (j,k) of a triple:
/// a three-way softmax over the dot-product similarities. Max-subtraction
/// guards overflow without changing the result.
std::array<double, 3> spose_choice_probability(const EmbeddingMatrix& emb, int i, int j, int k);

/// MAP fit of a sparse nonnegative embedding from odd-one-out judgments:
/// maximize mean log-likelihood - lambda * |X|_1 subject to X >= 0 by
/// projected minibatch gradient ascent (negatives clipped after each step).
/// The L1 weight is taken relative to the mean per-judgment log-likelihood.
std::pair<EmbeddingMatrix, FitReport> fit_spose(const std::vector<OddOneOutJudgment>& judgments,
                                                int n_items, const SposeConfig& config);

/// Fits once per grid value on a shared split; returns the lambda with the
/// best held-out log-likelihood (ties toward larger lambda) and the per-
/// lambda held-out values.
std::pair<double, std::vector<std::pair<double, double>>> tune_lambda(
    const std::vector<OddOneOutJudgment>& judgments, int n_items,
    const std::vector<double>& grid, const SposeConfig& config);

/// Fraction of entries with |value| < eps.
double sparsity(const EmbeddingMatrix& emb, double eps);

}  // namespace tripalign
