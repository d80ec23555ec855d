#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tripalign/embedding.hpp"
#include "tripalign/ordinal.hpp"
#include "tripalign/triplets.hpp"

namespace tripalign {

enum class NoiseKind { Deterministic, Logistic };

struct NoiseModel {
    NoiseKind kind = NoiseKind::Deterministic;
    double scale = 1.0;   // logistic temperature; the deterministic kind ignores it
};

/// Planted configuration: i.i.d. standard Gaussian entries, column-centered.
/// Deterministic given seed.
EmbeddingMatrix generate_ground_truth(int n_items, int dimension, std::uint64_t seed);

/// item0..item{n-1}, for sampling trials against a planted embedding.
ConceptSet synthetic_concepts(int n_items);

/// Simulated responses to anchored trials. The deterministic kind picks the
/// closer option (exact ties resolved by a fair coin); the logistic kind
/// picks option A with probability sigma((D_ib - D_ia) / scale), D being
/// squared Euclidean distance to the anchor.
std::vector<Judgment> simulate_judgments(const EmbeddingMatrix& truth,
                                         const std::vector<TripletTrial>& trials,
                                         const NoiseModel& noise, std::uint64_t seed);

struct RecoveryPoint {
    long long budget = 0;
    double holdout_error = 0.0;   // 1 - held-out triplet accuracy, mean over seeds
    double procrustes_r2 = 0.0;   // fitted vs planted, mean over seeds
};

struct RecoveryCurve {
    int n_items = 0;
    int dimension = 0;
    NoiseModel noise;
    std::vector<RecoveryPoint> points;

    std::string to_csv() const;   // budget,holdout_error,r2_truth
};

/// For each budget: sample trials, simulate judgments, fit, and average the
/// held-out error and the Procrustes R^2 to the planted configuration over
/// the seeds. Budgets must be strictly increasing. A zero budget records
/// chance error 0.5 (nothing to fit; every item stays at the origin).
RecoveryCurve recovery_experiment(int n_items, int dimension, const std::vector<long long>& budgets,
                                  const NoiseModel& noise, const std::vector<std::uint64_t>& seeds,
                                  const FitConfig& fit = FitConfig{});

/// Least-squares slope of log(holdout_error) vs log(budget) over the
/// decaying region: points whose error sits more than 0.02 above the curve
/// minimum. Fewer than 4 such points is an error.
double scaling_slope(const RecoveryCurve& curve);

}  // namespace tripalign
