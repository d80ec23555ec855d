#include "tripalign/synth.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "tripalign/csv.hpp"
#include "tripalign/error.hpp"
#include "tripalign/metrics.hpp"
#include "tripalign/rng.hpp"

namespace tripalign {

EmbeddingMatrix generate_ground_truth(int n_items, int dimension, std::uint64_t seed) {
    if (dimension < 1) fail("InvalidCount", "ground truth needs dimension >= 1");
    if (n_items <= dimension) fail("InvalidCount", "ground truth needs more items than dimensions");
    Rng rng(seed);
    EmbeddingMatrix emb;
    emb.values.resize(n_items, dimension);
    for (int i = 0; i < n_items; ++i) {
        for (int c = 0; c < dimension; ++c) {
            emb.values(i, c) = rng.normal();
        }
    }
    emb.values.rowwise() -= emb.values.colwise().mean();
    emb.names = synthetic_concepts(n_items).names();
    return emb;
}

ConceptSet synthetic_concepts(int n_items) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(n_items));
    char buf[32];
    for (int i = 0; i < n_items; ++i) {
        std::snprintf(buf, sizeof(buf), "item%d", i);
        names.emplace_back(buf);
    }
    return ConceptSet(std::move(names), "synthetic");
}

std::vector<Judgment> simulate_judgments(const EmbeddingMatrix& truth,
                                         const std::vector<TripletTrial>& trials,
                                         const NoiseModel& noise, std::uint64_t seed) {
    const int n = truth.n();
    if (noise.kind == NoiseKind::Logistic && !(noise.scale > 0.0)) {
        fail("InvalidScale", "logistic noise needs scale > 0");
    }
    Rng rng(seed);
    std::vector<Judgment> out;
    out.reserve(trials.size());
    for (const auto& trial : trials) {
        if (trial.anchor < 0 || trial.anchor >= n || trial.option_a < 0 || trial.option_a >= n ||
            trial.option_b < 0 || trial.option_b >= n) {
            fail("MissingConcept", "trial references an item outside the embedding");
        }
        const double da = (truth.values.row(trial.anchor) - truth.values.row(trial.option_a)).squaredNorm();
        const double db = (truth.values.row(trial.anchor) - truth.values.row(trial.option_b)).squaredNorm();
        Choice choice;
        if (noise.kind == NoiseKind::Deterministic) {
            if (da < db) {
                choice = Choice::OptionA;
            } else if (db < da) {
                choice = Choice::OptionB;
            } else {
                choice = rng.coin() ? Choice::OptionA : Choice::OptionB;
            }
        } else {
            const double gap = (db - da) / noise.scale;
            const double p_a = 1.0 / (1.0 + std::exp(-gap));
            choice = (rng.uniform() < p_a) ? Choice::OptionA : Choice::OptionB;
        }
        Judgment j;
        j.trial = trial;
        j.choice = choice;
        j.valid = true;
        const int picked = (choice == Choice::OptionA) ? trial.option_a : trial.option_b;
        j.raw_response = truth.names.empty() ? std::string() : truth.names[static_cast<std::size_t>(picked)];
        j.model_id = "synthetic";
        out.push_back(std::move(j));
    }
    return out;
}

RecoveryCurve recovery_experiment(int n_items, int dimension, const std::vector<long long>& budgets,
                                  const NoiseModel& noise, const std::vector<std::uint64_t>& seeds,
                                  const FitConfig& fit) {
    if (budgets.empty()) fail("InvalidCount", "recovery experiment needs at least one budget");
    for (std::size_t i = 0; i + 1 < budgets.size(); ++i) {
        if (budgets[i + 1] <= budgets[i]) fail("InvalidCount", "budgets must be strictly increasing");
    }
    if (budgets.front() < 0) fail("InvalidCount", "budgets must be nonnegative");
    if (seeds.empty()) fail("InvalidCount", "recovery experiment needs at least one seed");

    const ConceptSet items = synthetic_concepts(n_items);
    RecoveryCurve curve;
    curve.n_items = n_items;
    curve.dimension = dimension;
    curve.noise = noise;
    for (long long budget : budgets) {
        double err_sum = 0.0;
        double r2_sum = 0.0;
        for (std::uint64_t seed : seeds) {
            const EmbeddingMatrix truth = generate_ground_truth(n_items, dimension, seed);
            if (budget == 0) {
                // Nothing to fit: every item sits at the origin, every
                // held-out comparison is an exact tie.
                err_sum += 0.5;
                EmbeddingMatrix zero;
                zero.values = Eigen::MatrixXd::Zero(n_items, dimension);
                zero.names = truth.names;
                r2_sum += procrustes_r2(zero, truth);
                continue;
            }
            // Distinct derived seeds keep the sampling, response, and fit
            // streams independent of one another.
            const auto trials = sample_trials(items, static_cast<int>(budget),
                                              seed ^ 0x517cc1b727220a95ull);
            const auto judgments = simulate_judgments(truth, trials, noise,
                                                      seed ^ 0x2545f4914f6cdd1dull);
            FitConfig fc = fit;
            fc.dimension = dimension;
            fc.seed = seed;
            auto [emb, report] = fit_ordinal(to_constraints(judgments), n_items, fc);
            err_sum += 1.0 - report.holdout_accuracy;
            r2_sum += procrustes_r2(emb, truth);
        }
        const double k = static_cast<double>(seeds.size());
        curve.points.push_back({budget, err_sum / k, r2_sum / k});
    }
    return curve;
}

double scaling_slope(const RecoveryCurve& curve) {
    if (curve.points.empty()) fail("InsufficientDecay", "empty recovery curve");
    double min_err = std::numeric_limits<double>::infinity();
    for (const auto& pt : curve.points) min_err = std::min(min_err, pt.holdout_error);
    const double floor = min_err + 0.02;

    std::vector<double> lx, ly;
    for (const auto& pt : curve.points) {
        if (pt.holdout_error <= floor) continue;
        if (pt.budget <= 0) fail("InvalidCount", "slope fitting needs positive budgets");
        lx.push_back(std::log(static_cast<double>(pt.budget)));
        ly.push_back(std::log(pt.holdout_error));
    }
    if (lx.size() < 4) {
        fail("InsufficientDecay", "fewer than 4 points above the error floor");
    }
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) fail("InsufficientDecay", "degenerate budget spread");
    return sxy / sxx;
}

std::string RecoveryCurve::to_csv() const {
    std::string out = "budget,holdout_error,r2_truth\n";
    for (const auto& pt : points) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%lld", pt.budget);
        out += std::string(buf) + ',' + csv::format_double(pt.holdout_error) + ',' +
               csv::format_double(pt.procrustes_r2) + '\n';
    }
    return out;
}

}  // namespace tripalign
