#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tripalign/registry.hpp"

namespace tripalign {

struct PearsonResult {
    double r = 0.0;
    double p_value = 1.0;
    int n = 0;
};

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p_value = 1.0;
};

struct AnovaResult {
    double f = 0.0;
    int df1 = 0;
    int df2 = 0;
    double p_value = 1.0;
};

/// Sample Pearson correlation with a two-sided p-value from the t-transform
/// (n - 2 degrees of freedom).
PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Welch two-sample t-test with Welch-Satterthwaite degrees of freedom.
WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

/// One-way ANOVA: F = between-group over within-group mean square.
AnovaResult oneway_anova(const std::vector<std::vector<double>>& groups);

/// Simple column table for predictor preparation. Missing cells stay absent.
struct DataTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::optional<double>>> values;   // column-major

    std::size_t column_index(const std::string& name) const;
};

/// Rescales the named columns to mean 0 and (population) standard deviation 1
/// over their present values. Constant columns are an error.
void standardize(DataTable& table, const std::vector<std::string>& columns);

struct RegressionSpec {
    std::string response = "alignment_r2";
    std::vector<std::string> fixed_predictors;   // empty = all ModelCard predictors
    std::string group_column = "family";
    bool standardize_predictors = true;
};

struct MixedModelFit {
    std::vector<std::string> terms;   // "(intercept)" first
    Eigen::VectorXd beta;
    Eigen::VectorXd se;
    Eigen::VectorXd t_scores;
    Eigen::VectorXd p_values;
    double group_variance = 0.0;
    double residual_variance = 0.0;
    double r2 = 0.0;                  // fixed + random predictions vs observed
    int n_rows = 0;
    int n_groups = 0;
    int dropped_rows = 0;             // listwise deletion on absent predictors
    std::vector<std::string> log_transformed;

    std::string to_csv() const;       // term,beta,se,t,p
};

/// Random-intercept linear model y = X beta + u_group + eps fit by REML:
/// the variance ratio is profiled with a golden-section search and GLS is
/// solved at each candidate. Wald p-values use N - p - #groups df.
MixedModelFit fit_random_intercept(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                   const std::vector<int>& group, const std::vector<std::string>& terms);

/// Builds the design from an ingredient table: listwise deletion on absent
/// predictors, log10 for count predictors spanning more than two orders of
/// magnitude, standardization by default, family as the grouping.
MixedModelFit fit_random_intercept_model(const IngredientTable& table, const RegressionSpec& spec);

struct CorrelationCell {
    std::string left;
    std::string right;
    double r = 0.0;
    double p_value = 1.0;
    int n = 0;
};

struct CorrelationMatrix {
    std::vector<CorrelationCell> cells;
    std::vector<std::string> warnings;

    std::string to_csv() const;       // left,right,r,p,n
};

/// Pearson r between every alignment-metric column and every benchmark
/// column, pairwise complete over models. Constant or under-covered columns
/// are skipped with a warning.
CorrelationMatrix benchmark_alignment_correlations(
    const std::map<std::string, std::map<std::string, double>>& alignment_metrics,
    const std::map<std::string, std::map<std::string, double>>& benchmark_scores);

/// Convenience form using the table's alignment_r2 and attached benchmarks.
CorrelationMatrix benchmark_alignment_correlations(const IngredientTable& table);

}  // namespace tripalign
