#include "tripalign/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "tripalign/csv.hpp"
#include "tripalign/error.hpp"

namespace tripalign {

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double two_sided_t_p(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    boost::math::students_t_distribution<double> dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

}  // namespace

PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) fail("SizeMismatch", "pearson: input lengths differ");
    const int n = static_cast<int>(x.size());
    if (n < 3) fail("InsufficientData", "pearson needs at least 3 pairs");
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        const double a = x[static_cast<std::size_t>(i)] - mx;
        const double b = y[static_cast<std::size_t>(i)] - my;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    if (sxx == 0.0 || syy == 0.0) fail("ConstantInput", "pearson: constant input column");
    PearsonResult out;
    out.n = n;
    out.r = sxy / std::sqrt(sxx * syy);
    // Guard the t-transform against |r| hitting 1 to rounding.
    const double r2 = std::min(out.r * out.r, 1.0);
    if (1.0 - r2 <= 0.0) {
        out.p_value = 0.0;
    } else {
        const double t = out.r * std::sqrt(static_cast<double>(n - 2) / (1.0 - r2));
        out.p_value = two_sided_t_p(t, static_cast<double>(n - 2));
    }
    return out;
}

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2) fail("InsufficientData", "welch_t_test needs >= 2 values per group");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double ma = mean_of(a);
    const double mb = mean_of(b);
    double va = 0.0, vb = 0.0;
    for (double x : a) va += (x - ma) * (x - ma);
    for (double x : b) vb += (x - mb) * (x - mb);
    va /= na - 1.0;
    vb /= nb - 1.0;
    if (va == 0.0 && vb == 0.0) fail("ZeroVariance", "welch_t_test: both groups are constant");
    const double sa = va / na;
    const double sb = vb / nb;
    WelchResult out;
    out.t = (ma - mb) / std::sqrt(sa + sb);
    out.df = (sa + sb) * (sa + sb) /
             (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    out.p_value = two_sided_t_p(out.t, out.df);
    return out;
}

AnovaResult oneway_anova(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) fail("InsufficientData", "oneway_anova needs >= 2 groups");
    int total = 0;
    double grand = 0.0;
    for (const auto& g : groups) {
        if (g.empty()) fail("InsufficientData", "oneway_anova: empty group");
        for (double x : g) grand += x;
        total += static_cast<int>(g.size());
    }
    const int k = static_cast<int>(groups.size());
    if (total - k < 1) fail("InsufficientData", "oneway_anova: no within-group degrees of freedom");
    grand /= static_cast<double>(total);
    double ssb = 0.0, ssw = 0.0;
    for (const auto& g : groups) {
        const double m = mean_of(g);
        ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
        for (double x : g) ssw += (x - m) * (x - m);
    }
    if (ssw == 0.0) fail("ZeroVariance", "oneway_anova: zero within-group variance");
    AnovaResult out;
    out.df1 = k - 1;
    out.df2 = total - k;
    out.f = (ssb / static_cast<double>(out.df1)) / (ssw / static_cast<double>(out.df2));
    boost::math::fisher_f_distribution<double> dist(static_cast<double>(out.df1),
                                                    static_cast<double>(out.df2));
    out.p_value = boost::math::cdf(boost::math::complement(dist, out.f));
    return out;
}

std::size_t DataTable::column_index(const std::string& name) const {
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] == name) return c;
    }
    fail("UnknownColumn", "no such column: " + name);
}

void standardize(DataTable& table, const std::vector<std::string>& names) {
    for (const auto& name : names) {
        auto& col = table.values[table.column_index(name)];
        double sum = 0.0;
        int n = 0;
        for (const auto& v : col) {
            if (v) {
                sum += *v;
                ++n;
            }
        }
        if (n == 0) fail("ConstantInput", "standardize: column is entirely absent: " + name);
        const double mu = sum / static_cast<double>(n);
        double ss = 0.0;
        for (const auto& v : col) {
            if (v) ss += (*v - mu) * (*v - mu);
        }
        // Population standard deviation: standardize({0, 2}) -> {-1, 1}.
        const double sd = std::sqrt(ss / static_cast<double>(n));
        if (sd == 0.0) fail("ConstantInput", "standardize: constant column: " + name);
        for (auto& v : col) {
            if (v) v = (*v - mu) / sd;
        }
    }
}

namespace {

// Sufficient statistics that make each REML evaluation O(p^2 q + p^3)
// instead of O(n^2): with V0 = I + g Z Z', the inverse acts blockwise as
// I - (g / (1 + g n_j)) J inside group j.
struct RemlWork {
    Eigen::MatrixXd x;                 // n x p design
    Eigen::VectorXd y;
    std::vector<int> group;            // 0-based group index per row
    std::vector<int> group_size;
    Eigen::MatrixXd xtx;               // p x p
    Eigen::VectorXd xty;
    Eigen::MatrixXd group_x_sums;      // q x p, row j = sum of x rows in group j
    Eigen::VectorXd group_y_sums;      // q
    int n = 0;
    int p = 0;
    int q = 0;
};

struct RemlEval {
    double criterion = std::numeric_limits<double>::infinity();
    Eigen::VectorXd beta;
    Eigen::MatrixXd xtwx;
    double rwr = 0.0;                  // r' V0^-1 r
    Eigen::VectorXd group_resid_sums;  // per-group sums of raw residuals
};

RemlEval evaluate_gamma(const RemlWork& w, double gamma) {
    RemlEval ev;
    Eigen::VectorXd c(w.q);
    for (int j = 0; j < w.q; ++j) {
        c[j] = gamma / (1.0 + gamma * static_cast<double>(w.group_size[static_cast<std::size_t>(j)]));
    }
    Eigen::MatrixXd xtwx = w.xtx;
    Eigen::VectorXd xtwy = w.xty;
    for (int j = 0; j < w.q; ++j) {
        const Eigen::VectorXd sx = w.group_x_sums.row(j).transpose();
        xtwx.noalias() -= c[j] * sx * sx.transpose();
        xtwy.noalias() -= c[j] * sx * w.group_y_sums[j];
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtwx);
    if (ldlt.info() != Eigen::Success) return ev;
    ev.beta = ldlt.solve(xtwy);

    const Eigen::VectorXd resid = w.y - w.x * ev.beta;
    ev.group_resid_sums = Eigen::VectorXd::Zero(w.q);
    double rr = resid.squaredNorm();
    for (int i = 0; i < w.n; ++i) {
        ev.group_resid_sums[w.group[static_cast<std::size_t>(i)]] += resid[i];
    }
    double rwr = rr;
    for (int j = 0; j < w.q; ++j) {
        rwr -= c[j] * ev.group_resid_sums[j] * ev.group_resid_sums[j];
    }
    if (!(rwr > 0.0)) return ev;

    double log_det_v0 = 0.0;
    for (int j = 0; j < w.q; ++j) {
        log_det_v0 += std::log1p(gamma * static_cast<double>(w.group_size[static_cast<std::size_t>(j)]));
    }
    double log_det_xtwx = 0.0;
    for (int i = 0; i < w.p; ++i) {
        const double d = ldlt.vectorD()[i];
        if (!(d > 0.0)) return ev;
        log_det_xtwx += std::log(d);
    }
    ev.xtwx = std::move(xtwx);
    ev.rwr = rwr;
    ev.criterion = static_cast<double>(w.n - w.p) * std::log(rwr) + log_det_v0 + log_det_xtwx;
    return ev;
}

}  // namespace

MixedModelFit fit_random_intercept(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                   const std::vector<int>& group,
                                   const std::vector<std::string>& terms) {
    RemlWork w;
    w.x = x;
    w.y = y;
    w.group = group;
    w.n = static_cast<int>(x.rows());
    w.p = static_cast<int>(x.cols());
    if (w.n != static_cast<int>(y.size()) || w.n != static_cast<int>(group.size())) {
        fail("SizeMismatch", "fit_random_intercept: row counts differ");
    }
    if (static_cast<int>(terms.size()) != w.p) {
        fail("SizeMismatch", "fit_random_intercept: one term name per design column required");
    }
    for (int g : group) {
        w.q = std::max(w.q, g + 1);
        if (g < 0) fail("InvalidCount", "group indices must be >= 0");
    }
    w.group_size.assign(static_cast<std::size_t>(w.q), 0);
    for (int g : group) ++w.group_size[static_cast<std::size_t>(g)];
    for (int j = 0; j < w.q; ++j) {
        if (w.group_size[static_cast<std::size_t>(j)] == 0) {
            fail("InvalidCount", "group indices must be contiguous from 0");
        }
    }
    if (w.q < 2) fail("InsufficientData", "random intercept needs >= 2 groups");
    const int wald_df = w.n - w.p - w.q;
    if (wald_df < 1) fail("InsufficientData", "too few rows for the requested design");

    // Rank check up front so a singular design names its columns instead of
    // surfacing as an LDLT failure at some arbitrary gamma.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < w.p) {
        const auto& perm = qr.colsPermutation().indices();
        std::string cols;
        for (int i = qr.rank(); i < w.p; ++i) {
            if (!cols.empty()) cols += ", ";
            cols += terms[static_cast<std::size_t>(perm[i])];
        }
        fail("SingularDesign", "collinear design columns: " + cols);
    }

    w.xtx = x.transpose() * x;
    w.xty = x.transpose() * y;
    w.group_x_sums = Eigen::MatrixXd::Zero(w.q, w.p);
    w.group_y_sums = Eigen::VectorXd::Zero(w.q);
    for (int i = 0; i < w.n; ++i) {
        w.group_x_sums.row(group[static_cast<std::size_t>(i)]) += x.row(i);
        w.group_y_sums[group[static_cast<std::size_t>(i)]] += y[i];
    }

    // Profiled REML: minimize over log(gamma), gamma = group var / resid var.
    const double lo = std::log(1e-8);
    const double hi = std::log(1e8);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c1 = b - inv_phi * (b - a);
    double c2 = a + inv_phi * (b - a);
    double f1 = evaluate_gamma(w, std::exp(c1)).criterion;
    double f2 = evaluate_gamma(w, std::exp(c2)).criterion;
    for (int it = 0; it < 200 && (b - a) > 1e-10; ++it) {
        if (f1 < f2) {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - inv_phi * (b - a);
            f1 = evaluate_gamma(w, std::exp(c1)).criterion;
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + inv_phi * (b - a);
            f2 = evaluate_gamma(w, std::exp(c2)).criterion;
        }
    }
    double best_log = (f1 < f2) ? c1 : c2;
    double best_crit = std::min(f1, f2);
    // The profile can be monotone; accept a boundary optimum explicitly.
    for (double edge : {lo, hi}) {
        const double crit = evaluate_gamma(w, std::exp(edge)).criterion;
        if (crit < best_crit) {
            best_crit = crit;
            best_log = edge;
        }
    }
    if (!std::isfinite(best_crit)) fail("Divergence", "REML criterion is not finite anywhere on the grid");
    const double gamma = std::exp(best_log);

    RemlEval ev = evaluate_gamma(w, gamma);
    const double sigma2 = ev.rwr / static_cast<double>(w.n - w.p);

    MixedModelFit fit;
    fit.terms = terms;
    fit.beta = ev.beta;
    fit.residual_variance = sigma2;
    fit.group_variance = gamma * sigma2;
    fit.n_rows = w.n;
    fit.n_groups = w.q;

    const Eigen::MatrixXd cov = sigma2 * ev.xtwx.inverse();
    fit.se.resize(w.p);
    fit.t_scores.resize(w.p);
    fit.p_values.resize(w.p);
    for (int i = 0; i < w.p; ++i) {
        fit.se[i] = std::sqrt(cov(i, i));
        fit.t_scores[i] = fit.beta[i] / fit.se[i];
        fit.p_values[i] = two_sided_t_p(fit.t_scores[i], static_cast<double>(wald_df));
    }

    // BLUP intercepts feed the fit-quality number so r2 reflects the model
    // actually reported, fixed effects plus shrunken group offsets.
    Eigen::VectorXd u(w.q);
    for (int j = 0; j < w.q; ++j) {
        u[j] = gamma * ev.group_resid_sums[j] /
               (1.0 + gamma * static_cast<double>(w.group_size[static_cast<std::size_t>(j)]));
    }
    const double ybar = y.mean();
    double ss_res = 0.0, ss_tot = 0.0;
    for (int i = 0; i < w.n; ++i) {
        const double pred = x.row(i).dot(ev.beta) + u[group[static_cast<std::size_t>(i)]];
        ss_res += (y[i] - pred) * (y[i] - pred);
        ss_tot += (y[i] - ybar) * (y[i] - ybar);
    }
    if (ss_tot == 0.0) fail("ConstantInput", "response is constant");
    fit.r2 = 1.0 - ss_res / ss_tot;
    return fit;
}

namespace {

const std::vector<std::string> kDefaultPredictors = {
    "instruction_tuned", "multimodal",   "param_count",   "layer_count",
    "head_count",        "attention_dim", "embedding_dim", "mlp_dim",
    "context_length",    "vocab_size",    "training_tokens"};

const std::set<std::string> kCountScale = {
    "param_count", "layer_count",   "head_count",     "attention_dim", "embedding_dim",
    "mlp_dim",     "context_length", "vocab_size",    "training_tokens"};

}  // namespace

MixedModelFit fit_random_intercept_model(const IngredientTable& table, const RegressionSpec& spec) {
    if (spec.response != "alignment_r2") {
        fail("UnknownColumn", "unsupported response column: " + spec.response);
    }
    if (spec.group_column != "family") {
        fail("UnknownColumn", "unsupported grouping column: " + spec.group_column);
    }
    std::vector<std::string> predictors =
        spec.fixed_predictors.empty() ? kDefaultPredictors : spec.fixed_predictors;

    // Listwise deletion: a row joins the design only if every requested
    // predictor is present on its card.
    std::vector<const IngredientRow*> used;
    int dropped = 0;
    for (const auto& row : table.rows) {
        bool complete = !row.card.family.empty();
        for (const auto& p : predictors) {
            if (!row.card.predictor(p)) {
                complete = false;
                break;
            }
        }
        if (complete) {
            used.push_back(&row);
        } else {
            ++dropped;
        }
    }
    const int n = static_cast<int>(used.size());
    const int p = static_cast<int>(predictors.size()) + 1;
    if (n < p + 2) fail("InsufficientData", "too few complete rows for the requested predictors");

    DataTable cols;
    cols.columns = predictors;
    cols.values.assign(predictors.size(), std::vector<std::optional<double>>(
                                              static_cast<std::size_t>(n)));
    for (std::size_t c = 0; c < predictors.size(); ++c) {
        for (int i = 0; i < n; ++i) {
            cols.values[c][static_cast<std::size_t>(i)] =
                used[static_cast<std::size_t>(i)]->card.predictor(predictors[c]);
        }
    }

    // Count-scale predictors spanning more than two orders of magnitude get
    // a log10 transform; the choice is recorded on the fit.
    std::vector<std::string> logged;
    for (std::size_t c = 0; c < predictors.size(); ++c) {
        if (!kCountScale.count(predictors[c])) continue;
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        bool positive = true;
        for (const auto& v : cols.values[c]) {
            if (*v <= 0.0) {
                positive = false;
                break;
            }
            lo = std::min(lo, *v);
            hi = std::max(hi, *v);
        }
        if (positive && hi / lo > 100.0) {
            for (auto& v : cols.values[c]) v = std::log10(*v);
            logged.push_back(predictors[c]);
        }
    }
    if (spec.standardize_predictors) standardize(cols, predictors);

    Eigen::VectorXd y(n);
    Eigen::MatrixXd x(n, p);
    std::vector<int> group(static_cast<std::size_t>(n));
    std::map<std::string, int> families;
    for (int i = 0; i < n; ++i) {
        const auto& row = *used[static_cast<std::size_t>(i)];
        y[i] = row.alignment_r2;
        x(i, 0) = 1.0;
        for (std::size_t c = 0; c < predictors.size(); ++c) {
            x(i, static_cast<int>(c) + 1) = *cols.values[c][static_cast<std::size_t>(i)];
        }
        auto [it, fresh] = families.emplace(row.card.family, static_cast<int>(families.size()));
        (void)fresh;
        group[static_cast<std::size_t>(i)] = it->second;
    }

    std::vector<std::string> terms;
    terms.push_back("(intercept)");
    terms.insert(terms.end(), predictors.begin(), predictors.end());

    MixedModelFit fit = fit_random_intercept(y, x, group, terms);
    fit.dropped_rows = dropped;
    fit.log_transformed = std::move(logged);
    return fit;
}

std::string MixedModelFit::to_csv() const {
    std::string out = "term,beta,se,t,p\n";
    for (std::size_t i = 0; i < terms.size(); ++i) {
        out += csv::quote(terms[i]) + ',' + csv::format_double(beta[static_cast<int>(i)]) + ',' +
               csv::format_double(se[static_cast<int>(i)]) + ',' +
               csv::format_double(t_scores[static_cast<int>(i)]) + ',' +
               csv::format_double(p_values[static_cast<int>(i)]) + '\n';
    }
    return out;
}

CorrelationMatrix benchmark_alignment_correlations(
    const std::map<std::string, std::map<std::string, double>>& alignment_metrics,
    const std::map<std::string, std::map<std::string, double>>& benchmark_scores) {
    std::set<std::string> metric_names;
    for (const auto& [model, metrics] : alignment_metrics) {
        (void)model;
        for (const auto& [name, v] : metrics) {
            (void)v;
            metric_names.insert(name);
        }
    }
    std::set<std::string> benchmark_names;
    for (const auto& [model, scores] : benchmark_scores) {
        (void)model;
        for (const auto& [name, v] : scores) {
            (void)v;
            benchmark_names.insert(name);
        }
    }

    CorrelationMatrix out;
    for (const auto& metric : metric_names) {
        for (const auto& bench : benchmark_names) {
            std::vector<double> xs, ys;
            for (const auto& [model, metrics] : alignment_metrics) {
                auto mi = metrics.find(metric);
                if (mi == metrics.end()) continue;
                auto bi = benchmark_scores.find(model);
                if (bi == benchmark_scores.end()) continue;
                auto si = bi->second.find(bench);
                if (si == bi->second.end()) continue;
                xs.push_back(mi->second);
                ys.push_back(si->second);
            }
            if (xs.size() < 3) {
                out.warnings.push_back("skipped " + metric + " vs " + bench +
                                       ": fewer than 3 models with both scores");
                continue;
            }
            auto constant = [](const std::vector<double>& v) {
                for (double x : v) {
                    if (x != v.front()) return false;
                }
                return true;
            };
            if (constant(xs) || constant(ys)) {
                out.warnings.push_back("skipped " + metric + " vs " + bench + ": constant column");
                continue;
            }
            const PearsonResult r = pearson(xs, ys);
            out.cells.push_back({metric, bench, r.r, r.p_value, r.n});
        }
    }
    return out;
}

CorrelationMatrix benchmark_alignment_correlations(const IngredientTable& table) {
    std::map<std::string, std::map<std::string, double>> metrics;
    std::map<std::string, std::map<std::string, double>> scores;
    for (const auto& row : table.rows) {
        metrics[row.card.model_id]["alignment_r2"] = row.alignment_r2;
        for (const auto& [name, v] : row.benchmarks) {
            scores[row.card.model_id][name] = v;
        }
    }
    return benchmark_alignment_correlations(metrics, scores);
}

std::string CorrelationMatrix::to_csv() const {
    std::string out = "metric,benchmark,r,p,n\n";
    for (const auto& cell : cells) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%d", cell.n);
        out += csv::quote(cell.left) + ',' + csv::quote(cell.right) + ',' +
               csv::format_double(cell.r) + ',' + csv::format_double(cell.p_value) + ',' + buf + '\n';
    }
    return out;
}

}  // namespace tripalign
