// Command-line front end: each subcommand delegates to one library module
// and writes a manifest describing inputs, seeds, and outputs.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tripalign/csv.hpp"
#include "tripalign/embedding.hpp"
#include "tripalign/error.hpp"
#include "tripalign/harvest.hpp"
#include "tripalign/metrics.hpp"
#include "tripalign/ordinal.hpp"
#include "tripalign/registry.hpp"
#include "tripalign/spose.hpp"
#include "tripalign/stats.hpp"
#include "tripalign/synth.hpp"
#include "tripalign/triplets.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tripalign;

namespace {

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string iso_now() {
    char buf[32];
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Effective config per run: defaults, then config-file values, then explicit
// flags. CLI11 already stored flag values, so a key is only overlaid when
// the flag was not given.
template <typename T>
void overlay(const json& cfg, const char* key, const CLI::Option* opt, T& slot) {
    if (opt != nullptr && opt->count() > 0) return;
    if (cfg.contains(key)) slot = cfg.at(key).get<T>();
}

json load_config_file(const std::string& path, const std::string& subcommand) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) fail("IoError", "cannot read config file: " + path);
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) fail("MalformedConfig", "config is not valid JSON: " + path);
    if (doc.contains(subcommand) && doc[subcommand].is_object()) return doc[subcommand];
    return doc;
}

void write_manifest(const std::string& out_dir, const std::string& command, const json& config,
                    const std::vector<std::string>& inputs, const std::vector<std::string>& outputs) {
    json manifest;
    manifest["command"] = command;
    manifest["created"] = iso_now();   // informational; not part of the hash
    manifest["config"] = config;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "fnv1a:%016llx",
                  static_cast<unsigned long long>(fnv1a64(config.dump())));
    manifest["config_hash"] = hash;
    manifest["inputs"] = inputs;
    manifest["outputs"] = outputs;
    const fs::path path = fs::path(out_dir) / ("manifest-" + command + ".json");
    std::ofstream out(path);
    if (!out) fail("IoError", "cannot write manifest: " + path.string());
    out << manifest.dump(2) << '\n';
}

std::string stage_label(Stage s) {
    switch (s) {
        case Stage::BaseStage1: return "Base Stage 1";
        case Stage::Base: return "Base";
        case Stage::Sft: return "SFT";
        case Stage::Dpo: return "DPO";
        case Stage::Rlvr: return "RLVR";
        case Stage::Instruct: return "Instruct";
    }
    return "?";
}

std::vector<std::string> parse_name_list(const std::string& csv_list) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : csv_list) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

template <typename T>
std::vector<T> parse_number_list(const std::string& csv_list, const char* what) {
    std::vector<T> out;
    for (const auto& tok : parse_name_list(csv_list)) {
        try {
            if constexpr (std::is_floating_point_v<T>) {
                out.push_back(static_cast<T>(std::stod(tok)));
            } else {
                out.push_back(static_cast<T>(std::stoll(tok)));
            }
        } catch (const std::exception&) {
            fail("NonNumericField", std::string(what) + ": cannot parse '" + tok + "'");
        }
    }
    if (out.empty()) fail("InvalidCount", std::string(what) + ": empty list");
    return out;
}

std::map<std::string, double> load_alignment_csv(const std::string& path) {
    const csv::Table t = csv::read_file(path);
    auto col_id = t.column("model_id");
    auto col_r2 = t.column("alignment_r2");
    if (!col_id || !col_r2) fail("MalformedCsv", path + ": expected header model_id,alignment_r2");
    std::map<std::string, double> out;
    for (const auto& row : t.rows) {
        out[row[*col_id]] = std::stod(row[*col_r2]);
    }
    return out;
}

// Reorders the model embedding to the reference's row order when both carry
// names; metric routines require identical row identity.
void align_row_order(EmbeddingMatrix& model, const EmbeddingMatrix& reference) {
    if (model.names.empty() || reference.names.empty()) return;
    if (model.names == reference.names) return;
    model = subset_by_names(model, ConceptSet(reference.names, "reference order"));
}

struct GlobalOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
};

int run_sample(const GlobalOpts& g, const json& cfg, const std::string& concepts_path,
               long long n_trials, const CLI::Option* n_opt, int dim, const CLI::Option* dim_opt,
               double oversample, std::string out_path) {
    const ConceptSet set = load_concept_set(concepts_path);
    long long budget = n_trials;
    if (n_opt->count() == 0 && dim_opt->count() > 0) {
        budget = required_judgment_count(set.size(), dim, oversample);
        std::printf("budget for n=%d d=%d oversample=%g: %lld\n", set.size(), dim, oversample, budget);
    }
    if (budget <= 0) fail("InvalidCount", "nothing to sample: give --n-trials or --dim");
    if (out_path.empty()) out_path = (fs::path(g.out_dir) / "trials.jsonl").string();
    const auto trials = sample_trials(set, static_cast<int>(budget), g.seed);
    save_trials(trials, out_path);
    std::printf("wrote %zu trials to %s (seed %llu)\n", trials.size(), out_path.c_str(),
                static_cast<unsigned long long>(g.seed));
    json effective = cfg;
    effective["seed"] = g.seed;
    effective["n_trials"] = budget;
    effective["concepts"] = concepts_path;
    write_manifest(g.out_dir, "sample", effective, {concepts_path}, {out_path});
    return 0;
}

int run_collect(const GlobalOpts& g, const json& cfg, const std::string& concepts_path,
                const std::string& trials_path, std::string log_path, EndpointConfig endpoint,
                bool base_model) {
    const ConceptSet set = load_concept_set(concepts_path);
    const auto trials = load_trials(trials_path);
    if (log_path.empty()) log_path = (fs::path(g.out_dir) / "judgments.jsonl").string();

    HarvestSession session = resume(log_path, trials);
    session.concepts = set;
    session.base_model = base_model;
    if (const char* key = std::getenv("ALIGN_API_KEY")) endpoint.api_key = key;
    if (cfg.contains("sampling") && cfg["sampling"].is_object()) endpoint.sampling = cfg["sampling"];

    const std::size_t already = session.completed.size();
    const HarvestSummary summary = harvest(session, endpoint);
    std::printf("resumed with %zu complete; this run: valid=%d invalid=%d retried=%d; total %zu/%zu\n",
                already, summary.valid, summary.invalid, summary.retried, session.completed.size(),
                trials.size());
    json effective = cfg;
    effective["endpoint"] = endpoint.base_url;
    effective["model"] = endpoint.model_name;
    effective["base_model"] = base_model;
    write_manifest(g.out_dir, "collect", effective, {concepts_path, trials_path}, {log_path});
    return 0;
}

int run_fit_ordinal(const GlobalOpts& g, const json& cfg, const std::string& log_path,
                    const std::string& concepts_path, const FitConfig& fc, std::string out_path) {
    const ConceptSet set = load_concept_set(concepts_path);
    const auto judgments = load_judgments(log_path);
    const auto constraints = to_constraints(judgments);
    FitConfig fit_cfg = fc;
    if (g.seed_opt->count() > 0) fit_cfg.seed = g.seed;
    auto [emb, report] = fit_ordinal(constraints, set.size(), fit_cfg);
    emb.names = set.names();
    if (out_path.empty()) out_path = (fs::path(g.out_dir) / "ordinal_embedding.csv").string();
    save_embedding(emb, out_path);

    json rep;
    rep["holdout_loss"] = report.holdout_loss;
    rep["holdout_accuracy"] = report.holdout_accuracy;
    rep["final_train_loss"] = report.train_loss_curve.back();
    rep["epochs"] = fit_cfg.epochs;
    rep["unseen_items"] = report.unseen_items.size();
    const std::string rep_path = (fs::path(g.out_dir) / "ordinal_fit.json").string();
    std::ofstream rout(rep_path);
    rout << rep.dump(2) << '\n';
    std::printf("fit %d items x %d dims from %zu constraints: holdout accuracy %.4f, loss %.4f\n",
                set.size(), fit_cfg.dimension, constraints.size(), report.holdout_accuracy,
                report.holdout_loss);
    json effective = cfg;
    effective["dimension"] = fit_cfg.dimension;
    effective["seed"] = fit_cfg.seed;
    write_manifest(g.out_dir, "fit-ordinal", effective, {log_path, concepts_path},
                   {out_path, rep_path});
    return 0;
}

int run_fit_spose(const GlobalOpts& g, const json& cfg, const std::string& log_path,
                  const std::string& concepts_path, const SposeConfig& sc,
                  const std::string& grid_list, std::string out_path) {
    const ConceptSet set = load_concept_set(concepts_path);
    const auto judgments = load_judgments(log_path);
    std::vector<OddOneOutJudgment> triples;
    for (const auto& j : judgments) {
        if (j.valid) triples.push_back(anchored_to_odd_one_out(j));
    }
    SposeConfig spose_cfg = sc;
    if (g.seed_opt->count() > 0) spose_cfg.seed = g.seed;

    json grid_report = json::array();
    if (!grid_list.empty()) {
        const auto grid = parse_number_list<double>(grid_list, "lambda grid");
        auto [best, results] = tune_lambda(triples, set.size(), grid, spose_cfg);
        for (const auto& [lam, holdout] : results) {
            grid_report.push_back({{"lambda", lam}, {"holdout_loglik", holdout}});
            std::printf("lambda %-8g holdout loglik %.5f\n", lam, holdout);
        }
        spose_cfg.lambda = best;
        std::printf("selected lambda %g\n", best);
    }
    auto [emb, report] = fit_spose(triples, set.size(), spose_cfg);
    emb.names = set.names();
    if (out_path.empty()) out_path = (fs::path(g.out_dir) / "spose_embedding.csv").string();
    save_embedding(emb, out_path);

    json rep;
    rep["lambda"] = spose_cfg.lambda;
    rep["holdout_loss"] = report.holdout_loss;
    rep["holdout_accuracy"] = report.holdout_accuracy;
    rep["sparsity_1e-3"] = sparsity(emb, 1e-3);
    if (!grid_report.empty()) rep["grid"] = grid_report;
    const std::string rep_path = (fs::path(g.out_dir) / "spose_fit.json").string();
    std::ofstream rout(rep_path);
    rout << rep.dump(2) << '\n';
    std::printf("spose fit %d x %d: lambda %g, holdout accuracy %.4f, sparsity %.4f\n", set.size(),
                spose_cfg.dimension, spose_cfg.lambda, report.holdout_accuracy, sparsity(emb, 1e-3));
    json effective = cfg;
    effective["lambda"] = spose_cfg.lambda;
    effective["dimension"] = spose_cfg.dimension;
    effective["seed"] = spose_cfg.seed;
    write_manifest(g.out_dir, "fit-spose", effective, {log_path, concepts_path},
                   {out_path, rep_path});
    return 0;
}

int run_align(const GlobalOpts& g, const json& cfg, const std::string& model_path,
              const std::string& human_path, std::string model_id, double dim_threshold,
              const CLI::Option* thr_opt, std::string out_path) {
    EmbeddingMatrix model = load_embedding(model_path);
    const EmbeddingMatrix human = load_embedding(human_path);
    align_row_order(model, human);
    if (model_id.empty()) model_id = fs::path(model_path).stem().string();
    const AlignmentReport report = align(model, human, model_id);

    if (out_path.empty()) out_path = (fs::path(g.out_dir) / "alignment_report.csv").string();
    std::ofstream out(out_path);
    if (!out) fail("IoError", "cannot write " + out_path);
    out << AlignmentReport::csv_header() << '\n' << report.to_csv_row() << '\n';
    std::printf("%s\n%s\n", AlignmentReport::csv_header().c_str(), report.to_csv_row().c_str());
    if (thr_opt->count() > 0) {
        std::printf("reference dimensionality at %.2f variance: %d\n", dim_threshold,
                    select_dimensionality(human, dim_threshold));
    }
    json effective = cfg;
    effective["model"] = model_path;
    effective["human"] = human_path;
    write_manifest(g.out_dir, "align", effective, {model_path, human_path}, {out_path});
    return 0;
}

int run_stats(const GlobalOpts& g, const json& cfg, const std::string& ingredients_path,
              const std::string& alignments_path, const std::string& benchmarks_path,
              const std::string& predictors_list, const std::string& response,
              bool no_standardize) {
    IngredientTable table = alignments_path.empty()
                                ? load_ingredient_table(ingredients_path)
                                : load_ingredient_table(ingredients_path,
                                                        load_alignment_csv(alignments_path));
    if (table.dropped_without_alignment > 0) {
        std::fprintf(stderr, "note: dropped %d models with no alignment score\n",
                     table.dropped_without_alignment);
    }
    std::vector<std::string> inputs = {ingredients_path};
    std::vector<std::string> outputs;
    if (!benchmarks_path.empty()) {
        attach_benchmarks(table, load_benchmark_scores(benchmarks_path));
        inputs.push_back(benchmarks_path);
    }
    if (!alignments_path.empty()) inputs.push_back(alignments_path);

    RegressionSpec spec;
    spec.response = response;
    spec.standardize_predictors = !no_standardize;
    if (!predictors_list.empty()) spec.fixed_predictors = parse_name_list(predictors_list);
    const MixedModelFit fit = fit_random_intercept_model(table, spec);

    const std::string fit_path = (fs::path(g.out_dir) / "mixed_model.csv").string();
    std::ofstream fout(fit_path);
    fout << fit.to_csv();
    outputs.push_back(fit_path);
    std::printf("%-20s %10s %10s %8s %10s\n", "term", "estimate", "se", "t", "p");
    for (std::size_t i = 0; i < fit.terms.size(); ++i) {
        std::printf("%-20s %10.4f %10.4f %8.3f %10.4g\n", fit.terms[i].c_str(),
                    fit.beta[static_cast<int>(i)], fit.se[static_cast<int>(i)],
                    fit.t_scores[static_cast<int>(i)], fit.p_values[static_cast<int>(i)]);
    }
    std::printf("group variance %.6f, residual variance %.6f, r2 %.4f (%d rows, %d groups, %d dropped)\n",
                fit.group_variance, fit.residual_variance, fit.r2, fit.n_rows, fit.n_groups,
                fit.dropped_rows);
    for (const auto& name : fit.log_transformed) {
        std::printf("note: %s entered as log10\n", name.c_str());
    }

    if (!benchmarks_path.empty()) {
        const CorrelationMatrix corr = benchmark_alignment_correlations(table);
        const std::string corr_path = (fs::path(g.out_dir) / "benchmark_correlations.csv").string();
        std::ofstream cout_file(corr_path);
        cout_file << corr.to_csv();
        outputs.push_back(corr_path);
        for (const auto& w : corr.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
        for (const auto& cell : corr.cells) {
            std::printf("corr %s vs %-16s r=%7.4f p=%.4g (n=%d)\n", cell.left.c_str(),
                        cell.right.c_str(), cell.r, cell.p_value, cell.n);
        }
    }
    json effective = cfg;
    effective["response"] = response;
    effective["standardize"] = !no_standardize;
    write_manifest(g.out_dir, "stats", effective, inputs, outputs);
    return 0;
}

int run_simulate(const GlobalOpts& g, const json& cfg, int n, int d, const std::string& budgets_list,
                 const std::string& noise_kind, double scale, const std::string& seeds_list,
                 const FitConfig& fc, bool print_slope, std::string out_path) {
    NoiseModel noise;
    if (noise_kind == "deterministic") {
        noise.kind = NoiseKind::Deterministic;
    } else if (noise_kind == "logistic") {
        noise.kind = NoiseKind::Logistic;
    } else {
        fail("InvalidNoise", "noise must be deterministic or logistic, got " + noise_kind);
    }
    noise.scale = scale;
    const auto budgets = parse_number_list<long long>(budgets_list, "budgets");
    const auto seeds = parse_number_list<std::uint64_t>(seeds_list, "seeds");
    const RecoveryCurve curve = recovery_experiment(n, d, budgets, noise, seeds, fc);

    if (out_path.empty()) out_path = (fs::path(g.out_dir) / "recovery.csv").string();
    std::ofstream out(out_path);
    if (!out) fail("IoError", "cannot write " + out_path);
    out << curve.to_csv();
    for (const auto& pt : curve.points) {
        std::printf("budget %8lld  holdout error %.4f  r2 to truth %.4f\n", pt.budget,
                    pt.holdout_error, pt.procrustes_r2);
    }
    if (print_slope) {
        std::printf("scaling slope: %.4f\n", scaling_slope(curve));
    }
    json effective = cfg;
    effective["n"] = n;
    effective["d"] = d;
    effective["noise"] = noise_kind;
    effective["seeds"] = seeds_list;
    write_manifest(g.out_dir, "simulate", effective, {}, {out_path});
    return 0;
}

int run_report(const GlobalOpts& g, const json& cfg, const std::string& stage_table_path,
               std::string out_path) {
    const IngredientTable table = load_ingredient_table(stage_table_path);
    const auto averages = stage_averages(table);
    if (out_path.empty()) out_path = (fs::path(g.out_dir) / "stage_averages.csv").string();
    std::ofstream out(out_path);
    if (!out) fail("IoError", "cannot write " + out_path);
    out << "stage,mean_alignment_r2\n";
    for (Stage s : {Stage::BaseStage1, Stage::Base, Stage::Sft, Stage::Dpo, Stage::Rlvr,
                    Stage::Instruct}) {
        auto it = averages.find(s);
        if (it == averages.end()) continue;
        std::printf("%s: %.3f\n", stage_label(s).c_str(), it->second);
        out << to_string(s) << ',' << csv::format_double(it->second) << '\n';
    }
    json effective = cfg;
    effective["stage_table"] = stage_table_path;
    write_manifest(g.out_dir, "report", effective, {stage_table_path}, {out_path});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"triplet similarity alignment toolkit"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "JSON config file (per-subcommand sections allowed)");
    app.add_option("--out-dir", g.out_dir, "directory for outputs and manifests");
    g.seed_opt = app.add_option("--seed", g.seed, "master seed");

    // sample
    auto* sample_cmd = app.add_subcommand("sample", "draw triplet trials for a concept set");
    sample_cmd->fallthrough();
    std::string sample_concepts;
    long long sample_n = 0;
    int sample_dim = 30;
    double sample_oversample = 1.0;
    std::string sample_out;
    auto* sc_concepts = sample_cmd->add_option("--concepts", sample_concepts, "concept list file");
    auto* sc_n = sample_cmd->add_option("--n-trials", sample_n, "number of trials");
    auto* sc_dim = sample_cmd->add_option("--dim", sample_dim, "target dimension for the budget formula");
    auto* sc_over = sample_cmd->add_option("--oversample", sample_oversample, "budget oversampling factor");
    sample_cmd->add_option("--out", sample_out, "output trials JSONL");

    // collect
    auto* collect_cmd = app.add_subcommand("collect", "harvest judgments over HTTP");
    collect_cmd->fallthrough();
    std::string collect_concepts, collect_trials, collect_log;
    EndpointConfig endpoint;
    bool collect_base_model = false;
    auto* cc_concepts = collect_cmd->add_option("--concepts", collect_concepts, "concept list file");
    auto* cc_trials = collect_cmd->add_option("--trials", collect_trials, "trials JSONL");
    collect_cmd->add_option("--log", collect_log, "judgment log (appended, resumable)");
    auto* cc_endpoint = collect_cmd->add_option("--endpoint", endpoint.base_url, "chat-completions base URL");
    auto* cc_model = collect_cmd->add_option("--model", endpoint.model_name, "model name");
    auto* cc_flight = collect_cmd->add_option("--max-in-flight", endpoint.max_in_flight, "parallel requests");
    auto* cc_timeout = collect_cmd->add_option("--timeout", endpoint.request_timeout_s, "request timeout (s)");
    auto* cc_retries = collect_cmd->add_option("--max-retries", endpoint.max_retries, "invalid-parse retries");
    auto* cc_attempts = collect_cmd->add_option("--transport-attempts", endpoint.transport_attempts,
                                                "transport attempts before halting");
    auto* cc_base = collect_cmd->add_option("--backoff-base", endpoint.backoff_base_s, "backoff base (s)");
    auto* cc_cap = collect_cmd->add_option("--backoff-cap", endpoint.backoff_cap_s, "backoff cap (s)");
    collect_cmd->add_flag("--base-model", collect_base_model, "completion-style prompt framing");

    // fit-ordinal
    auto* ord_cmd = app.add_subcommand("fit-ordinal", "fit an ordinal embedding from judgments");
    ord_cmd->fallthrough();
    std::string ord_log, ord_concepts, ord_out;
    FitConfig ord_cfg;
    auto* oc_log = ord_cmd->add_option("--log", ord_log, "judgment JSONL");
    auto* oc_concepts = ord_cmd->add_option("--concepts", ord_concepts, "concept list file");
    auto* oc_dim = ord_cmd->add_option("--dim", ord_cfg.dimension, "embedding dimension");
    auto* oc_lr = ord_cmd->add_option("--lr", ord_cfg.learning_rate, "learning rate");
    auto* oc_epochs = ord_cmd->add_option("--epochs", ord_cfg.epochs, "epochs");
    auto* oc_batch = ord_cmd->add_option("--batch", ord_cfg.batch_size, "batch size");
    auto* oc_holdout = ord_cmd->add_option("--holdout", ord_cfg.holdout_fraction, "holdout fraction");
    ord_cmd->add_option("--out", ord_out, "output embedding CSV");

    // fit-spose
    auto* spose_cmd = app.add_subcommand("fit-spose", "fit a sparse nonnegative embedding");
    spose_cmd->fallthrough();
    std::string spose_log, spose_concepts, spose_out, spose_grid;
    SposeConfig spose_cfg;
    auto* pc_log = spose_cmd->add_option("--log", spose_log, "judgment JSONL");
    auto* pc_concepts = spose_cmd->add_option("--concepts", spose_concepts, "concept list file");
    auto* pc_dim = spose_cmd->add_option("--dim", spose_cfg.dimension, "embedding dimension");
    auto* pc_lambda = spose_cmd->add_option("--lambda", spose_cfg.lambda, "L1 weight");
    spose_cmd->add_option("--lambda-grid", spose_grid, "comma list; tunes on held-out loglik");
    auto* pc_lr = spose_cmd->add_option("--lr", spose_cfg.learning_rate, "learning rate");
    auto* pc_epochs = spose_cmd->add_option("--epochs", spose_cfg.epochs, "epochs");
    auto* pc_batch = spose_cmd->add_option("--batch", spose_cfg.batch_size, "batch size");
    auto* pc_holdout = spose_cmd->add_option("--holdout", spose_cfg.holdout_fraction, "holdout fraction");
    spose_cmd->add_option("--out", spose_out, "output embedding CSV");

    // align
    auto* align_cmd = app.add_subcommand("align", "compare a model embedding to the reference");
    align_cmd->fallthrough();
    std::string align_model, align_human, align_id, align_out;
    double align_threshold = 0.95;
    auto* ac_model = align_cmd->add_option("--model", align_model, "model embedding CSV");
    auto* ac_human = align_cmd->add_option("--human", align_human, "reference embedding CSV");
    align_cmd->add_option("--model-id", align_id, "label for the report row");
    auto* ac_thr = align_cmd->add_option("--dim-threshold", align_threshold,
                                         "also print the reference dimensionality at this variance");
    align_cmd->add_option("--out", align_out, "output report CSV");

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "ingredient regression and benchmark correlations");
    stats_cmd->fallthrough();
    std::string stats_ingredients, stats_alignments, stats_benchmarks, stats_predictors,
        stats_response = "alignment_r2";
    bool stats_no_standardize = false;
    auto* tc_ing = stats_cmd->add_option("--ingredients", stats_ingredients, "ingredient CSV");
    stats_cmd->add_option("--alignments", stats_alignments, "model_id,alignment_r2 CSV to join");
    stats_cmd->add_option("--benchmarks", stats_benchmarks, "model_id,benchmark,score CSV");
    stats_cmd->add_option("--predictors", stats_predictors, "comma list of fixed predictors");
    stats_cmd->add_option("--response", stats_response, "response column");
    stats_cmd->add_flag("--no-standardize", stats_no_standardize, "keep predictors on raw scale");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "synthetic recovery experiment");
    sim_cmd->fallthrough();
    int sim_n = 64, sim_d = 5;
    std::string sim_budgets = "480,960,1920,3840,7680";
    std::string sim_noise = "deterministic";
    double sim_scale = 1.0;
    std::string sim_seeds = "0,1,2";
    std::string sim_out;
    bool sim_slope = false;
    FitConfig sim_fit;
    auto* mc_n = sim_cmd->add_option("--n", sim_n, "items");
    auto* mc_d = sim_cmd->add_option("--d", sim_d, "dimension");
    auto* mc_budgets = sim_cmd->add_option("--budgets", sim_budgets, "comma list, increasing");
    auto* mc_noise = sim_cmd->add_option("--noise", sim_noise, "deterministic | logistic");
    auto* mc_scale = sim_cmd->add_option("--scale", sim_scale, "logistic temperature");
    auto* mc_seeds = sim_cmd->add_option("--seeds", sim_seeds, "comma list of seeds");
    auto* mc_epochs = sim_cmd->add_option("--epochs", sim_fit.epochs, "fit epochs");
    auto* mc_lr = sim_cmd->add_option("--lr", sim_fit.learning_rate, "fit learning rate");
    sim_cmd->add_flag("--slope", sim_slope, "print the log-log scaling slope");
    sim_cmd->add_option("--out", sim_out, "output curve CSV");

    // report
    auto* report_cmd = app.add_subcommand("report", "per-stage alignment averages");
    report_cmd->fallthrough();
    std::string report_table, report_out;
    auto* rc_table = report_cmd->add_option("--stage-table", report_table, "stage table CSV");
    report_cmd->add_option("--out", report_out, "output CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        std::error_code ec;
        fs::create_directories(g.out_dir, ec);
        if (*sample_cmd) {
            const json cfg = load_config_file(g.config_path, "sample");
            overlay(cfg, "concepts", sc_concepts, sample_concepts);
            overlay(cfg, "n_trials", sc_n, sample_n);
            overlay(cfg, "dim", sc_dim, sample_dim);
            overlay(cfg, "oversample", sc_over, sample_oversample);
            overlay(cfg, "seed", g.seed_opt, g.seed);
            if (sample_concepts.empty()) fail("MalformedConfig", "sample needs --concepts");
            return run_sample(g, cfg, sample_concepts, sample_n, sc_n, sample_dim, sc_dim,
                              sample_oversample, sample_out);
        }
        if (*collect_cmd) {
            const json cfg = load_config_file(g.config_path, "collect");
            overlay(cfg, "concepts", cc_concepts, collect_concepts);
            overlay(cfg, "trials", cc_trials, collect_trials);
            overlay(cfg, "endpoint", cc_endpoint, endpoint.base_url);
            overlay(cfg, "model", cc_model, endpoint.model_name);
            overlay(cfg, "max_in_flight", cc_flight, endpoint.max_in_flight);
            overlay(cfg, "timeout", cc_timeout, endpoint.request_timeout_s);
            overlay(cfg, "max_retries", cc_retries, endpoint.max_retries);
            overlay(cfg, "transport_attempts", cc_attempts, endpoint.transport_attempts);
            overlay(cfg, "backoff_base", cc_base, endpoint.backoff_base_s);
            overlay(cfg, "backoff_cap", cc_cap, endpoint.backoff_cap_s);
            if (collect_concepts.empty() || collect_trials.empty() || endpoint.base_url.empty() ||
                endpoint.model_name.empty()) {
                fail("MalformedConfig", "collect needs --concepts, --trials, --endpoint, --model");
            }
            return run_collect(g, cfg, collect_concepts, collect_trials, collect_log, endpoint,
                               collect_base_model);
        }
        if (*ord_cmd) {
            const json cfg = load_config_file(g.config_path, "fit-ordinal");
            overlay(cfg, "log", oc_log, ord_log);
            overlay(cfg, "concepts", oc_concepts, ord_concepts);
            overlay(cfg, "dim", oc_dim, ord_cfg.dimension);
            overlay(cfg, "lr", oc_lr, ord_cfg.learning_rate);
            overlay(cfg, "epochs", oc_epochs, ord_cfg.epochs);
            overlay(cfg, "batch", oc_batch, ord_cfg.batch_size);
            overlay(cfg, "holdout", oc_holdout, ord_cfg.holdout_fraction);
            overlay(cfg, "seed", g.seed_opt, ord_cfg.seed);
            if (ord_log.empty() || ord_concepts.empty()) {
                fail("MalformedConfig", "fit-ordinal needs --log and --concepts");
            }
            return run_fit_ordinal(g, cfg, ord_log, ord_concepts, ord_cfg, ord_out);
        }
        if (*spose_cmd) {
            const json cfg = load_config_file(g.config_path, "fit-spose");
            overlay(cfg, "log", pc_log, spose_log);
            overlay(cfg, "concepts", pc_concepts, spose_concepts);
            overlay(cfg, "dim", pc_dim, spose_cfg.dimension);
            overlay(cfg, "lambda", pc_lambda, spose_cfg.lambda);
            overlay(cfg, "lr", pc_lr, spose_cfg.learning_rate);
            overlay(cfg, "epochs", pc_epochs, spose_cfg.epochs);
            overlay(cfg, "batch", pc_batch, spose_cfg.batch_size);
            overlay(cfg, "holdout", pc_holdout, spose_cfg.holdout_fraction);
            overlay(cfg, "seed", g.seed_opt, spose_cfg.seed);
            if (spose_log.empty() || spose_concepts.empty()) {
                fail("MalformedConfig", "fit-spose needs --log and --concepts");
            }
            return run_fit_spose(g, cfg, spose_log, spose_concepts, spose_cfg, spose_grid, spose_out);
        }
        if (*align_cmd) {
            const json cfg = load_config_file(g.config_path, "align");
            overlay(cfg, "model", ac_model, align_model);
            overlay(cfg, "human", ac_human, align_human);
            overlay(cfg, "dim_threshold", ac_thr, align_threshold);
            if (align_model.empty() || align_human.empty()) {
                fail("MalformedConfig", "align needs --model and --human");
            }
            return run_align(g, cfg, align_model, align_human, align_id, align_threshold, ac_thr,
                             align_out);
        }
        if (*stats_cmd) {
            const json cfg = load_config_file(g.config_path, "stats");
            overlay(cfg, "ingredients", tc_ing, stats_ingredients);
            if (stats_ingredients.empty()) fail("MalformedConfig", "stats needs --ingredients");
            return run_stats(g, cfg, stats_ingredients, stats_alignments, stats_benchmarks,
                             stats_predictors, stats_response, stats_no_standardize);
        }
        if (*sim_cmd) {
            const json cfg = load_config_file(g.config_path, "simulate");
            overlay(cfg, "n", mc_n, sim_n);
            overlay(cfg, "d", mc_d, sim_d);
            overlay(cfg, "budgets", mc_budgets, sim_budgets);
            overlay(cfg, "noise", mc_noise, sim_noise);
            overlay(cfg, "scale", mc_scale, sim_scale);
            overlay(cfg, "seeds", mc_seeds, sim_seeds);
            overlay(cfg, "epochs", mc_epochs, sim_fit.epochs);
            overlay(cfg, "lr", mc_lr, sim_fit.learning_rate);
            return run_simulate(g, cfg, sim_n, sim_d, sim_budgets, sim_noise, sim_scale, sim_seeds,
                                sim_fit, sim_slope, sim_out);
        }
        if (*report_cmd) {
            const json cfg = load_config_file(g.config_path, "report");
            overlay(cfg, "stage_table", rc_table, report_table);
            if (report_table.empty()) fail("MalformedConfig", "report needs --stage-table");
            return run_report(g, cfg, report_table, report_out);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: Internal: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
