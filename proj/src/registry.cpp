#include "tripalign/registry.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "tripalign/csv.hpp"
#include "tripalign/error.hpp"

namespace tripalign {

namespace {

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

ConceptSet::ConceptSet(std::vector<std::string> names, std::string source_tag)
    : source_tag_(std::move(source_tag)) {
    concepts_.reserve(names.size());
    for (auto& raw : names) {
        std::string name = to_lower(trim(raw));
        if (name.empty()) fail("EmptyName", "concept name is empty");
        auto [it, inserted] = index_.emplace(name, static_cast<int>(concepts_.size()));
        if (!inserted) fail("DuplicateName", "duplicate concept name: " + name);
        concepts_.push_back({static_cast<int>(concepts_.size()), name});
    }
    if (concepts_.empty()) fail("EmptyConceptSet", "concept set has no entries");
    if (concepts_.size() < 3)
        fail("ConceptSetTooSmall", "need at least 3 concepts for a triplet, got " +
                                       std::to_string(concepts_.size()));
}

const std::string& ConceptSet::name(int id) const {
    if (id < 0 || id >= size())
        fail("IdOutOfRange", "concept id " + std::to_string(id) + " not in [0, " +
                                 std::to_string(size()) + ")");
    return concepts_[static_cast<std::size_t>(id)].name;
}

std::optional<int> ConceptSet::id_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> ConceptSet::names() const {
    std::vector<std::string> out;
    out.reserve(concepts_.size());
    for (const auto& c : concepts_) out.push_back(c.name);
    return out;
}

ConceptSet load_concept_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("FileNotFound", "cannot open " + path);
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (!t.empty()) names.push_back(t);
    }
    if (names.empty()) fail("EmptyConceptSet", path + " contains no concept names");
    return ConceptSet(std::move(names), path);
}

void save_concept_set(const ConceptSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("FileNotFound", "cannot write " + path);
    for (const auto& c : set.concepts()) out << c.name << '\n';
}

std::string to_string(Stage s) {
    switch (s) {
        case Stage::BaseStage1: return "base-stage1";
        case Stage::Base: return "base";
        case Stage::Sft: return "sft";
        case Stage::Dpo: return "dpo";
        case Stage::Rlvr: return "rlvr";
        case Stage::Instruct: return "instruct";
    }
    fail("InternalError", "unhandled stage");
}

Stage stage_from_string(const std::string& s) {
    const std::string v = to_lower(trim(s));
    if (v == "base-stage1" || v == "base stage 1") return Stage::BaseStage1;
    if (v == "base") return Stage::Base;
    if (v == "sft") return Stage::Sft;
    if (v == "dpo") return Stage::Dpo;
    if (v == "rlvr") return Stage::Rlvr;
    if (v == "instruct") return Stage::Instruct;
    fail("UnknownStage", "unknown post-training stage: " + s);
}

std::optional<double> ModelCard::predictor(const std::string& column) const {
    auto as_num = [](const std::optional<bool>& b) -> std::optional<double> {
        if (!b) return std::nullopt;
        return *b ? 1.0 : 0.0;
    };
    if (column == "instruction_tuned") return as_num(instruction_tuned);
    if (column == "multimodal") return as_num(multimodal);
    if (column == "param_count") return param_count;
    if (column == "layer_count") return layer_count;
    if (column == "head_count") return head_count;
    if (column == "attention_dim") return attention_dim;
    if (column == "embedding_dim") return embedding_dim;
    if (column == "mlp_dim") return mlp_dim;
    if (column == "context_length") return context_length;
    if (column == "vocab_size") return vocab_size;
    if (column == "training_tokens") return training_tokens;
    fail("UnknownColumn", "not a numeric ModelCard predictor: " + column);
}

namespace {

const std::set<std::string> kKnownColumns = {
    "model_id",      "family",        "instruction_tuned", "multimodal",
    "param_count",   "layer_count",   "head_count",        "attention_dim",
    "embedding_dim", "mlp_dim",       "context_length",    "vocab_size",
    "training_tokens", "activation_fn", "post_training_stage", "alignment_r2"};

std::optional<double> parse_count(const std::string& cell, const std::string& column) {
    const std::string v = trim(cell);
    if (v.empty() || v == "na" || v == "NA" || v == "null") return std::nullopt;
    std::size_t pos = 0;
    double num = 0.0;
    try {
        num = std::stod(v, &pos);
    } catch (const std::exception&) {
        fail("NonNumericField", column + ": cannot parse '" + cell + "'");
    }
    if (pos != v.size()) fail("NonNumericField", column + ": cannot parse '" + cell + "'");
    if (num < 0.0) fail("NegativeCount", column + " must be nonnegative, got " + v);
    return num;
}

std::optional<bool> parse_bool(const std::string& cell, const std::string& column) {
    const std::string v = to_lower(trim(cell));
    if (v.empty() || v == "na" || v == "null") return std::nullopt;
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    fail("NonNumericField", column + ": cannot parse boolean '" + cell + "'");
}

IngredientTable load_table_impl(const std::string& path,
                                const std::map<std::string, double>* alignments,
                                bool alignment_from_column) {
    const csv::Table t = csv::read_file(path);
    for (const auto& col : t.header)
        if (!kKnownColumns.count(col)) fail("UnknownColumn", path + ": unknown column '" + col + "'");
    auto col_id = t.column("model_id");
    auto col_family = t.column("family");
    if (!col_id || !col_family)
        fail("MalformedCsv", path + ": model_id and family columns are required");
    auto col_align = t.column("alignment_r2");
    if (alignment_from_column && !col_align)
        fail("MalformedCsv", path + ": alignment_r2 column not present");

    IngredientTable table;
    std::set<std::string> seen;
    for (const auto& row : t.rows) {
        ModelCard card;
        card.model_id = trim(row[*col_id]);
        card.family = trim(row[*col_family]);
        if (card.model_id.empty()) fail("MalformedCsv", path + ": empty model_id");
        if (card.family.empty()) fail("MalformedCsv", path + ": empty family for " + card.model_id);
        if (!seen.insert(card.model_id).second)
            fail("DuplicateModel", path + ": duplicate model_id " + card.model_id);

        auto cell = [&](const char* name) -> std::optional<std::string> {
            auto c = t.column(name);
            if (!c) return std::nullopt;
            return row[*c];
        };
        if (auto v = cell("instruction_tuned")) card.instruction_tuned = parse_bool(*v, "instruction_tuned");
        if (auto v = cell("multimodal")) card.multimodal = parse_bool(*v, "multimodal");
        if (auto v = cell("param_count")) card.param_count = parse_count(*v, "param_count");
        if (auto v = cell("layer_count")) card.layer_count = parse_count(*v, "layer_count");
        if (auto v = cell("head_count")) card.head_count = parse_count(*v, "head_count");
        if (auto v = cell("attention_dim")) card.attention_dim = parse_count(*v, "attention_dim");
        if (auto v = cell("embedding_dim")) card.embedding_dim = parse_count(*v, "embedding_dim");
        if (auto v = cell("mlp_dim")) card.mlp_dim = parse_count(*v, "mlp_dim");
        if (auto v = cell("context_length")) card.context_length = parse_count(*v, "context_length");
        if (auto v = cell("vocab_size")) card.vocab_size = parse_count(*v, "vocab_size");
        if (auto v = cell("training_tokens")) card.training_tokens = parse_count(*v, "training_tokens");
        if (auto v = cell("activation_fn")) {
            const std::string a = to_lower(trim(*v));
            if (!a.empty()) card.activation_fn = a;
        }
        if (auto v = cell("post_training_stage")) {
            const std::string s = trim(*v);
            if (!s.empty()) card.post_training_stage = stage_from_string(s);
        }

        double alignment = 0.0;
        bool have_alignment = false;
        if (alignment_from_column) {
            const std::string v = trim(row[*col_align]);
            if (!v.empty()) {
                alignment = std::stod(v);
                have_alignment = true;
            }
        } else {
            auto it = alignments->find(card.model_id);
            if (it != alignments->end()) {
                alignment = it->second;
                have_alignment = true;
            }
        }
        if (!have_alignment) {
            ++table.dropped_without_alignment;
            continue;
        }
        table.rows.push_back({std::move(card), alignment, {}});
    }
    return table;
}

}  // namespace

IngredientTable load_ingredient_table(const std::string& path,
                                      const std::map<std::string, double>& alignments) {
    return load_table_impl(path, &alignments, false);
}

IngredientTable load_ingredient_table(const std::string& path) {
    return load_table_impl(path, nullptr, true);
}

std::map<std::string, std::map<std::string, double>> load_benchmark_scores(const std::string& path) {
    const csv::Table t = csv::read_file(path);
    auto col_id = t.column("model_id");
    auto col_bench = t.column("benchmark");
    auto col_score = t.column("score");
    if (!col_id || !col_bench || !col_score)
        fail("MalformedCsv", path + ": expected header model_id,benchmark,score");
    std::map<std::string, std::map<std::string, double>> out;
    for (const auto& row : t.rows) {
        double score = 0.0;
        try {
            score = std::stod(row[*col_score]);
        } catch (const std::exception&) {
            fail("NonNumericField", path + ": bad score '" + row[*col_score] + "'");
        }
        out[trim(row[*col_id])][trim(row[*col_bench])] = score;
    }
    return out;
}

void attach_benchmarks(IngredientTable& table,
                       const std::map<std::string, std::map<std::string, double>>& scores) {
    for (auto& row : table.rows) {
        auto it = scores.find(row.card.model_id);
        if (it != scores.end()) row.benchmarks = it->second;
    }
}

std::map<Stage, double> stage_averages(const IngredientTable& table) {
    std::map<Stage, std::pair<double, int>> acc;
    for (const auto& row : table.rows) {
        if (!row.card.post_training_stage)
            fail("MissingStage", "row " + row.card.model_id + " has no post_training_stage");
        auto& [sum, n] = acc[*row.card.post_training_stage];
        sum += row.alignment_r2;
        ++n;
    }
    std::map<Stage, double> out;
    for (const auto& [stage, sn] : acc)
        if (sn.second > 0) out[stage] = sn.first / sn.second;
    return out;
}

}  // namespace tripalign
