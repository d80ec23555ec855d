#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tripalign {

struct Concept {
    int id = 0;           // 0-based, contiguous, stable
    std::string name;     // lowercase, trimmed, unique within a set
};

/// Ordered concept list. Row order of every embedding built from a set is
/// exactly this order.
class ConceptSet {
public:
    ConceptSet() = default;
    ConceptSet(std::vector<std::string> names, std::string source_tag);

    int size() const { return static_cast<int>(concepts_.size()); }
    const std::vector<Concept>& concepts() const { return concepts_; }
    const std::string& name(int id) const;
    std::optional<int> id_of(const std::string& name) const;
    const std::string& source_tag() const { return source_tag_; }

    std::vector<std::string> names() const;

private:
    std::vector<Concept> concepts_;
    std::map<std::string, int> index_;
    std::string source_tag_;
};

/// Reads one concept name per line (UTF-8). Names are lowercased and
/// trimmed; internal spaces survive so multi-word concepts work.
ConceptSet load_concept_set(const std::string& path);

void save_concept_set(const ConceptSet& set, const std::string& path);

enum class Stage { BaseStage1, Base, Sft, Dpo, Rlvr, Instruct };

std::string to_string(Stage s);
Stage stage_from_string(const std::string& s);

/// Per-model computational-ingredient metadata. Numeric fields that a
/// metadata source does not report stay absent; they are never zero-filled.
struct ModelCard {
    std::string model_id;
    std::string family;
    std::optional<bool> instruction_tuned;
    std::optional<bool> multimodal;
    std::optional<double> param_count;
    std::optional<double> layer_count;
    std::optional<double> head_count;
    std::optional<double> attention_dim;
    std::optional<double> embedding_dim;
    std::optional<double> mlp_dim;
    std::optional<double> context_length;
    std::optional<double> vocab_size;
    std::optional<double> training_tokens;
    std::optional<std::string> activation_fn;
    std::optional<Stage> post_training_stage;

    /// Numeric predictor value by column name ({0,1} for the booleans).
    std::optional<double> predictor(const std::string& column) const;
};

struct IngredientRow {
    ModelCard card;
    double alignment_r2 = 0.0;
    std::map<std::string, double> benchmarks;
};

struct IngredientTable {
    std::vector<IngredientRow> rows;
    int dropped_without_alignment = 0;  // join warning count
};

/// Loads the ingredient CSV and joins alignment scores on model_id. Models
/// with no alignment entry are dropped and counted.
IngredientTable load_ingredient_table(const std::string& path,
                                      const std::map<std::string, double>& alignments);

/// Same, but alignment_r2 is taken from a column of the CSV itself.
IngredientTable load_ingredient_table(const std::string& path);

/// Benchmark scores CSV: model_id,benchmark,score.
std::map<std::string, std::map<std::string, double>> load_benchmark_scores(const std::string& path);

/// Attaches benchmark scores to matching rows (models absent from the map
/// simply keep an empty score set).
void attach_benchmarks(IngredientTable& table,
                       const std::map<std::string, std::map<std::string, double>>& scores);

/// Mean alignment per post-training stage. Every row must carry a stage;
/// there is no rounding here (display formats to 3 d.p.).
std::map<Stage, double> stage_averages(const IngredientTable& table);

}  // namespace tripalign
