#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tripalign/registry.hpp"

namespace tripalign {

/// One anchored comparison: which of option_a / option_b is most similar to
/// the anchor.
struct TripletTrial {
    int trial_id = 0;
    int anchor = 0;
    int option_a = 0;
    int option_b = 0;
};

enum class Choice { OptionA, OptionB };

struct Judgment {
    TripletTrial trial;
    std::optional<Choice> choice;   // set iff valid
    std::string raw_response;       // always retained for audit
    std::string model_id;
    bool valid = false;
};

/// "i is closer to j than to k".
struct OrdinalConstraint {
    int i = 0;
    int j = 0;
    int k = 0;
};

/// Equivalent odd-one-out framing: the chosen pair is the most similar pair
/// of the triple; the remaining item is the odd one out.
struct OddOneOutJudgment {
    int first = 0, second = 0, third = 0;   // the unordered triple, sorted
    int pair_a = 0, pair_b = 0;             // chosen pair, sorted; subset of the triple
};

struct PromptBundle {
    std::string system;
    std::string user;
};

/// Uniform over all C(n,3) unordered triples (with replacement across the
/// budget); anchor position and option order are uniform. Deterministic
/// given seed.
std::vector<TripletTrial> sample_trials(const ConceptSet& set, int count, std::uint64_t seed);

/// ceil(oversample * n * d * log2(n)): the triplet budget needed for an
/// n-item, rank-d embedding from random comparisons.
long long required_judgment_count(int n, int d, double oversample);

PromptBundle render_prompt(const TripletTrial& trial, const ConceptSet& set, bool base_model);

/// Normalizes the response (lowercase, punctuation stripped) and looks for
/// exactly one option name as a whole-word match. Anything else is an
/// invalid judgment, not an error.
Judgment parse_response(const std::string& text, const TripletTrial& trial,
                        const ConceptSet& set, const std::string& model_id = "");

OrdinalConstraint to_constraint(const Judgment& j);

OddOneOutJudgment anchored_to_odd_one_out(const Judgment& j);

std::vector<OrdinalConstraint> to_constraints(const std::vector<Judgment>& judgments);

// JSONL records, one per line:
//   {"trial_id":..,"anchor":..,"a":..,"b":..,"choice":"A"|"B"|null,"raw":"..","model":".."}
std::string trial_to_jsonl(const TripletTrial& t);
std::string judgment_to_jsonl(const Judgment& j);
Judgment judgment_from_jsonl(const std::string& line);

void save_trials(const std::vector<TripletTrial>& trials, const std::string& path);
std::vector<TripletTrial> load_trials(const std::string& path);

void save_judgments(const std::vector<Judgment>& judgments, const std::string& path);
std::vector<Judgment> load_judgments(const std::string& path);

}  // namespace tripalign
