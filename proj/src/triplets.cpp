#include "tripalign/triplets.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tripalign/error.hpp"
#include "tripalign/rng.hpp"

namespace tripalign {

using nlohmann::json;

std::vector<TripletTrial> sample_trials(const ConceptSet& set, int count, std::uint64_t seed) {
    const int n = set.size();
    if (n < 3) fail("ConceptSetTooSmall", "need at least 3 concepts to sample triplets");
    if (count <= 0) fail("InvalidCount", "trial count must be positive, got " + std::to_string(count));

    // A uniformly random ordered triple of distinct items gives, at once, a
    // uniform unordered triple, a uniform anchor position, and a uniform
    // option order.
    Rng rng(seed);
    std::vector<TripletTrial> trials;
    trials.reserve(static_cast<std::size_t>(count));
    for (int t = 0; t < count; ++t) {
        int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        int b = a, c = a;
        while (b == a) b = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        while (c == a || c == b) c = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        trials.push_back({t, a, b, c});
    }
    return trials;
}

long long required_judgment_count(int n, int d, double oversample) {
    if (n < 2) fail("InvalidCount", "need n >= 2 items");
    if (d < 1) fail("InvalidCount", "need d >= 1");
    if (oversample < 1.0) fail("InvalidCount", "oversample must be >= 1");
    const double v = oversample * static_cast<double>(n) * static_cast<double>(d) *
                     std::log2(static_cast<double>(n));
    return static_cast<long long>(std::ceil(v));
}

PromptBundle render_prompt(const TripletTrial& trial, const ConceptSet& set, bool base_model) {
    PromptBundle p;
    p.system = "You are a helpful assistant who gives responses to questions";
    p.user = "QUESTION: Which item is most similar to " + set.name(trial.anchor) + ": " +
             set.name(trial.option_a) + " or " + set.name(trial.option_b) +
             "? Respond only with the item name.";
    if (base_model) p.user += "\nAnswer:";
    return p;
}

namespace {

/// Lowercase, punctuation to spaces, collapse runs; result is a token list.
std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

bool contains_phrase(const std::vector<std::string>& tokens, const std::vector<std::string>& phrase) {
    if (phrase.empty() || tokens.size() < phrase.size()) return false;
    for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
        bool match = true;
        for (std::size_t j = 0; j < phrase.size(); ++j) {
            if (tokens[i + j] != phrase[j]) {
                match = false;
                break;
            }
        }
        if (match) return true;
    }
    return false;
}

}  // namespace

Judgment parse_response(const std::string& text, const TripletTrial& trial,
                        const ConceptSet& set, const std::string& model_id) {
    Judgment j;
    j.trial = trial;
    j.raw_response = text;
    j.model_id = model_id;

    const auto tokens = tokenize(text);
    const bool has_a = contains_phrase(tokens, tokenize(set.name(trial.option_a)));
    const bool has_b = contains_phrase(tokens, tokenize(set.name(trial.option_b)));
    if (has_a == has_b) {
        // Neither option named, or both: ambiguous, kept for audit.
        j.valid = false;
        return j;
    }
    j.choice = has_a ? Choice::OptionA : Choice::OptionB;
    j.valid = true;
    return j;
}

OrdinalConstraint to_constraint(const Judgment& j) {
    if (!j.valid || !j.choice) fail("InvalidJudgment", "cannot derive a constraint from an invalid judgment");
    const bool chose_a = *j.choice == Choice::OptionA;
    return {j.trial.anchor, chose_a ? j.trial.option_a : j.trial.option_b,
            chose_a ? j.trial.option_b : j.trial.option_a};
}

OddOneOutJudgment anchored_to_odd_one_out(const Judgment& j) {
    if (!j.valid || !j.choice) fail("InvalidJudgment", "cannot convert an invalid judgment");
    const int chosen = (*j.choice == Choice::OptionA) ? j.trial.option_a : j.trial.option_b;
    OddOneOutJudgment o;
    int triple[3] = {j.trial.anchor, j.trial.option_a, j.trial.option_b};
    std::sort(std::begin(triple), std::end(triple));
    o.first = triple[0];
    o.second = triple[1];
    o.third = triple[2];
    o.pair_a = std::min(j.trial.anchor, chosen);
    o.pair_b = std::max(j.trial.anchor, chosen);
    return o;
}

std::vector<OrdinalConstraint> to_constraints(const std::vector<Judgment>& judgments) {
    std::vector<OrdinalConstraint> out;
    out.reserve(judgments.size());
    for (const auto& j : judgments)
        if (j.valid) out.push_back(to_constraint(j));
    return out;
}

std::string trial_to_jsonl(const TripletTrial& t) {
    json rec = {{"trial_id", t.trial_id}, {"anchor", t.anchor}, {"a", t.option_a}, {"b", t.option_b}};
    return rec.dump();
}

std::string judgment_to_jsonl(const Judgment& j) {
    json rec = {{"trial_id", j.trial.trial_id},
                {"anchor", j.trial.anchor},
                {"a", j.trial.option_a},
                {"b", j.trial.option_b},
                {"choice", nullptr},
                {"raw", j.raw_response},
                {"model", j.model_id}};
    if (j.valid && j.choice) rec["choice"] = (*j.choice == Choice::OptionA) ? "A" : "B";
    return rec.dump();
}

Judgment judgment_from_jsonl(const std::string& line) {
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
        fail("MalformedLog", "log line is not a JSON object");
    }
    Judgment j;
    try {
        j.trial.trial_id = rec.at("trial_id").get<int>();
        j.trial.anchor = rec.at("anchor").get<int>();
        j.trial.option_a = rec.at("a").get<int>();
        j.trial.option_b = rec.at("b").get<int>();
        j.raw_response = rec.value("raw", "");
        j.model_id = rec.value("model", "");
        if (rec.contains("choice") && !rec.at("choice").is_null()) {
            const std::string c = rec.at("choice").get<std::string>();
            if (c == "A") j.choice = Choice::OptionA;
            else if (c == "B") j.choice = Choice::OptionB;
            else fail("MalformedLog", "unknown choice value '" + c + "'");
            j.valid = true;
        }
    } catch (const json::exception& e) {
        fail("MalformedLog", std::string("bad judgment record: ") + e.what());
    }
    return j;
}

void save_trials(const std::vector<TripletTrial>& trials, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("FileNotFound", "cannot write " + path);
    for (const auto& t : trials) out << trial_to_jsonl(t) << '\n';
}

std::vector<TripletTrial> load_trials(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("FileNotFound", "cannot open " + path);
    std::vector<TripletTrial> trials;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            fail("MalformedLog", path + ": " + e.what());
        }
        trials.push_back({rec.at("trial_id").get<int>(), rec.at("anchor").get<int>(),
                          rec.at("a").get<int>(), rec.at("b").get<int>()});
    }
    return trials;
}

void save_judgments(const std::vector<Judgment>& judgments, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("FileNotFound", "cannot write " + path);
    for (const auto& j : judgments) out << judgment_to_jsonl(j) << '\n';
}

std::vector<Judgment> load_judgments(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("FileNotFound", "cannot open " + path);
    std::vector<Judgment> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(judgment_from_jsonl(line));
    }
    return out;
}

}  // namespace tripalign
