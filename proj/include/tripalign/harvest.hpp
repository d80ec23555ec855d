#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tripalign/registry.hpp"
#include "tripalign/triplets.hpp"

namespace tripalign {

struct EndpointConfig {
    std::string base_url;                  // scheme://host[:port][/prefix]
    std::string model_name;
    std::optional<std::string> api_key;    // sent as Authorization: Bearer
    int max_in_flight = 4;
    double request_timeout_s = 30.0;
    int max_retries = 3;                   // invalid-parse retries per trial
    nlohmann::json sampling = nlohmann::json::object();   // merged into the request body

    // Transport-level retry policy. Tests shrink the delays.
    int transport_attempts = 5;
    double backoff_base_s = 1.0;
    double backoff_cap_s = 60.0;
};

struct HarvestSession {
    ConceptSet concepts;
    std::vector<TripletTrial> trials;
    std::string log_path;
    std::set<int> completed;               // trial ids with a durable log line
    int budget = 0;
    bool base_model = false;               // completion-style prompt framing
};

struct HarvestSummary {
    int valid = 0;
    int invalid = 0;
    int retried = 0;                       // extra attempts spent on invalid parses
};

/// Sends every not-yet-completed trial to {base_url}/chat/completions with at
/// most max_in_flight requests in flight. Each record is appended and flushed
/// to the log before the trial is marked complete, so a crash at any point
/// loses no completed work. Invalid parses are retried with the identical
/// prompt up to max_retries, then logged invalid. Transport errors back off
/// exponentially with jitter; auth failures halt immediately.
HarvestSummary harvest(HarvestSession& session, const EndpointConfig& cfg);

/// Rebuilds session state from the log. A truncated trailing line (no
/// newline) is discarded; a malformed interior line or an unknown trial_id
/// is an error.
HarvestSession resume(const std::string& log_path, const std::vector<TripletTrial>& trials);

}  // namespace tripalign
