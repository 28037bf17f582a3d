#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "aerlab/tasks.hpp"

namespace aerlab {

// Unbiased pass@k estimator: 1 - C(n-c, k) / C(n, k), evaluated as a
// telescoping product so large n never overflows.
double pass_at_k(int n, int c, int k);

// Aggregated evaluation over a question set: per-tier and overall pass@k.
struct EvalReport {
    struct TierStats {
        std::string task;       // task kind name
        int tier = 0;
        int questions = 0;
        std::vector<double> pass_rates; // aligned with k_values
    };

    int samples_per_question = 0;       // n
    std::vector<int> k_values;
    std::vector<TierStats> tiers;
    std::vector<double> aggregate_pass; // aligned with k_values, mean over all questions
    double mean_response_length = 0.0;
    double mean_entropy = 0.0;          // token-weighted over all eval samples

    double pass1() const;
    double pass_at(int k) const;        // aggregate; throws if k not configured

    void write_json(std::ostream& out) const;
    // One row per k: k,<run-or-tier columns>; layout used by the pass@k plots.
    void write_passk_csv(std::ostream& out) const;
};

// Samples n responses per question at the given temperature, verifies each,
// and averages pass@k over questions. Per-question sub-streams are derived
// up-front from `rng`, so question order does not couple the randomness.
EvalReport evaluate(const PolicyParams& params, const TaskLibrary& lib,
                    const std::vector<Question>& questions, int n,
                    const std::vector<int>& k_values, int max_len, RngStream& rng,
                    double temperature = 1.0);

} // namespace aerlab
