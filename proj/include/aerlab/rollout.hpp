#pragma once

#include <vector>

#include "aerlab/policy.hpp"
#include "aerlab/tasks.hpp"

namespace aerlab {

// G responses to one question sampled from the frozen old policy, with
// verifier rewards, group accuracy and normalized advantages. Old-policy
// per-token log-probs live in each Response.
struct RolloutGroup {
    Question question;
    std::vector<Response> responses;
    std::vector<int> rewards;
    double group_accuracy = 0.0;
    std::vector<double> advantages;

    int size() const { return static_cast<int>(responses.size()); }
    int token_count() const;
};

// (r_i - mean) / max(population std, 1e-6); all-equal rewards give zeros.
std::vector<double> normalize_advantages(const std::vector<int>& rewards);

RolloutGroup collect_group(const PolicyParams& old_params, const TaskLibrary& lib,
                           Question question, int group_size, int max_len, RngStream& rng);

} // namespace aerlab
