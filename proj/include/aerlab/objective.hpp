#pragma once

#include <vector>

#include "aerlab/rollout.hpp"

namespace aerlab {

struct ObjectiveConfig {
    double clip_low = 0.2;  // epsilon_l
    double clip_high = 0.2; // epsilon_h
    double kl_beta = 0.0;   // beta >= 0

    void validate() const;
};

// A flattened (question, response) batch: the unit the objective averages
// over. Built from whole groups (full-batch semantics of the objective) or
// from a subset of pair indices (minibatching); each item carries the
// advantage and entropy coefficient fixed at rollout time.
struct ObjectiveBatch {
    struct Item {
        const Question* question = nullptr;
        const Response* response = nullptr;
        double advantage = 0.0;
        double lambda = 0.0;
    };
    std::vector<Item> items;

    int size() const { return static_cast<int>(items.size()); }
};

// One lambda per group, aligned with `groups`.
ObjectiveBatch make_batch(const std::vector<RolloutGroup>& groups,
                          const std::vector<double>& lambdas);
ObjectiveBatch make_batch(const std::vector<RolloutGroup>& groups,
                          const std::vector<double>& lambdas,
                          const std::vector<std::pair<int, int>>& pair_indices);

struct TermValue {
    double value = 0.0;
    std::vector<double> gradient; // d value / d theta, length param_count
};

// Clipped importance-ratio surrogate, mean over items of
// (1/|o|) sum_l min(w * A, clip(w, 1-eps_l, 1+eps_h) * A). Ratios come from
// the old-policy log-probs stored in each response; tokens resolved to the
// clipped branch contribute zero gradient.
TermValue grpo_surrogate(const PolicyParams& params, const ObjectiveBatch& batch,
                         const ObjectiveConfig& config);

// Exact full-vocabulary KL(pi_theta || pi_ref) averaged per token per response.
// Returns the raw KL term; the total objective weights it by -beta.
TermValue kl_penalty(const PolicyParams& params, const PolicyParams& ref_params,
                     const ObjectiveBatch& batch);

// Mean over items of lambda_q * sequence_entropy(response) under the current
// params at the sampled prefixes. Throws on negative lambda.
TermValue entropy_bonus(const PolicyParams& params, const ObjectiveBatch& batch);

struct ObjectiveReport {
    double surrogate = 0.0;
    double kl = 0.0;             // raw KL value; 0.0 when beta == 0 (term skipped)
    double entropy_bonus = 0.0;  // already lambda-weighted
    double total = 0.0;          // surrogate - beta*kl + entropy_bonus
    std::vector<double> gradient;
    std::vector<double> lambdas; // per-group lambdas as supplied
};

// Assembles J = surrogate - beta*KL + entropy bonus with its exact gradient.
// `old_params` is the frozen rollout policy (ratios use the stored log-probs;
// the parameter documents the contract and backs debug checks).
ObjectiveReport total_objective(const PolicyParams& params, const PolicyParams& old_params,
                                const PolicyParams& ref_params,
                                const std::vector<RolloutGroup>& groups,
                                const std::vector<double>& lambdas,
                                const ObjectiveConfig& config);

// Minibatch variant over a flattened batch view.
ObjectiveReport total_objective(const PolicyParams& params, const PolicyParams& old_params,
                                const PolicyParams& ref_params, const ObjectiveBatch& batch,
                                const ObjectiveConfig& config);

} // namespace aerlab
