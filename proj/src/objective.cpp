#include "aerlab/objective.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace aerlab {

void ObjectiveConfig::validate() const {
    if (!(clip_low > 0.0 && clip_low < 1.0) || !(clip_high > 0.0 && clip_high < 1.0)) {
        throw config_error("clip ratios must lie in (0,1)");
    }
    if (kl_beta < 0.0) {
        throw config_error("kl beta must be >= 0");
    }
}

ObjectiveBatch make_batch(const std::vector<RolloutGroup>& groups,
                          const std::vector<double>& lambdas) {
    if (lambdas.size() != groups.size()) {
        throw contract_error("make_batch: one lambda per group required");
    }
    ObjectiveBatch batch;
    for (std::size_t q = 0; q < groups.size(); ++q) {
        for (int i = 0; i < groups[q].size(); ++i) {
            batch.items.push_back({&groups[q].question, &groups[q].responses[i],
                                   groups[q].advantages[i], lambdas[q]});
        }
    }
    return batch;
}

ObjectiveBatch make_batch(const std::vector<RolloutGroup>& groups,
                          const std::vector<double>& lambdas,
                          const std::vector<std::pair<int, int>>& pair_indices) {
    if (lambdas.size() != groups.size()) {
        throw contract_error("make_batch: one lambda per group required");
    }
    ObjectiveBatch batch;
    for (const auto& [q, i] : pair_indices) {
        const RolloutGroup& group = groups[q];
        batch.items.push_back({&group.question, &group.responses[i], group.advantages[i],
                               lambdas[q]});
    }
    return batch;
}

namespace {

// Internal accumulator: one shared forward per token, per-term dlogits and
// separate gradients so the standalone ops and the fused total agree exactly.
struct TermAccumulator {
    bool want_surrogate = false;
    bool want_kl = false;
    bool want_entropy = false;

    double surrogate = 0.0;
    double kl = 0.0;
    double entropy = 0.0;
    std::vector<double> grad_surrogate;
    std::vector<double> grad_kl;
    std::vector<double> grad_entropy;
};

void accumulate(const PolicyParams& params, const PolicyParams* ref_params,
                const ObjectiveBatch& batch, const ObjectiveConfig& config,
                TermAccumulator& acc) {
    const PolicyShape& shape = params.shape;
    const int pad = Vocab{shape.vocab}.pad();
    const int p_count = shape.param_count();
    if (acc.want_surrogate) {
        acc.grad_surrogate.assign(p_count, 0.0);
    }
    if (acc.want_kl) {
        acc.grad_kl.assign(p_count, 0.0);
    }
    if (acc.want_entropy) {
        acc.grad_entropy.assign(p_count, 0.0);
    }
    if (batch.items.empty()) {
        throw data_error("objective: empty batch");
    }

    const double inv_items = 1.0 / batch.size();
    std::vector<double> dlogits(shape.vocab);

    for (const ObjectiveBatch::Item& item : batch.items) {
        const Response& response = *item.response;
        if (response.length() == 0) {
            throw data_error("objective: empty response in batch");
        }
        if (static_cast<int>(response.logprobs.size()) != response.length()) {
            throw data_error("objective: response is missing old-policy log-probs");
        }
        if (acc.want_entropy && item.lambda < 0.0) {
            throw contract_error("entropy_bonus: negative lambda");
        }
        const double inv_len = 1.0 / response.length();

        for (int l = 0; l < response.length(); ++l) {
            const auto window = window_at(response.tokens, l, shape.window, pad);
            const StepTrace trace = forward_trace(params, item.question->encoding, window);
            const int token = response.tokens[l];

            if (acc.want_surrogate) {
                const double logprob_now = std::log(trace.dist.probs[token]);
                const double ratio = std::exp(logprob_now - response.logprobs[l]);
                const double clipped =
                    std::clamp(ratio, 1.0 - config.clip_low, 1.0 + config.clip_high);
                const double adv = item.advantage;
                const double unclipped_term = ratio * adv;
                const double clipped_term = clipped * adv;
                acc.surrogate += inv_items * inv_len * std::min(unclipped_term, clipped_term);
                // Gradient flows only when the unclipped branch attains the min
                // (ties included: there the clip is inactive anyway).
                if (unclipped_term <= clipped_term && adv != 0.0) {
                    const double coeff = inv_items * inv_len * adv * ratio;
                    for (int j = 0; j < shape.vocab; ++j) {
                        dlogits[j] = -coeff * trace.dist.probs[j];
                    }
                    dlogits[token] += coeff;
                    backprop_logits(params, item.question->encoding, trace, dlogits,
                                    acc.grad_surrogate);
                }
            }

            if (acc.want_kl) {
                const TokenDistribution ref_dist =
                    forward(*ref_params, item.question->encoding, window);
                const double kl_l = distribution_kl(trace.dist, ref_dist);
                acc.kl += inv_items * inv_len * kl_l;
                // dKL/dlogit_j = p_j ((ln p_j - ln q_j) - KL)
                const double coeff = inv_items * inv_len;
                for (int j = 0; j < shape.vocab; ++j) {
                    const double log_ratio =
                        std::log(trace.dist.probs[j]) - std::log(ref_dist.probs[j]);
                    dlogits[j] = coeff * trace.dist.probs[j] * (log_ratio - kl_l);
                }
                backprop_logits(params, item.question->encoding, trace, dlogits,
                                acc.grad_kl);
            }

            if (acc.want_entropy && item.lambda != 0.0) {
                acc.entropy += inv_items * inv_len * item.lambda * token_entropy(trace.dist);
                entropy_dlogits(trace.dist, inv_items * inv_len * item.lambda, dlogits);
                backprop_logits(params, item.question->encoding, trace, dlogits,
                                acc.grad_entropy);
            }
        }
    }
}

} // namespace

TermValue grpo_surrogate(const PolicyParams& params, const ObjectiveBatch& batch,
                         const ObjectiveConfig& config) {
    config.validate();
    TermAccumulator acc;
    acc.want_surrogate = true;
    accumulate(params, nullptr, batch, config, acc);
    return {acc.surrogate, std::move(acc.grad_surrogate)};
}

TermValue kl_penalty(const PolicyParams& params, const PolicyParams& ref_params,
                     const ObjectiveBatch& batch) {
    TermAccumulator acc;
    acc.want_kl = true;
    accumulate(params, &ref_params, batch, ObjectiveConfig{}, acc);
    return {acc.kl, std::move(acc.grad_kl)};
}

TermValue entropy_bonus(const PolicyParams& params, const ObjectiveBatch& batch) {
    TermAccumulator acc;
    acc.want_entropy = true;
    accumulate(params, nullptr, batch, ObjectiveConfig{}, acc);
    return {acc.entropy, std::move(acc.grad_entropy)};
}

ObjectiveReport total_objective(const PolicyParams& params, const PolicyParams& old_params,
                                const PolicyParams& ref_params, const ObjectiveBatch& batch,
                                const ObjectiveConfig& config) {
    config.validate();
    if (params.shape != old_params.shape || params.shape != ref_params.shape) {
        throw config_error("total_objective: parameter shape mismatch");
    }
#ifndef NDEBUG
    // The stored log-probs must come from old_params; spot-check one token.
    if (!batch.items.empty()) {
        const auto& item = batch.items.front();
        const auto window =
            window_at(item.response->tokens, 0, params.shape.window, Vocab{params.shape.vocab}.pad());
        const TokenDistribution d = forward(old_params, item.question->encoding, window);
        assert(std::abs(std::log(d.probs[item.response->tokens[0]]) - item.response->logprobs[0]) <
               1e-9);
    }
#endif
    (void)old_params;

    TermAccumulator acc;
    acc.want_surrogate = true;
    acc.want_kl = config.kl_beta > 0.0;
    acc.want_entropy = true;
    accumulate(params, acc.want_kl ? &ref_params : nullptr, batch, config, acc);

    ObjectiveReport report;
    report.surrogate = acc.surrogate;
    report.kl = acc.kl;
    report.entropy_bonus = acc.entropy;
    report.total = acc.surrogate - config.kl_beta * acc.kl + acc.entropy;
    report.gradient.assign(params.shape.param_count(), 0.0);
    for (int i = 0; i < params.shape.param_count(); ++i) {
        report.gradient[i] = acc.grad_surrogate[i] + acc.grad_entropy[i];
        if (acc.want_kl) {
            report.gradient[i] -= config.kl_beta * acc.grad_kl[i];
        }
    }
    return report;
}

ObjectiveReport total_objective(const PolicyParams& params, const PolicyParams& old_params,
                                const PolicyParams& ref_params,
                                const std::vector<RolloutGroup>& groups,
                                const std::vector<double>& lambdas,
                                const ObjectiveConfig& config) {
    ObjectiveReport report =
        total_objective(params, old_params, ref_params, make_batch(groups, lambdas), config);
    report.lambdas = lambdas;
    return report;
}

} // namespace aerlab
