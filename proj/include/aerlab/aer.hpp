#pragma once

#include <cstdint>
#include <vector>

#include "aerlab/rollout.hpp"

namespace aerlab {

// Controller hyperparameters: reduction ratio tau, pivot accuracy rho,
// step size eta, and the small constant guarding the rho=0 denominator.
struct AerConfig {
    double tau = 0.4;
    double rho = 0.2;
    double eta = 0.005;
    double eps = 1e-8;

    void validate() const;
};

// Mutable controller state across training iterations. The target entropy is
// anchored once to the first batch entropy; the global scale alpha then
// tracks it by sign feedback.
class AerState {
public:
    AerState() = default;
    explicit AerState(AerConfig config) : config_(config) { config_.validate(); }

    // H* = tau * H0. Callable exactly once, with the first batch entropy.
    void init_target(double first_batch_entropy);

    // lambda = alpha * max(0, rho - g) / (rho + eps) + alpha * I{rho=0, g=0}.
    // Zero for every group with g > rho; non-increasing in g.
    double allocate_lambda(double group_accuracy) const;

    // alpha <- max(0, alpha + eta * sgn(H* - batch_entropy)); sgn(0) = 0.
    // Advances the step counter and returns the new alpha.
    double update_alpha(double batch_entropy);

    bool initialized() const { return initialized_; }
    double initial_entropy() const { return initial_entropy_; }
    double target_entropy() const { return target_entropy_; }
    double alpha() const { return alpha_; }
    std::int64_t step() const { return step_; }
    const AerConfig& config() const { return config_; }

    // Checkpoint restore.
    void restore(double initial_entropy, double target_entropy, double alpha,
                 std::int64_t step, bool initialized);

private:
    AerConfig config_;
    double initial_entropy_ = 0.0;
    double target_entropy_ = 0.0;
    double alpha_ = 0.0;
    std::int64_t step_ = 0;
    bool initialized_ = false;
};

// Token-weighted mean token entropy over every position of every response.
struct BatchEntropyEstimate {
    double value = 0.0;
    std::int64_t token_count = 0;
};

BatchEntropyEstimate batch_entropy(const std::vector<RolloutGroup>& groups);

} // namespace aerlab
