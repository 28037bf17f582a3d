#include "aerlab/aer.hpp"

#include <algorithm>
#include <cmath>

namespace aerlab {

void AerConfig::validate() const {
    // Table-style sweeps go up to tau = 1.2, so tau is only required positive;
    // the H* in (0, H0) invariant applies to the tau < 1 regime.
    if (!(tau > 0.0)) {
        throw config_error("aer.tau must be positive");
    }
    if (rho < 0.0 || rho > 1.0) {
        throw config_error("aer.rho must lie in [0,1]");
    }
    if (!(eta > 0.0)) {
        throw config_error("aer.eta must be positive");
    }
    if (!(eps > 0.0)) {
        throw config_error("aer.eps must be positive");
    }
}

void AerState::init_target(double first_batch_entropy) {
    if (initialized_) {
        throw contract_error("AerState::init_target called twice");
    }
    if (!(first_batch_entropy > 0.0)) {
        throw data_error("init_target: first batch entropy must be positive");
    }
    initial_entropy_ = first_batch_entropy;
    target_entropy_ = config_.tau * first_batch_entropy;
    initialized_ = true;
}

double AerState::allocate_lambda(double group_accuracy) const {
    if (!initialized_) {
        throw contract_error("allocate_lambda: controller not initialized");
    }
    if (group_accuracy < 0.0 || group_accuracy > 1.0) {
        throw contract_error("allocate_lambda: group accuracy outside [0,1]");
    }
    const double gap = std::max(0.0, config_.rho - group_accuracy);
    double lambda = alpha_ * gap / (config_.rho + config_.eps);
    if (config_.rho == 0.0 && group_accuracy == 0.0) {
        lambda += alpha_;
    }
    return lambda;
}

double AerState::update_alpha(double batch_entropy_value) {
    if (!initialized_) {
        throw contract_error("update_alpha: controller not initialized");
    }
    if (batch_entropy_value < 0.0) {
        throw data_error("update_alpha: batch entropy must be non-negative");
    }
    const double diff = target_entropy_ - batch_entropy_value;
    const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    alpha_ = std::max(0.0, alpha_ + config_.eta * sign);
    ++step_;
    return alpha_;
}

void AerState::restore(double initial_entropy, double target_entropy, double alpha,
                       std::int64_t step, bool initialized) {
    initial_entropy_ = initial_entropy;
    target_entropy_ = target_entropy;
    alpha_ = alpha;
    step_ = step;
    initialized_ = initialized;
}

BatchEntropyEstimate batch_entropy(const std::vector<RolloutGroup>& groups) {
    BatchEntropyEstimate est;
    double sum = 0.0;
    for (const RolloutGroup& g : groups) {
        for (const Response& r : g.responses) {
            for (double h : r.entropies) {
                sum += h;
                ++est.token_count;
            }
        }
    }
    if (est.token_count == 0) {
        throw data_error("batch_entropy: no generated tokens in batch");
    }
    est.value = sum / static_cast<double>(est.token_count);
    return est;
}

} // namespace aerlab
