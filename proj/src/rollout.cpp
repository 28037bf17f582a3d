#include "aerlab/rollout.hpp"

#include <cmath>

namespace aerlab {

namespace {
constexpr double kStdFloor = 1e-6;
}

int RolloutGroup::token_count() const {
    int n = 0;
    for (const Response& r : responses) {
        n += r.length();
    }
    return n;
}

std::vector<double> normalize_advantages(const std::vector<int>& rewards) {
    const int g = static_cast<int>(rewards.size());
    if (g < 2) {
        throw contract_error("normalize_advantages: group size must be >= 2");
    }
    double mean = 0.0;
    for (int r : rewards) {
        mean += r;
    }
    mean /= g;

    double var = 0.0;
    for (int r : rewards) {
        var += (r - mean) * (r - mean);
    }
    const double std_dev = std::sqrt(var / g); // population std

    std::vector<double> adv(g);
    const double denom = std::max(std_dev, kStdFloor);
    for (int i = 0; i < g; ++i) {
        adv[i] = (rewards[i] - mean) / denom;
    }
    return adv;
}

RolloutGroup collect_group(const PolicyParams& old_params, const TaskLibrary& lib,
                           Question question, int group_size, int max_len, RngStream& rng) {
    if (group_size < 2) {
        throw contract_error("collect_group: group size must be >= 2");
    }
    RolloutGroup group;
    group.question = std::move(question);
    group.responses.reserve(group_size);
    group.rewards.reserve(group_size);

    double reward_sum = 0.0;
    for (int i = 0; i < group_size; ++i) {
        Response r = sample_response(old_params, group.question.encoding, rng, max_len);
        group.rewards.push_back(lib.verify(group.question, r));
        reward_sum += group.rewards.back();
        group.responses.push_back(std::move(r));
    }
    group.group_accuracy = reward_sum / group_size;
    group.advantages = normalize_advantages(group.rewards);
    return group;
}

} // namespace aerlab
