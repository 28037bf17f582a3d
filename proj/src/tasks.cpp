#include "aerlab/tasks.hpp"

#include <algorithm>

namespace aerlab {

std::string task_kind_name(TaskKind kind) {
    switch (kind) {
    case TaskKind::reverse_copy: return "reverse_copy";
    case TaskKind::modular_sum: return "modular_sum";
    }
    throw contract_error("unknown task kind");
}

TaskKind task_kind_from_name(const std::string& name) {
    if (name == "reverse_copy") {
        return TaskKind::reverse_copy;
    }
    if (name == "modular_sum") {
        return TaskKind::modular_sum;
    }
    throw config_error("unknown task kind '" + name + "'");
}

TaskLibrary::TaskLibrary(Vocab vocab, int max_tier) : vocab_(vocab), max_tier_(max_tier) {
    if (vocab_.size < 11) {
        // modular_sum needs digit tokens 0..9 plus EOS
        throw config_error("TaskLibrary requires vocab size >= 11");
    }
    if (max_tier_ < 1) {
        throw config_error("TaskLibrary max_tier must be >= 1");
    }
}

Question TaskLibrary::generate_question(TaskKind kind, int tier, RngStream& rng) const {
    if (tier < 1 || tier > max_tier_) {
        throw config_error("unsupported tier " + std::to_string(tier) + " for task " +
                           task_kind_name(kind));
    }
    Question q;
    q.kind = kind;
    q.tier = tier;
    q.encoding.push_back(tag_symbol(kind));

    switch (kind) {
    case TaskKind::reverse_copy: {
        // tier = number of non-EOS tokens to reverse
        for (int i = 0; i < tier; ++i) {
            q.payload.push_back(static_cast<int>(rng.uniform_below(vocab_.size - 1)));
        }
        q.answer.assign(q.payload.rbegin(), q.payload.rend());
        q.answer.push_back(vocab_.eos());
        break;
    }
    case TaskKind::modular_sum: {
        // tier = number of decimal addends in {0..9}
        int sum = 0;
        for (int i = 0; i < tier; ++i) {
            const int digit = static_cast<int>(rng.uniform_below(10));
            q.payload.push_back(digit);
            sum += digit;
        }
        int value = sum % vocab_.size;
        if (value >= 10) {
            q.answer.push_back(value / 10);
        }
        q.answer.push_back(value % 10);
        q.answer.push_back(vocab_.eos());
        break;
    }
    }

    q.encoding.insert(q.encoding.end(), q.payload.begin(), q.payload.end());
    return q;
}

int TaskLibrary::verify(const Question& question, const Response& response) const {
    return response.tokens == question.answer ? 1 : 0;
}

void TaskMix::validate(const TaskLibrary& lib) const {
    if (entries.empty()) {
        throw config_error("task mix is empty");
    }
    double total = 0.0;
    for (const MixEntry& e : entries) {
        if (e.tier < 1 || e.tier > lib.max_tier()) {
            throw config_error("task mix tier " + std::to_string(e.tier) + " out of range");
        }
        if (!(e.weight > 0.0)) {
            throw config_error("task mix weights must be positive");
        }
        total += e.weight;
    }
    if (!(total > 0.0)) {
        throw config_error("task mix weights sum to zero");
    }
}

int TaskMix::sample_index(RngStream& rng) const {
    double total = 0.0;
    for (const MixEntry& e : entries) {
        total += e.weight;
    }
    const double r = rng.uniform01() * total;
    double cdf = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        cdf += entries[i].weight;
        if (r < cdf) {
            return static_cast<int>(i);
        }
    }
    return static_cast<int>(entries.size()) - 1;
}

} // namespace aerlab
