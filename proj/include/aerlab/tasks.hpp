#pragma once

#include <string>
#include <vector>

#include "aerlab/policy.hpp"
#include "aerlab/rng.hpp"

namespace aerlab {

enum class TaskKind {
    reverse_copy, // emit the question's tokens in reverse order
    modular_sum,  // emit the decimal digits of (sum of addends mod |V|)
};

std::string task_kind_name(TaskKind kind);
TaskKind task_kind_from_name(const std::string& name);

// One generated question. The ground-truth answer (including the trailing
// EOS) is carried here and consulted only by the verifier.
struct Question {
    TaskKind kind = TaskKind::reverse_copy;
    int tier = 1;
    std::vector<int> payload;  // raw symbols drawn by the generator
    std::vector<int> answer;   // ground truth token sequence, ends with EOS
    QuestionEncoding encoding; // [task tag, payload...] as policy symbol ids
};

// Question generation and verification for a fixed vocabulary. Question
// symbol ids: 0..|V|-1 mirror the vocab, then one tag per task kind, then PAD.
class TaskLibrary {
public:
    explicit TaskLibrary(Vocab vocab, int max_tier = 8);

    Vocab vocab() const { return vocab_; }
    int max_tier() const { return max_tier_; }

    // Symbol alphabet size for PolicyShape::question_symbols.
    int question_symbol_count() const { return vocab_.size + kNumTaskKinds + 1; }
    // Encoding length bound for PolicyShape::question_slots.
    int question_slot_count() const { return 1 + max_tier_; }

    // Uniform draw within the tier. Throws config_error for unsupported tiers.
    Question generate_question(TaskKind kind, int tier, RngStream& rng) const;

    // 1 iff the response tokens exactly equal the ground-truth sequence.
    int verify(const Question& question, const Response& response) const;

private:
    static constexpr int kNumTaskKinds = 2;

    int tag_symbol(TaskKind kind) const { return vocab_.size + static_cast<int>(kind); }

    Vocab vocab_;
    int max_tier_;
};

// A training distribution over (kind, tier) with categorical weights.
struct MixEntry {
    TaskKind kind = TaskKind::reverse_copy;
    int tier = 1;
    double weight = 1.0;
};

struct TaskMix {
    std::vector<MixEntry> entries;

    void validate(const TaskLibrary& lib) const;
    // Draw an entry index by weight.
    int sample_index(RngStream& rng) const;
};

} // namespace aerlab
