#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "aerlab/aer.hpp"
#include "aerlab/objective.hpp"
#include "aerlab/rollout.hpp"
#include "aerlab/tasks.hpp"

namespace aerlab {

enum class TrainMode { grpo, fixed_entropy, clip_higher, aer };

std::string train_mode_name(TrainMode mode);
TrainMode train_mode_from_name(const std::string& name);

struct TrainConfig {
    TrainMode mode = TrainMode::grpo;
    int batch_questions = 32;  // B questions per iteration
    int minibatch_pairs = 64;  // must divide B*G
    int group_size = 8;        // G
    int max_len = 10;          // L_max
    double learning_rate = 0.7;
    int iterations = 300;      // T

    AerConfig aer;             // tau, rho, eta, eps
    double gamma = 0.0;        // fixed-entropy coefficient
    double clip_low = 0.2;
    double clip_high = 0.2;
    double kl_beta = 0.0;

    TaskMix mix;
    std::uint64_t seed = 1;
    double init_scale = 0.3;   // stddev of the parameter init

    int eval_interval = 10;    // pass@1 probe cadence (also fires at t=1 and t=T)
    int eval_questions = 16;   // held-out questions per distinct (task, tier)
    int eval_samples = 8;      // n per held-out question
    double eval_temperature = 1.0;

    int checkpoint_interval = 0; // 0 = final only
    int rollout_threads = 1;     // parallel group collection; results are
                                 // merged in question order either way

    // Network dims (question_symbols / question_slots derive from the tasks).
    int vocab = 16;
    int window = 4;
    int embed_dim = 8;
    int hidden_dim = 32;
    int max_tier = 8;

    PolicyShape policy_shape() const;
    TaskLibrary task_library() const { return TaskLibrary(Vocab{vocab}, max_tier); }
    ObjectiveConfig objective_config() const { return {clip_low, clip_high, kl_beta}; }
    void validate() const;
};

// One line of metrics.jsonl, emitted per iteration.
struct MetricRecord {
    int step = 0;
    std::string mode;
    double mean_reward = 0.0;
    double batch_entropy = 0.0;
    double alpha = 0.0;          // global scale used for this iteration's lambdas
    double target_entropy = 0.0; // H*
    double lambda_mean = 0.0;
    double lambda_max = 0.0;
    double frac_hard = 0.0;      // fraction of groups with g <= rho
    double mean_resp_len = 0.0;
    double pass1 = 0.0;          // held-out pass@1, carried between probes
};

// Everything needed to resume bit-exactly: parameters, frozen reference,
// controller state, iteration index and the rng root seed.
struct Checkpoint {
    PolicyParams params;
    PolicyParams ref_params;
    double initial_entropy = 0.0;
    double target_entropy = 0.0;
    double alpha = 0.0;
    std::int64_t controller_step = 0;
    bool controller_initialized = false;
    std::int64_t iteration = 0;
    std::uint64_t seed = 0;
    double last_pass1 = 0.0;

    explicit Checkpoint(PolicyShape shape) : params(shape), ref_params(shape) {}
};

// Binary container: magic "AERCKPT1", run header, controller section, then
// the policy and reference parameter blobs (AERPOL1 format each).
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in, const PolicyShape& expected);

// Per-group rollout detail for one iteration (difficulty-gating analysis).
struct GroupRecord {
    int step = 0;
    std::vector<std::string> task;
    std::vector<int> tier;
    std::vector<double> group_accuracy;
    std::vector<double> lambda;
};

struct TrainSinks {
    std::function<void(const MetricRecord&)> on_metric;
    std::function<void(const GroupRecord&)> on_groups;
    std::function<void(const Checkpoint&)> on_checkpoint;
};

struct TrainResult {
    Checkpoint final_checkpoint;
    std::vector<MetricRecord> metrics;
};

// Freeze a reference snapshot of the policy (taken at iteration 0).
PolicyParams sync_reference(const PolicyParams& policy);

// The held-out question set used for pass@1 probes: one block of
// eval_questions per distinct (task, tier) in the mix, derived from the seed.
std::vector<Question> build_eval_questions(const TrainConfig& config);

// Run the training loop. Each iteration freezes the old policy, collects B
// rollout groups, allocates per-question entropy coefficients by mode,
// ascends the total objective over minibatches, and (in aer mode) updates the
// global scale from that iteration's rollout entropy. Aborts with data_error
// on non-finite loss or gradient.
TrainResult train(const TrainConfig& config, const TrainSinks& sinks = {},
                  const std::optional<Checkpoint>& resume = std::nullopt);

} // namespace aerlab
