#include "aerlab/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <future>
#include <istream>
#include <ostream>
#include <set>

#include "aerlab/eval.hpp"

namespace aerlab {

namespace {

// Sub-stream purposes; (seed, purpose, iteration, index) keys every draw so
// resume and parallel collection reproduce the sequential run exactly.
enum StreamPurpose : std::uint64_t {
    kInitStream = 1,
    kQuestionStream = 2,
    kRolloutStream = 3,
    kShuffleStream = 4,
    kEvalSetStream = 5,
    kEvalStream = 6,
};

} // namespace

std::string train_mode_name(TrainMode mode) {
    switch (mode) {
    case TrainMode::grpo: return "grpo";
    case TrainMode::fixed_entropy: return "fixed_entropy";
    case TrainMode::clip_higher: return "clip_higher";
    case TrainMode::aer: return "aer";
    }
    throw contract_error("unknown train mode");
}

TrainMode train_mode_from_name(const std::string& name) {
    if (name == "grpo") return TrainMode::grpo;
    if (name == "fixed_entropy") return TrainMode::fixed_entropy;
    if (name == "clip_higher") return TrainMode::clip_higher;
    if (name == "aer") return TrainMode::aer;
    throw config_error("unknown mode '" + name + "'");
}

PolicyShape TrainConfig::policy_shape() const {
    const TaskLibrary lib(Vocab{vocab}, max_tier);
    PolicyShape shape;
    shape.vocab = vocab;
    shape.window = window;
    shape.embed_dim = embed_dim;
    shape.hidden_dim = hidden_dim;
    shape.question_symbols = lib.question_symbol_count();
    shape.question_slots = lib.question_slot_count();
    return shape;
}

void TrainConfig::validate() const {
    if (batch_questions < 1 || group_size < 2 || max_len < 1 || iterations < 1) {
        throw config_error("batch_questions/group_size/max_len/iterations out of range");
    }
    if (minibatch_pairs < 1 || (batch_questions * group_size) % minibatch_pairs != 0) {
        throw config_error("minibatch_pairs must divide batch_questions * group_size");
    }
    if (!(learning_rate > 0.0)) {
        throw config_error("learning_rate must be positive");
    }
    if (gamma < 0.0) {
        throw config_error("entropy gamma must be >= 0");
    }
    if (eval_interval < 1 || eval_questions < 1 || eval_samples < 1) {
        throw config_error("eval settings must be positive");
    }
    if (!(eval_temperature > 0.0)) {
        throw config_error("eval temperature must be positive");
    }
    if (checkpoint_interval < 0) {
        throw config_error("checkpoint_interval must be >= 0");
    }
    if (rollout_threads < 1) {
        throw config_error("rollout.threads must be >= 1");
    }
    aer.validate();
    objective_config().validate();
    policy_shape().validate();
    mix.validate(task_library());
}

PolicyParams sync_reference(const PolicyParams& policy) {
    return policy;
}

namespace {

void check_finite(double value, int step, const char* what) {
    if (!std::isfinite(value)) {
        throw data_error("training aborted at iteration " + std::to_string(step) +
                         ": non-finite " + what);
    }
}

std::vector<Question> build_eval_set(const TrainConfig& config, const TaskLibrary& lib) {
    // One held-out block per distinct (task, tier) of the mix, in mix order.
    std::vector<Question> questions;
    std::set<std::pair<int, int>> seen;
    int entry_index = 0;
    for (const MixEntry& e : config.mix.entries) {
        const auto key = std::make_pair(static_cast<int>(e.kind), e.tier);
        if (seen.insert(key).second) {
            for (int i = 0; i < config.eval_questions; ++i) {
                RngStream rng = RngStream::derive(
                    config.seed, {kEvalSetStream, static_cast<std::uint64_t>(entry_index),
                                  static_cast<std::uint64_t>(i)});
                questions.push_back(lib.generate_question(e.kind, e.tier, rng));
            }
        }
        ++entry_index;
    }
    return questions;
}

} // namespace

std::vector<Question> build_eval_questions(const TrainConfig& config) {
    return build_eval_set(config, config.task_library());
}

TrainResult train(const TrainConfig& config, const TrainSinks& sinks,
                  const std::optional<Checkpoint>& resume) {
    config.validate();
    const PolicyShape shape = config.policy_shape();
    const TaskLibrary lib = config.task_library();
    const ObjectiveConfig obj_config = config.objective_config();
    const int total_pairs = config.batch_questions * config.group_size;

    PolicyParams params(shape);
    PolicyParams ref_params(shape);
    AerState controller(config.aer);
    std::int64_t start_iteration = 0;
    double last_pass1 = 0.0;

    if (resume.has_value()) {
        if (resume->params.shape != shape) {
            throw config_error("resume checkpoint shape does not match configuration");
        }
        if (resume->seed != config.seed) {
            throw config_error("resume checkpoint seed does not match configuration");
        }
        params = resume->params;
        ref_params = resume->ref_params;
        controller.restore(resume->initial_entropy, resume->target_entropy, resume->alpha,
                           resume->controller_step, resume->controller_initialized);
        start_iteration = resume->iteration;
        last_pass1 = resume->last_pass1;
    } else {
        RngStream init_rng = RngStream::derive(config.seed, {kInitStream});
        params.randomize(config.init_scale, init_rng);
        ref_params = sync_reference(params);
    }

    const std::vector<Question> eval_set = build_eval_set(config, lib);

    TrainResult result{Checkpoint(shape), {}};

    auto snapshot = [&](std::int64_t iteration) {
        Checkpoint ckpt(shape);
        ckpt.params = params;
        ckpt.ref_params = ref_params;
        ckpt.initial_entropy = controller.initial_entropy();
        ckpt.target_entropy = controller.target_entropy();
        ckpt.alpha = controller.alpha();
        ckpt.controller_step = controller.step();
        ckpt.controller_initialized = controller.initialized();
        ckpt.iteration = iteration;
        ckpt.seed = config.seed;
        ckpt.last_pass1 = last_pass1;
        return ckpt;
    };

    for (int t = static_cast<int>(start_iteration) + 1; t <= config.iterations; ++t) {
        // (0) freeze the rollout policy
        const PolicyParams old_params = params;

        // (i) collect groups and estimate per-question accuracy. Every group
        // has its own derived stream and lands at its question index, so the
        // result is identical at any parallelism level.
        std::vector<Question> questions(config.batch_questions);
        for (int q = 0; q < config.batch_questions; ++q) {
            RngStream qrng = RngStream::derive(
                config.seed, {kQuestionStream, static_cast<std::uint64_t>(t),
                              static_cast<std::uint64_t>(q)});
            const MixEntry& entry = config.mix.entries[config.mix.sample_index(qrng)];
            questions[q] = lib.generate_question(entry.kind, entry.tier, qrng);
        }

        std::vector<RolloutGroup> groups(config.batch_questions);
        auto collect_one = [&](int q) {
            RngStream rrng = RngStream::derive(
                config.seed, {kRolloutStream, static_cast<std::uint64_t>(t),
                              static_cast<std::uint64_t>(q)});
            groups[q] = collect_group(old_params, lib, std::move(questions[q]),
                                      config.group_size, config.max_len, rrng);
        };
        if (config.rollout_threads <= 1) {
            for (int q = 0; q < config.batch_questions; ++q) {
                collect_one(q);
            }
        } else {
            for (int start = 0; start < config.batch_questions;
                 start += config.rollout_threads) {
                std::vector<std::future<void>> chunk;
                const int end = std::min(config.batch_questions, start + config.rollout_threads);
                for (int q = start; q < end; ++q) {
                    chunk.push_back(std::async(std::launch::async, collect_one, q));
                }
                for (auto& f : chunk) {
                    f.get();
                }
            }
        }

        const BatchEntropyEstimate entropy_est = batch_entropy(groups);
        if (!controller.initialized()) {
            controller.init_target(entropy_est.value);
        }

        // (ii) difficulty-aware coefficients (held fixed for the iteration)
        std::vector<double> lambdas(groups.size(), 0.0);
        for (std::size_t q = 0; q < groups.size(); ++q) {
            switch (config.mode) {
            case TrainMode::aer:
                lambdas[q] = controller.allocate_lambda(groups[q].group_accuracy);
                break;
            case TrainMode::fixed_entropy:
                lambdas[q] = config.gamma;
                break;
            case TrainMode::grpo:
            case TrainMode::clip_higher:
                break;
            }
        }
        const double alpha_used = controller.alpha();

        // (iii) one pass of minibatch gradient ascent over shuffled pairs
        std::vector<std::pair<int, int>> pairs;
        pairs.reserve(total_pairs);
        for (int q = 0; q < config.batch_questions; ++q) {
            for (int i = 0; i < config.group_size; ++i) {
                pairs.emplace_back(q, i);
            }
        }
        RngStream shuffle_rng =
            RngStream::derive(config.seed, {kShuffleStream, static_cast<std::uint64_t>(t)});
        for (int i = total_pairs - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rng.uniform_below(i + 1));
            std::swap(pairs[i], pairs[j]);
        }

        for (int start = 0; start < total_pairs; start += config.minibatch_pairs) {
            const std::vector<std::pair<int, int>> chunk(
                pairs.begin() + start, pairs.begin() + start + config.minibatch_pairs);
            const ObjectiveBatch batch = make_batch(groups, lambdas, chunk);
            const ObjectiveReport report =
                total_objective(params, old_params, ref_params, batch, obj_config);
            check_finite(report.total, t, "objective value");
            for (int i = 0; i < shape.param_count(); ++i) {
                check_finite(report.gradient[i], t, "gradient");
                params.values[i] += config.learning_rate * report.gradient[i];
            }
        }

        // (iv) closed-loop update of the global scale
        if (config.mode == TrainMode::aer) {
            controller.update_alpha(entropy_est.value);
        }

        // metrics
        double reward_sum = 0.0;
        double lambda_sum = 0.0;
        double lambda_max = 0.0;
        int hard_groups = 0;
        std::int64_t token_sum = 0;
        for (std::size_t q = 0; q < groups.size(); ++q) {
            for (int r : groups[q].rewards) {
                reward_sum += r;
            }
            token_sum += groups[q].token_count();
            lambda_sum += lambdas[q];
            lambda_max = std::max(lambda_max, lambdas[q]);
            if (groups[q].group_accuracy <= config.aer.rho) {
                ++hard_groups;
            }
        }

        const bool eval_now =
            t == 1 || t == config.iterations || (t % config.eval_interval == 0);
        if (eval_now) {
            RngStream eval_rng =
                RngStream::derive(config.seed, {kEvalStream, static_cast<std::uint64_t>(t)});
            const EvalReport eval_report =
                evaluate(params, lib, eval_set, config.eval_samples, {1}, config.max_len,
                         eval_rng, config.eval_temperature);
            last_pass1 = eval_report.pass1();
        }

        MetricRecord record;
        record.step = t;
        record.mode = train_mode_name(config.mode);
        record.mean_reward = reward_sum / total_pairs;
        record.batch_entropy = entropy_est.value;
        record.alpha = alpha_used;
        record.target_entropy = controller.target_entropy();
        record.lambda_mean = lambda_sum / static_cast<double>(groups.size());
        record.lambda_max = lambda_max;
        record.frac_hard = static_cast<double>(hard_groups) / static_cast<double>(groups.size());
        record.mean_resp_len = static_cast<double>(token_sum) / total_pairs;
        record.pass1 = last_pass1;
        result.metrics.push_back(record);
        if (sinks.on_metric) {
            sinks.on_metric(record);
        }

        if (sinks.on_groups) {
            GroupRecord grec;
            grec.step = t;
            for (std::size_t q = 0; q < groups.size(); ++q) {
                grec.task.push_back(task_kind_name(groups[q].question.kind));
                grec.tier.push_back(groups[q].question.tier);
                grec.group_accuracy.push_back(groups[q].group_accuracy);
                grec.lambda.push_back(lambdas[q]);
            }
            sinks.on_groups(grec);
        }

        const bool checkpoint_now =
            t == config.iterations ||
            (config.checkpoint_interval > 0 && t % config.checkpoint_interval == 0);
        if (checkpoint_now && sinks.on_checkpoint) {
            sinks.on_checkpoint(snapshot(t));
        }
    }

    result.final_checkpoint = snapshot(config.iterations);
    return result;
}

// -- checkpoint serialization -------------------------------------------------

namespace {

constexpr char kCheckpointMagic[] = "AERCKPT1";

template <class T>
void write_raw(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
        std::reverse(bytes.begin(), bytes.end());
        out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
    } else {
        out.write(reinterpret_cast<const char*>(&value), sizeof(T));
    }
}

template <class T>
T read_raw(std::istream& in) {
    std::array<unsigned char, sizeof(T)> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
    if (!in) {
        throw data_error("checkpoint file truncated");
    }
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    return std::bit_cast<T>(bytes);
}

} // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
    write_raw<std::int64_t>(out, ckpt.iteration);
    write_raw<std::uint64_t>(out, ckpt.seed);
    write_raw<double>(out, ckpt.last_pass1);
    write_raw<std::uint8_t>(out, ckpt.controller_initialized ? 1 : 0);
    write_raw<double>(out, ckpt.initial_entropy);
    write_raw<double>(out, ckpt.target_entropy);
    write_raw<double>(out, ckpt.alpha);
    write_raw<std::int64_t>(out, ckpt.controller_step);
    write_params(out, ckpt.params);
    write_params(out, ckpt.ref_params);
}

Checkpoint read_checkpoint(std::istream& in, const PolicyShape& expected) {
    char magic[sizeof(kCheckpointMagic) - 1];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
        throw data_error("bad checkpoint magic (expected AERCKPT1)");
    }
    Checkpoint ckpt(expected);
    ckpt.iteration = read_raw<std::int64_t>(in);
    ckpt.seed = read_raw<std::uint64_t>(in);
    ckpt.last_pass1 = read_raw<double>(in);
    ckpt.controller_initialized = read_raw<std::uint8_t>(in) != 0;
    ckpt.initial_entropy = read_raw<double>(in);
    ckpt.target_entropy = read_raw<double>(in);
    ckpt.alpha = read_raw<double>(in);
    ckpt.controller_step = read_raw<std::int64_t>(in);
    ckpt.params = read_params(in, expected);
    ckpt.ref_params = read_params(in, expected);
    return ckpt;
}

} // namespace aerlab
