#include "aerlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace aerlab {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(s);
    while (std::getline(in, part, sep)) {
        parts.push_back(trim(part));
    }
    return parts;
}

long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw config_error("config key '" + key + "': expected integer, got '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw config_error("config key '" + key + "': expected number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") {
        return true;
    }
    if (value == "false" || value == "0") {
        return false;
    }
    throw config_error("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v); // shortest round-trip
    return std::string(buf, res.ptr);
}

} // namespace

TaskMix parse_mix(const std::string& text) {
    TaskMix mix;
    for (const std::string& entry : split(text, ',')) {
        if (entry.empty()) {
            continue;
        }
        const auto parts = split(entry, ':');
        if (parts.size() != 3) {
            throw config_error("config key 'mix': expected kind:tier:weight, got '" + entry + "'");
        }
        MixEntry e;
        e.kind = task_kind_from_name(parts[0]);
        e.tier = static_cast<int>(parse_int("mix", parts[1]));
        e.weight = parse_double("mix", parts[2]);
        mix.entries.push_back(e);
    }
    if (mix.entries.empty()) {
        throw config_error("config key 'mix': no entries");
    }
    return mix;
}

std::string mix_to_string(const TaskMix& mix) {
    std::ostringstream out;
    for (std::size_t i = 0; i < mix.entries.size(); ++i) {
        if (i > 0) {
            out << ",";
        }
        out << task_kind_name(mix.entries[i].kind) << ":" << mix.entries[i].tier << ":"
            << format_double(mix.entries[i].weight);
    }
    return out.str();
}

const std::vector<std::string>& Config::known_keys() {
    static const std::vector<std::string> keys = {
        "mode", "seed", "iterations", "batch_questions", "minibatch_pairs", "group_size",
        "max_len", "learning_rate", "init_scale", "mix",
        "aer.tau", "aer.rho", "aer.eta",
        "entropy.gamma",
        "clip.low", "clip.high",
        "kl.beta",
        "policy.vocab", "policy.window", "policy.embed_dim", "policy.hidden_dim",
        "policy.max_tier",
        "eval.interval", "eval.questions", "eval.samples", "eval.temperature",
        "eval.n", "eval.k",
        "checkpoint.interval",
        "rollout.threads",
        "log.groups",
    };
    return keys;
}

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw config_error("cannot open config file: " + path);
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_string(buffer.str());
}

Config Config::from_string(const std::string& text) {
    Config config;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error("config line " + std::to_string(line_no) +
                               ": expected key = value");
        }
        config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

void Config::set(const std::string& key, const std::string& value) {
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        throw config_error("unknown config key '" + key + "'");
    }
    values_[key] = value;
}

void Config::set_assignment(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw config_error("--set expects KEY=VALUE, got '" + assignment + "'");
    }
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string Config::get_raw(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        throw config_error("config key '" + key + "' not set");
    }
    return it->second;
}

TrainConfig Config::to_train_config() const {
    TrainConfig c;
    auto geti = [&](const std::string& key, int fallback) {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : static_cast<int>(parse_int(key, it->second));
    };
    auto getd = [&](const std::string& key, double fallback) {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : parse_double(key, it->second);
    };

    if (const auto it = values_.find("mode"); it != values_.end()) {
        c.mode = train_mode_from_name(it->second);
    }
    if (const auto it = values_.find("seed"); it != values_.end()) {
        c.seed = static_cast<std::uint64_t>(parse_int("seed", it->second));
    }
    c.iterations = geti("iterations", c.iterations);
    c.batch_questions = geti("batch_questions", c.batch_questions);
    c.minibatch_pairs = geti("minibatch_pairs", c.minibatch_pairs);
    c.group_size = geti("group_size", c.group_size);
    c.max_len = geti("max_len", c.max_len);
    c.learning_rate = getd("learning_rate", c.learning_rate);
    c.init_scale = getd("init_scale", c.init_scale);
    c.aer.tau = getd("aer.tau", c.aer.tau);
    c.aer.rho = getd("aer.rho", c.aer.rho);
    c.aer.eta = getd("aer.eta", c.aer.eta);
    c.gamma = getd("entropy.gamma", c.gamma);
    c.clip_low = getd("clip.low", c.clip_low);
    // Clip-Higher's asymmetric upper ratio unless explicitly configured.
    const double default_high = c.mode == TrainMode::clip_higher ? 0.28 : c.clip_high;
    c.clip_high = getd("clip.high", default_high);
    c.kl_beta = getd("kl.beta", c.kl_beta);
    if (const auto it = values_.find("mix"); it != values_.end()) {
        c.mix = parse_mix(it->second);
    } else {
        c.mix = parse_mix("reverse_copy:1:0.5,modular_sum:2:0.5");
    }
    c.vocab = geti("policy.vocab", c.vocab);
    c.window = geti("policy.window", c.window);
    c.embed_dim = geti("policy.embed_dim", c.embed_dim);
    c.hidden_dim = geti("policy.hidden_dim", c.hidden_dim);
    c.max_tier = geti("policy.max_tier", c.max_tier);
    c.eval_interval = geti("eval.interval", c.eval_interval);
    c.eval_questions = geti("eval.questions", c.eval_questions);
    c.eval_samples = geti("eval.samples", c.eval_samples);
    c.eval_temperature = getd("eval.temperature", c.eval_temperature);
    c.checkpoint_interval = geti("checkpoint.interval", c.checkpoint_interval);
    c.rollout_threads = geti("rollout.threads", c.rollout_threads);
    c.validate();
    return c;
}

bool Config::log_groups() const {
    const auto it = values_.find("log.groups");
    return it != values_.end() && parse_bool("log.groups", it->second);
}

std::vector<int> Config::eval_k_list() const {
    const auto it = values_.find("eval.k");
    const std::string text = it == values_.end() ? "1,2,4,8,16,32" : it->second;
    std::vector<int> ks;
    for (const std::string& part : split(text, ',')) {
        if (!part.empty()) {
            ks.push_back(static_cast<int>(parse_int("eval.k", part)));
        }
    }
    if (ks.empty()) {
        throw config_error("config key 'eval.k': no entries");
    }
    return ks;
}

int Config::eval_n() const {
    const auto it = values_.find("eval.n");
    return it == values_.end() ? 32 : static_cast<int>(parse_int("eval.n", it->second));
}

std::string Config::serialize() const {
    const TrainConfig c = to_train_config();
    std::ostringstream out;
    out << "mode = " << train_mode_name(c.mode) << "\n";
    out << "seed = " << c.seed << "\n";
    out << "iterations = " << c.iterations << "\n";
    out << "batch_questions = " << c.batch_questions << "\n";
    out << "minibatch_pairs = " << c.minibatch_pairs << "\n";
    out << "group_size = " << c.group_size << "\n";
    out << "max_len = " << c.max_len << "\n";
    out << "learning_rate = " << format_double(c.learning_rate) << "\n";
    out << "init_scale = " << format_double(c.init_scale) << "\n";
    out << "mix = " << mix_to_string(c.mix) << "\n";
    out << "aer.tau = " << format_double(c.aer.tau) << "\n";
    out << "aer.rho = " << format_double(c.aer.rho) << "\n";
    out << "aer.eta = " << format_double(c.aer.eta) << "\n";
    out << "entropy.gamma = " << format_double(c.gamma) << "\n";
    out << "clip.low = " << format_double(c.clip_low) << "\n";
    out << "clip.high = " << format_double(c.clip_high) << "\n";
    out << "kl.beta = " << format_double(c.kl_beta) << "\n";
    out << "policy.vocab = " << c.vocab << "\n";
    out << "policy.window = " << c.window << "\n";
    out << "policy.embed_dim = " << c.embed_dim << "\n";
    out << "policy.hidden_dim = " << c.hidden_dim << "\n";
    out << "policy.max_tier = " << c.max_tier << "\n";
    out << "eval.interval = " << c.eval_interval << "\n";
    out << "eval.questions = " << c.eval_questions << "\n";
    out << "eval.samples = " << c.eval_samples << "\n";
    out << "eval.temperature = " << format_double(c.eval_temperature) << "\n";
    out << "eval.n = " << eval_n() << "\n";
    out << "eval.k = ";
    const auto ks = eval_k_list();
    for (std::size_t i = 0; i < ks.size(); ++i) {
        out << (i ? "," : "") << ks[i];
    }
    out << "\n";
    out << "checkpoint.interval = " << c.checkpoint_interval << "\n";
    out << "rollout.threads = " << c.rollout_threads << "\n";
    out << "log.groups = " << (log_groups() ? "true" : "false") << "\n";
    return out.str();
}

} // namespace aerlab
