#pragma once

#include <map>
#include <string>
#include <vector>

#include "aerlab/trainer.hpp"

namespace aerlab {

// Flat `key = value` configuration with dotted section prefixes. `#` starts a
// comment. The task mix is a comma list of kind:tier:weight triples, e.g.
//   mix = reverse_copy:1:0.5, modular_sum:2:0.5
//
// Unknown keys are rejected by name. serialize() emits every effective value
// in canonical key order, so parse(serialize(c)) == c.
class Config {
public:
    Config() = default;

    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    // Apply a KEY=VALUE override (the --set syntax).
    void set(const std::string& key, const std::string& value);
    void set_assignment(const std::string& key_equals_value);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::string get_raw(const std::string& key) const;

    // Resolve to a validated TrainConfig, applying mode-dependent defaults
    // (clip_higher lifts clip.high to 0.28 unless set explicitly).
    TrainConfig to_train_config() const;

    // Extra CLI-level switches carried in the same file.
    bool log_groups() const;
    std::vector<int> eval_k_list() const;
    int eval_n() const;

    // Canonical snapshot of all effective values.
    std::string serialize() const;

    static const std::vector<std::string>& known_keys();

private:
    std::map<std::string, std::string> values_;
};

TaskMix parse_mix(const std::string& text);
std::string mix_to_string(const TaskMix& mix);

} // namespace aerlab
