#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "aerlab/trainer.hpp"

namespace aerlab {

// One JSON object per line, keys in schema order:
// step, mode, mean_reward, batch_entropy, alpha, target_entropy,
// lambda_mean, lambda_max, frac_hard, mean_resp_len, pass1
std::string metric_to_json_line(const MetricRecord& record);
MetricRecord metric_from_json_line(const std::string& line);

std::vector<MetricRecord> read_metrics_file(const std::string& path);

// Per-iteration group detail: {"step":t,"task":[...],"tier":[...],"g":[...],"lambda":[...]}
std::string groups_to_json_line(const GroupRecord& record);
GroupRecord groups_from_json_line(const std::string& line);

std::vector<GroupRecord> read_groups_file(const std::string& path);

} // namespace aerlab
