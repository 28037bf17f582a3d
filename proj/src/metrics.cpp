#include "aerlab/metrics.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace aerlab {

std::string metric_to_json_line(const MetricRecord& r) {
    nlohmann::ordered_json j;
    j["step"] = r.step;
    j["mode"] = r.mode;
    j["mean_reward"] = r.mean_reward;
    j["batch_entropy"] = r.batch_entropy;
    j["alpha"] = r.alpha;
    j["target_entropy"] = r.target_entropy;
    j["lambda_mean"] = r.lambda_mean;
    j["lambda_max"] = r.lambda_max;
    j["frac_hard"] = r.frac_hard;
    j["mean_resp_len"] = r.mean_resp_len;
    j["pass1"] = r.pass1;
    return j.dump();
}

MetricRecord metric_from_json_line(const std::string& line) {
    const auto j = nlohmann::json::parse(line);
    MetricRecord r;
    r.step = j.at("step").get<int>();
    r.mode = j.at("mode").get<std::string>();
    r.mean_reward = j.at("mean_reward").get<double>();
    r.batch_entropy = j.at("batch_entropy").get<double>();
    r.alpha = j.at("alpha").get<double>();
    r.target_entropy = j.at("target_entropy").get<double>();
    r.lambda_mean = j.at("lambda_mean").get<double>();
    r.lambda_max = j.at("lambda_max").get<double>();
    r.frac_hard = j.at("frac_hard").get<double>();
    r.mean_resp_len = j.at("mean_resp_len").get<double>();
    r.pass1 = j.at("pass1").get<double>();
    return r;
}

std::vector<MetricRecord> read_metrics_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw data_error("cannot open metrics file: " + path);
    }
    std::vector<MetricRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            records.push_back(metric_from_json_line(line));
        }
    }
    return records;
}

std::string groups_to_json_line(const GroupRecord& r) {
    nlohmann::ordered_json j;
    j["step"] = r.step;
    j["task"] = r.task;
    j["tier"] = r.tier;
    j["g"] = r.group_accuracy;
    j["lambda"] = r.lambda;
    return j.dump();
}

GroupRecord groups_from_json_line(const std::string& line) {
    const auto j = nlohmann::json::parse(line);
    GroupRecord r;
    r.step = j.at("step").get<int>();
    r.task = j.at("task").get<std::vector<std::string>>();
    r.tier = j.at("tier").get<std::vector<int>>();
    r.group_accuracy = j.at("g").get<std::vector<double>>();
    r.lambda = j.at("lambda").get<std::vector<double>>();
    return r;
}

std::vector<GroupRecord> read_groups_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw data_error("cannot open groups file: " + path);
    }
    std::vector<GroupRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            records.push_back(groups_from_json_line(line));
        }
    }
    return records;
}

} // namespace aerlab
