#include "aerlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

namespace aerlab {

double pass_at_k(int n, int c, int k) {
    if (k < 1 || k > n || c < 0 || c > n) {
        throw contract_error("pass_at_k: require 0 <= c <= n and 1 <= k <= n");
    }
    if (c == 0) {
        return 0.0;
    }
    if (n - c < k) {
        return 1.0; // every size-k subset hits a correct sample
    }
    // C(n-c,k)/C(n,k) = prod_{j=0}^{k-1} (n-c-j)/(n-j)
    double miss = 1.0;
    for (int j = 0; j < k; ++j) {
        miss *= static_cast<double>(n - c - j) / static_cast<double>(n - j);
    }
    return 1.0 - miss;
}

double EvalReport::pass1() const { return pass_at(1); }

double EvalReport::pass_at(int k) const {
    for (std::size_t i = 0; i < k_values.size(); ++i) {
        if (k_values[i] == k) {
            return aggregate_pass[i];
        }
    }
    throw contract_error("EvalReport: k=" + std::to_string(k) + " not configured");
}

EvalReport evaluate(const PolicyParams& params, const TaskLibrary& lib,
                    const std::vector<Question>& questions, int n,
                    const std::vector<int>& k_values, int max_len, RngStream& rng,
                    double temperature) {
    if (questions.empty()) {
        throw data_error("evaluate: empty question set");
    }
    if (k_values.empty()) {
        throw contract_error("evaluate: empty k list");
    }
    for (int k : k_values) {
        if (k < 1 || k > n) {
            throw contract_error("evaluate: every k must satisfy 1 <= k <= n");
        }
    }

    EvalReport report;
    report.samples_per_question = n;
    report.k_values = k_values;
    report.aggregate_pass.assign(k_values.size(), 0.0);

    std::vector<std::uint64_t> question_seeds(questions.size());
    for (auto& s : question_seeds) {
        s = rng.next_u64();
    }

    std::map<std::pair<std::string, int>, EvalReport::TierStats> tier_stats;
    double token_entropy_sum = 0.0;
    std::int64_t token_count = 0;

    for (std::size_t qi = 0; qi < questions.size(); ++qi) {
        RngStream qrng(question_seeds[qi]);
        int correct = 0;
        for (int s = 0; s < n; ++s) {
            const Response r =
                sample_response(params, questions[qi].encoding, qrng, max_len, temperature);
            correct += lib.verify(questions[qi], r);
            for (double h : r.entropies) {
                token_entropy_sum += h;
                ++token_count;
            }
            report.mean_response_length += r.length();
        }

        const auto key = std::make_pair(task_kind_name(questions[qi].kind), questions[qi].tier);
        auto& stats = tier_stats[key];
        if (stats.questions == 0) {
            stats.task = key.first;
            stats.tier = key.second;
            stats.pass_rates.assign(k_values.size(), 0.0);
        }
        ++stats.questions;
        for (std::size_t ki = 0; ki < k_values.size(); ++ki) {
            const double p = pass_at_k(n, correct, k_values[ki]);
            stats.pass_rates[ki] += p;
            report.aggregate_pass[ki] += p;
        }
    }

    for (auto& [key, stats] : tier_stats) {
        for (double& p : stats.pass_rates) {
            p /= stats.questions;
        }
        report.tiers.push_back(std::move(stats));
    }
    for (double& p : report.aggregate_pass) {
        p /= static_cast<double>(questions.size());
    }
    report.mean_response_length /= static_cast<double>(questions.size()) * n;
    report.mean_entropy = token_count > 0 ? token_entropy_sum / token_count : 0.0;
    return report;
}

void EvalReport::write_json(std::ostream& out) const {
    nlohmann::ordered_json j;
    j["samples_per_question"] = samples_per_question;
    j["k"] = k_values;
    j["aggregate_pass"] = aggregate_pass;
    j["mean_response_length"] = mean_response_length;
    j["mean_entropy"] = mean_entropy;
    auto& tiers_json = j["tiers"] = nlohmann::ordered_json::array();
    for (const TierStats& t : tiers) {
        nlohmann::ordered_json tj;
        tj["task"] = t.task;
        tj["tier"] = t.tier;
        tj["questions"] = t.questions;
        tj["pass"] = t.pass_rates;
        tiers_json.push_back(std::move(tj));
    }
    out << j.dump(2) << "\n";
}

void EvalReport::write_passk_csv(std::ostream& out) const {
    out << "k,aggregate";
    for (const TierStats& t : tiers) {
        out << "," << t.task << "_tier" << t.tier;
    }
    out << "\n";
    for (std::size_t ki = 0; ki < k_values.size(); ++ki) {
        out << k_values[ki] << "," << aggregate_pass[ki];
        for (const TierStats& t : tiers) {
            out << "," << t.pass_rates[ki];
        }
        out << "\n";
    }
}

} // namespace aerlab
