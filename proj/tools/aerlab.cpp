// Command-line front end: train / eval / sweep / plot over run directories.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "aerlab/config.hpp"
#include "aerlab/eval.hpp"
#include "aerlab/metrics.hpp"
#include "aerlab/svg.hpp"
#include "aerlab/trainer.hpp"

namespace fs = std::filesystem;
using namespace aerlab;

namespace {

Config load_config(const std::string& path, const std::vector<std::string>& sets,
                   const std::string& seed_override) {
    Config config = Config::from_file(path);
    for (const std::string& s : sets) {
        config.set_assignment(s);
    }
    if (!seed_override.empty()) {
        config.set("seed", seed_override);
    }
    return config;
}

std::string checkpoint_name(std::int64_t step, bool final) {
    if (final) {
        return "checkpoint_final.bin";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "checkpoint_%06lld.bin", static_cast<long long>(step));
    return buf;
}

void save_checkpoint_file(const fs::path& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw data_error("cannot write checkpoint: " + path.string());
    }
    write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint_file(const fs::path& path, const PolicyShape& shape) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw data_error("cannot open checkpoint: " + path.string());
    }
    return read_checkpoint(in, shape);
}

int run_train(const Config& config, const fs::path& out_dir, const std::string& name,
              const std::string& resume_path) {
    const TrainConfig train_config = config.to_train_config();
    const fs::path run_dir = out_dir / name;
    if (fs::exists(run_dir)) {
        throw config_error("run directory already exists: " + run_dir.string());
    }
    fs::create_directories(run_dir);

    {
        std::ofstream snap(run_dir / "config.snapshot");
        snap << config.serialize();
    }

    std::ofstream metrics_out(run_dir / "metrics.jsonl");
    std::ofstream groups_out;
    if (config.log_groups()) {
        groups_out.open(run_dir / "groups.jsonl");
    }

    TrainSinks sinks;
    sinks.on_metric = [&](const MetricRecord& r) {
        metrics_out << metric_to_json_line(r) << "\n";
        metrics_out.flush();
    };
    if (config.log_groups()) {
        sinks.on_groups = [&](const GroupRecord& r) {
            groups_out << groups_to_json_line(r) << "\n";
            groups_out.flush();
        };
    }
    sinks.on_checkpoint = [&](const Checkpoint& c) {
        save_checkpoint_file(
            run_dir / checkpoint_name(c.iteration, c.iteration == train_config.iterations), c);
    };

    std::optional<Checkpoint> resume;
    if (!resume_path.empty()) {
        resume = load_checkpoint_file(resume_path, train_config.policy_shape());
    }

    const TrainResult result = train(train_config, sinks, resume);
    save_checkpoint_file(run_dir / "checkpoint_final.bin", result.final_checkpoint);

    const MetricRecord& last = result.metrics.back();
    std::cout << "run " << name << " finished: step=" << last.step
              << " mean_reward=" << last.mean_reward << " batch_entropy=" << last.batch_entropy
              << " pass1=" << last.pass1 << "\n";
    std::cout << "outputs in " << run_dir.string() << "\n";
    return 0;
}

int run_eval(const std::string& run_dir, const std::string& config_path,
             const std::string& checkpoint_path, const std::vector<std::string>& sets,
             int n_override, const std::string& seed_override, const std::string& out_prefix) {
    std::string cfg_path = config_path;
    std::string ckpt_path = checkpoint_path;
    if (!run_dir.empty()) {
        if (cfg_path.empty()) {
            cfg_path = (fs::path(run_dir) / "config.snapshot").string();
        }
        if (ckpt_path.empty()) {
            ckpt_path = (fs::path(run_dir) / "checkpoint_final.bin").string();
        }
    }
    if (cfg_path.empty() || ckpt_path.empty()) {
        throw config_error("eval needs --run or both --config and --checkpoint");
    }

    const Config config = load_config(cfg_path, sets, seed_override);
    const TrainConfig train_config = config.to_train_config();
    const Checkpoint ckpt = load_checkpoint_file(ckpt_path, train_config.policy_shape());

    const int n = n_override > 0 ? n_override : config.eval_n();
    std::vector<int> ks;
    for (int k : config.eval_k_list()) {
        if (k <= n) {
            ks.push_back(k);
        }
    }
    if (ks.empty()) {
        throw config_error("eval: no k values <= n");
    }

    const TaskLibrary lib = train_config.task_library();
    const std::vector<Question> questions = build_eval_questions(train_config);
    RngStream rng = RngStream::derive(train_config.seed, {0xE7A1u});
    const EvalReport report = evaluate(ckpt.params, lib, questions, n, ks,
                                       train_config.max_len, rng,
                                       train_config.eval_temperature);

    fs::path prefix = out_prefix.empty()
                          ? (run_dir.empty() ? fs::path("eval") : fs::path(run_dir) / "eval")
                          : fs::path(out_prefix);
    if (prefix.has_parent_path()) {
        fs::create_directories(prefix.parent_path());
    }
    {
        std::ofstream json_out(prefix.string() + ".json");
        report.write_json(json_out);
    }
    {
        std::ofstream csv_out(run_dir.empty() ? prefix.string() + "_passk.csv"
                                              : (fs::path(run_dir) / "passk.csv").string());
        report.write_passk_csv(csv_out);
    }

    std::cout << "n=" << n << " questions=" << questions.size() << "\n";
    for (std::size_t ki = 0; ki < report.k_values.size(); ++ki) {
        std::cout << "pass@" << report.k_values[ki] << " = " << report.aggregate_pass[ki] << "\n";
    }
    for (const auto& tier : report.tiers) {
        std::cout << "  " << tier.task << " tier " << tier.tier << ": pass@1=" << tier.pass_rates[0]
                  << "\n";
    }
    return 0;
}

struct GridAxis {
    std::string key;
    std::vector<std::string> values;
};

struct SweepRun {
    std::string name;
    std::vector<std::string> values;
    Config config;
};

std::string self_binary() {
    std::error_code ec;
    const fs::path exe = fs::read_symlink("/proc/self/exe", ec);
    return ec ? "aerlab" : exe.string();
}

int run_sweep(const Config& base, const std::vector<std::string>& grids, const fs::path& out_dir,
              const std::string& base_name, int parallel) {
    if (grids.empty()) {
        throw contract_error("sweep: at least one --grid KEY=V1,V2,... required");
    }
    std::vector<GridAxis> axes;
    for (const std::string& g : grids) {
        const auto eq = g.find('=');
        if (eq == std::string::npos) {
            throw config_error("--grid expects KEY=V1,V2,..., got '" + g + "'");
        }
        GridAxis axis;
        axis.key = g.substr(0, eq);
        std::istringstream vals(g.substr(eq + 1));
        std::string v;
        while (std::getline(vals, v, ',')) {
            if (!v.empty()) {
                axis.values.push_back(v);
            }
        }
        if (axis.values.empty()) {
            throw config_error("--grid '" + axis.key + "' has no values");
        }
        axes.push_back(std::move(axis));
    }

    std::vector<SweepRun> runs;
    std::vector<std::size_t> index(axes.size(), 0);
    bool done = false;
    while (!done) {
        SweepRun run{base_name, {}, base};
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const std::string& value = axes[a].values[index[a]];
            run.config.set(axes[a].key, value);
            run.values.push_back(value);
            run.name += "_" + axes[a].key + "-" + value;
        }
        runs.push_back(std::move(run));
        done = true;
        for (std::size_t a = axes.size(); a-- > 0;) {
            if (++index[a] < axes[a].values.size()) {
                done = false;
                break;
            }
            index[a] = 0;
        }
    }

    fs::create_directories(out_dir);
    if (parallel <= 1) {
        for (const SweepRun& run : runs) {
            run_train(run.config, out_dir, run.name, "");
        }
    } else {
        // independent child processes, bounded fan-out, disjoint run dirs
        const std::string self = self_binary();
        for (std::size_t start = 0; start < runs.size();
             start += static_cast<std::size_t>(parallel)) {
            std::vector<std::future<int>> chunk;
            const std::size_t end =
                std::min(runs.size(), start + static_cast<std::size_t>(parallel));
            for (std::size_t i = start; i < end; ++i) {
                const fs::path cfg_path = out_dir / (runs[i].name + ".cfg");
                std::ofstream(cfg_path) << runs[i].config.serialize();
                const std::string cmd = self + " train --config " + cfg_path.string() +
                                        " --out " + out_dir.string() + " --name " + runs[i].name +
                                        " > /dev/null";
                chunk.push_back(std::async(std::launch::async,
                                           [cmd] { return std::system(cmd.c_str()); }));
            }
            for (std::size_t i = start; i < end; ++i) {
                if (chunk[i - start].get() != 0) {
                    throw data_error("sweep run '" + runs[i].name + "' failed");
                }
            }
        }
    }

    std::ofstream summary(out_dir / "summary.csv");
    summary << "run";
    for (const GridAxis& a : axes) {
        summary << "," << a.key;
    }
    summary << ",mean_reward,batch_entropy,alpha,target_entropy,lambda_mean,frac_hard,"
               "mean_resp_len,pass1\n";
    for (const SweepRun& run : runs) {
        const auto metrics = read_metrics_file((out_dir / run.name / "metrics.jsonl").string());
        const MetricRecord& last = metrics.back();
        summary << run.name;
        for (const std::string& v : run.values) {
            summary << "," << v;
        }
        summary << "," << last.mean_reward << "," << last.batch_entropy << "," << last.alpha
                << "," << last.target_entropy << "," << last.lambda_mean << "," << last.frac_hard
                << "," << last.mean_resp_len << "," << last.pass1 << "\n";
    }

    std::cout << runs.size() << " runs; summary in " << (out_dir / "summary.csv").string()
              << "\n";
    return 0;
}

int run_plot(const std::string& kind, const std::vector<std::string>& run_dirs,
             const std::string& out_path) {
    if (run_dirs.empty()) {
        throw config_error("plot: at least one run directory required");
    }
    ChartSpec spec;
    spec.x_label = "step";

    if (kind == "passk") {
        spec.title = "pass@k";
        spec.x_label = "k";
        spec.y_label = "pass@k";
        spec.log2_x = true;
        for (const std::string& dir : run_dirs) {
            const fs::path csv_path = fs::path(dir) / "passk.csv";
            std::ifstream in(csv_path);
            if (!in) {
                throw data_error("missing " + csv_path.string() + " (run `aerlab eval` first)");
            }
            ChartSeries series;
            series.label = fs::path(dir).filename().string();
            std::string line;
            std::getline(in, line); // header
            while (std::getline(in, line)) {
                std::istringstream row(line);
                std::string cell;
                std::getline(row, cell, ',');
                const double k = std::stod(cell);
                std::getline(row, cell, ',');
                series.x.push_back(k);
                series.y.push_back(std::stod(cell));
            }
            if (spec.x_ticks.empty()) {
                spec.x_ticks = series.x;
            }
            spec.series.push_back(std::move(series));
        }
    } else {
        std::string key = kind;
        if (kind == "entropy") {
            spec.title = "policy entropy";
            spec.y_label = "batch entropy (nats)";
        } else if (kind == "reward") {
            spec.title = "training reward";
            spec.y_label = "mean reward";
        } else if (kind == "length") {
            spec.title = "response length";
            spec.y_label = "mean response length (tokens)";
        } else {
            throw config_error("unknown plot kind '" + kind +
                               "' (expected entropy|reward|passk|length)");
        }

        for (const std::string& dir : run_dirs) {
            const auto metrics = read_metrics_file((fs::path(dir) / "metrics.jsonl").string());
            if (metrics.empty()) {
                throw data_error("no metric records in " + dir);
            }
            ChartSeries series;
            series.label =
                fs::path(dir).filename().string() + " (" + metrics.front().mode + ")";
            for (const MetricRecord& r : metrics) {
                series.x.push_back(r.step);
                if (kind == "entropy") {
                    series.y.push_back(r.batch_entropy);
                } else if (kind == "reward") {
                    series.y.push_back(r.mean_reward);
                } else {
                    series.y.push_back(r.mean_resp_len);
                }
            }
            if (kind == "entropy" && !spec.reference_line) {
                const double target = metrics.back().target_entropy;
                if (target > 0.0) {
                    spec.reference_line = target;
                    spec.reference_band = std::make_pair(0.75 * target, 1.25 * target);
                }
            }
            spec.series.push_back(std::move(series));
        }
    }

    std::ofstream out(out_path);
    if (!out) {
        throw data_error("cannot write " + out_path);
    }
    write_svg(out, spec);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale GRPO training lab with adaptive entropy regularization"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir = "runs";
    std::string name = "run";
    std::string seed_override;
    std::string resume_path;

    auto* train_cmd = app.add_subcommand("train", "train a policy and log metrics");
    train_cmd->add_option("--config", config_path, "config file")->required();
    train_cmd->add_option("--set", sets, "override KEY=VALUE (repeatable)");
    train_cmd->add_option("--out", out_dir, "output directory");
    train_cmd->add_option("--name", name, "run name (unique within --out)");
    train_cmd->add_option("--seed", seed_override, "seed override");
    train_cmd->add_option("--resume", resume_path, "checkpoint to resume from");

    std::string eval_run;
    std::string eval_checkpoint;
    std::string eval_out;
    int eval_n = 0;

    auto* eval_cmd = app.add_subcommand("eval", "evaluate pass@k on held-out questions");
    eval_cmd->add_option("--run", eval_run, "run directory (config.snapshot + final checkpoint)");
    eval_cmd->add_option("--config", config_path, "config file");
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint file");
    eval_cmd->add_option("--set", sets, "override KEY=VALUE (repeatable)");
    eval_cmd->add_option("--n", eval_n, "samples per question");
    eval_cmd->add_option("--seed", seed_override, "seed override");
    eval_cmd->add_option("--out", eval_out, "output prefix for eval.json");

    std::vector<std::string> grids;
    int sweep_parallel = 1;

    auto* sweep_cmd = app.add_subcommand("sweep", "Cartesian parameter sweep");
    sweep_cmd->add_option("--config", config_path, "config file")->required();
    sweep_cmd->add_option("--set", sets, "override KEY=VALUE (repeatable)");
    sweep_cmd->add_option("--grid", grids, "KEY=V1,V2,... (repeatable)")->required();
    sweep_cmd->add_option("--out", out_dir, "output directory");
    sweep_cmd->add_option("--name", name, "base run name");
    sweep_cmd->add_option("--seed", seed_override, "seed override");
    sweep_cmd->add_option("--parallel", sweep_parallel, "max concurrent runs (processes)");

    std::string plot_kind;
    std::vector<std::string> plot_runs;
    std::string plot_out = "plot.svg";

    auto* plot_cmd = app.add_subcommand("plot", "render SVG charts from run directories");
    plot_cmd->add_option("--kind", plot_kind, "entropy|reward|passk|length")->required();
    plot_cmd->add_option("runs", plot_runs, "run directories")->required();
    plot_cmd->add_option("--out", plot_out, "output SVG path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd) {
            return run_train(load_config(config_path, sets, seed_override), out_dir, name,
                             resume_path);
        }
        if (*eval_cmd) {
            return run_eval(eval_run, config_path, eval_checkpoint, sets, eval_n, seed_override,
                            eval_out);
        }
        if (*sweep_cmd) {
            return run_sweep(load_config(config_path, sets, seed_override), grids, out_dir, name,
                             sweep_parallel);
        }
        if (*plot_cmd) {
            return run_plot(plot_kind, plot_runs, plot_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
