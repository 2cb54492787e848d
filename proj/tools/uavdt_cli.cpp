// Command-line front end. Talks to the simulator only through uavdt.h.
#include "uavdt/uavdt.h"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct Failure {
    uavdt_status status;
};

void check(uavdt_status s)
{
    if (s != UAVDT_OK) {
        std::cerr << "error (" << uavdt_status_name(s) << "): " << uavdt_last_error() << "\n";
        throw Failure{s};
    }
}

struct CString {
    char* p = nullptr;
    ~CString() { uavdt_string_free(p); }
    std::string str() const { return p ? p : ""; }
};

using ConfigPtr = std::unique_ptr<uavdt_config, decltype(&uavdt_config_free)>;

struct Common {
    std::string config_path;
    std::string preset;
    std::string variant;
    std::string out_dir = ".";
    long long seed = -1;
};

ConfigPtr make_config(const Common& c)
{
    uavdt_config* raw = nullptr;
    if (!c.config_path.empty())
        check(uavdt_config_load(c.config_path.c_str(), c.preset.empty() ? nullptr : c.preset.c_str(), &raw));
    else
        check(uavdt_config_preset(c.preset.empty() ? "desk" : c.preset.c_str(), &raw));
    ConfigPtr cfg(raw, &uavdt_config_free);
    if (c.seed >= 0)
        check(uavdt_config_set_seed(cfg.get(), static_cast<uint64_t>(c.seed)));
    if (!c.variant.empty())
        check(uavdt_config_set_variant(cfg.get(), c.variant.c_str()));
    CString warn;
    check(uavdt_config_warnings(cfg.get(), &warn.p));
    if (!warn.str().empty())
        std::cerr << "warning: " << warn.str();
    return cfg;
}

uint64_t config_seed(const uavdt_config* cfg)
{
    uint64_t seed = 0;
    check(uavdt_config_seed(cfg, &seed));
    return seed;
}

void write_file(const std::string& path, const std::string& text)
{
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty())
        std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string join(const std::string& dir, const std::string& name) { return (std::filesystem::path(dir) / name).string(); }

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"UAV digital-twin trajectory design simulator"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "TOML config file")->check(CLI::ExistingFile);
        sub->add_option("--preset", common.preset, "Base preset")->check(CLI::IsMember({"paper", "desk"}));
        sub->add_option("--seed", common.seed, "Master seed (overrides the config)")->check(CLI::NonNegativeNumber);
        sub->add_option("--variant", common.variant, "td3-dt, td3-nodt, ddpg-dt or ddpg-nodt");
        sub->add_option("--out-dir", common.out_dir, "Output directory");
    };

    auto* gen = app.add_subcommand("gen-env", "Generate a ground-truth environment map (JSON)");
    add_common(gen);

    auto* sched = app.add_subcommand("schedule", "Anneal the GU service order for a map");
    std::string env_path;
    add_common(sched);
    sched->add_option("--env", env_path, "Environment JSON (default: generated from --seed)")->check(CLI::ExistingFile);

    auto* train = app.add_subcommand("train", "Train an agent");
    int episodes = 0;
    bool resume = false, quiet = false;
    add_common(train);
    train->add_option("--episodes", episodes, "Override the episode budget")->check(CLI::PositiveNumber);
    train->add_flag("--resume", resume, "Continue from the checkpoint in --out-dir");
    train->add_flag("--quiet", quiet, "No per-episode progress");

    auto* eval = app.add_subcommand("eval", "Evaluate a policy on deterministic maps");
    std::string policy = "random";
    int eval_episodes = 0;
    bool trajectories = false;
    add_common(eval);
    eval->add_option("--policy", policy, "Checkpoint path, 'random' or 'untrained'");
    eval->add_option("--episodes", eval_episodes, "Number of eval maps (default: run.eval_episodes)");
    eval->add_flag("--trajectories", trajectories, "Write one trajectory JSON per episode");

    auto* sweep = app.add_subcommand("sweep", "Mission time along one scenario axis");
    std::string axis;
    std::vector<double> values;
    std::vector<std::string> policies;
    int seeds = 10;
    add_common(sweep);
    sweep->add_option("--axis", axis, "data_volume, gu_count or obstacle_ratio")->required();
    sweep->add_option("--values", values, "Axis values")->required()->delimiter(',');
    sweep->add_option("--seeds", seeds, "Maps per point")->check(CLI::PositiveNumber);
    sweep->add_option("--policy", policies, "variant=checkpoint|random|untrained (repeatable)")->required();

    auto* plot = app.add_subcommand("plot", "Render a trajectory JSON as SVG");
    std::string input, output;
    plot->add_option("input", input, "Trajectory JSON")->required()->check(CLI::ExistingFile);
    plot->add_option("-o,--output", output, "SVG path (default: input with .svg)");

    auto* link = app.add_subcommand("link-budget", "Path loss and rate against distance (CSV)");
    double d_min = 10, d_max = 1000, step = 10;
    add_common(link);
    link->add_option("--d-min", d_min, "m");
    link->add_option("--d-max", d_max, "m");
    link->add_option("--step", step, "m");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            auto cfg = make_config(common);
            const auto seed = config_seed(cfg.get());
            CString json;
            check(uavdt_gen_env(cfg.get(), seed, &json.p));
            const auto path = join(common.out_dir, "environment.json");
            write_file(path, json.str());
            std::cout << path << "\n";
        } else if (*sched) {
            auto cfg = make_config(common);
            const auto seed = config_seed(cfg.get());
            const std::string env = env_path.empty() ? "" : read_file(env_path);
            CString csv;
            uavdt_schedule_info info{};
            check(uavdt_schedule(cfg.get(), seed, env_path.empty() ? nullptr : env.c_str(), &csv.p, &info));
            write_file(join(common.out_dir, "schedule.csv"), csv.str());
            std::printf("users=%d length=%.3f m classical=%.3f m\n", info.users, info.length, info.classical_length);
        } else if (*train) {
            auto cfg = make_config(common);
            if (episodes > 0)
                check(uavdt_config_set_episodes(cfg.get(), episodes));
            uavdt_progress_fn cb = nullptr;
            if (!quiet)
                cb = [](int e, double r, int served, int users, void*) {
                    std::fprintf(stderr, "episode %d reward %.3f served %d/%d\n", e, r, served, users);
                };
            uavdt_train_stats st{};
            check(uavdt_train(cfg.get(), common.out_dir.c_str(), resume ? 1 : 0, cb, nullptr, &st));
            std::printf("episodes=%d steps=%lld vetoes=%d collisions=%d wall=%.1f s\n", st.episodes, st.steps,
                        st.vetoes, st.collisions, st.wall_seconds);
        } else if (*eval) {
            auto cfg = make_config(common);
            int n = eval_episodes;
            if (n <= 0)
                check(uavdt_config_eval_episodes(cfg.get(), &n));
            uavdt_eval_stats st{};
            check(uavdt_eval(cfg.get(), policy.c_str(), n, common.out_dir.c_str(), trajectories ? 1 : 0, &st));
            std::printf("episodes=%d completed=%d served=%.3f mean_mission_time=%.2f s std=%.2f s collisions=%d\n",
                        st.episodes, st.completed, st.served_fraction, st.mean_mission_time, st.std_mission_time,
                        st.collisions);
        } else if (*sweep) {
            auto cfg = make_config(common);
            std::vector<std::string> vnames, vpols;
            for (const auto& p : policies) {
                const auto eq = p.find('=');
                if (eq == std::string::npos) {
                    std::cerr << "error: --policy expects variant=policy, got '" << p << "'\n";
                    return 2;
                }
                vnames.push_back(p.substr(0, eq));
                vpols.push_back(p.substr(eq + 1));
            }
            std::vector<const char*> vn, vp;
            for (std::size_t i = 0; i < vnames.size(); ++i) {
                vn.push_back(vnames[i].c_str());
                vp.push_back(vpols[i].c_str());
            }
            std::vector<int> flags(vn.size(), 0);
            check(uavdt_sweep(cfg.get(), axis.c_str(), values.data(), values.size(), seeds, vn.data(), vp.data(),
                              vn.size(), common.out_dir.c_str(), flags.data()));
            for (std::size_t i = 0; i < vn.size(); ++i)
                std::printf("%s non_decreasing=%s\n", vn[i], flags[i] ? "true" : "false");
        } else if (*plot) {
            CString svg;
            check(uavdt_plot(read_file(input).c_str(), &svg.p));
            if (output.empty())
                output = std::filesystem::path(input).replace_extension(".svg").string();
            write_file(output, svg.str());
            std::cout << output << "\n";
        } else if (*link) {
            auto cfg = make_config(common);
            CString csv;
            check(uavdt_link_budget(cfg.get(), d_min, d_max, step, &csv.p));
            write_file(join(common.out_dir, "link_budget.csv"), csv.str());
        }
    } catch (const Failure& f) {
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
