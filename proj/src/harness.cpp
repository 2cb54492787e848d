#include "uavdt/harness.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace uavdt {

namespace fs = std::filesystem;

std::string csv_num(double v)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string csv_banner(const std::string& kind, const SimConfig& cfg)
{
    return "# " + kind + " variant=" + variant_name(cfg) + " preset=" + cfg.preset + " config_hash="
           + hex64(config_hash(cfg)) + " seed=" + std::to_string(cfg.seed) + "\n";
}

void ensure_dir(const std::string& path)
{
    if (path.empty())
        return;
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec)
        throw IoError("cannot create directory '" + path + "': " + ec.message());
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out)
        throw IoError("write to '" + path + "' failed");
}

std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::string join_path(const std::string& dir, const std::string& name)
{
    return dir.empty() ? name : (fs::path(dir) / name).string();
}

constexpr const char* kTrainHeader =
    "episode,total_reward,smoothed_reward,served,users,vetoes,collisions,t_f,mission_time_s,critic_loss\n";

double mean_of(const std::deque<double>& v)
{
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

TrainResult run_train(const SimConfig& cfg, const std::string& out_dir, bool resume,
                      const std::function<void(const EpisodeSummary&)>& progress)
{
    ensure_dir(out_dir);
    TrainResult res;
    res.checkpoint_path = join_path(out_dir, "checkpoint.bin");
    res.csv_path = join_path(out_dir, "train.csv");
    const std::string rng_path = join_path(out_dir, "rng_state.txt");
    const std::string timing_path = join_path(out_dir, "train_timing.csv");
    const double slot_s = cfg.timing.slot();
    const double cap_s = cfg.timing.max_slots * slot_s;

    Simulation sim(cfg);
    Agent agent(cfg, derive_seed(cfg.seed, 7));
    int first = 0;
    long long steps = 0;
    std::deque<double> window;
    std::string csv, timing;

    if (resume && fs::exists(res.checkpoint_path)) {
        const auto ckpt = nn::read_checkpoint(res.checkpoint_path);
        if (ckpt.meta.count("config_hash") && ckpt.meta.at("config_hash") != hex64(config_hash(cfg)))
            throw ConfigError("resume: checkpoint was trained with a different config (hash "
                              + ckpt.meta.at("config_hash") + ")");
        agent.restore(ckpt);
        agent.set_rng_state(read_text(rng_path));
        first = std::stoi(ckpt.meta.at("episodes_done"));
        steps = std::stoll(ckpt.meta.at("total_steps"));
        csv = read_text(res.csv_path);
        if (fs::exists(timing_path))
            timing = read_text(timing_path);
        // Rebuild the smoothing window from the rows already written.
        std::istringstream in(csv);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#' || line.rfind("episode", 0) == 0)
                continue;
            const auto a = line.find(',');
            const auto b = line.find(',', a + 1);
            window.push_back(std::stod(line.substr(a + 1, b - a - 1)));
            if (window.size() > 20)
                window.pop_front();
        }
    } else {
        csv = csv_banner("train", cfg) + kTrainHeader;
        timing = "episode,wall_time_s\n";
    }

    const auto t0 = std::chrono::steady_clock::now();
    const int remaining = std::max(0, cfg.td3.episodes - first);
    train(sim, agent, first, remaining, cfg.seed, steps, [&](const EpisodeSummary& s) {
        window.push_back(s.total_reward);
        if (window.size() > 20)
            window.pop_front();
        const double mission = s.t_f ? *s.t_f * slot_s : cap_s;
        csv += std::to_string(s.episode) + "," + csv_num(s.total_reward) + "," + csv_num(mean_of(window)) + ","
               + std::to_string(s.served) + "," + std::to_string(s.users) + "," + std::to_string(s.vetoes) + ","
               + std::to_string(s.collisions) + "," + (s.t_f ? std::to_string(*s.t_f) : "") + "," + csv_num(mission)
               + "," + csv_num(s.critic_loss) + "\n";
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", wall);
        timing += std::to_string(s.episode) + "," + buf + "\n";
        res.vetoes += s.vetoes;
        res.collisions += s.collisions;
        ++res.episodes;
        if (progress)
            progress(s);
    });
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.steps = steps;
    res.critic_updates = agent.critic_updates();
    res.actor_updates = agent.actor_updates();

    auto ckpt = agent.checkpoint();
    ckpt.meta["config_hash"] = hex64(config_hash(cfg));
    ckpt.meta["variant"] = variant_name(cfg);
    ckpt.meta["episodes_done"] = std::to_string(first + remaining);
    ckpt.meta["total_steps"] = std::to_string(steps);
    nn::write_checkpoint(res.checkpoint_path, ckpt);
    write_text(rng_path, agent.rng_state());
    write_text(res.csv_path, csv);
    write_text(timing_path, timing);
    return res;
}

Policy checkpoint_policy(const SimConfig& cfg, const std::string& checkpoint_path)
{
    const auto ckpt = nn::read_checkpoint(checkpoint_path);
    SimConfig c = cfg;
    if (auto it = ckpt.meta.find("algorithm"); it != ckpt.meta.end())
        c.mode.algorithm = it->second == "ddpg" ? Algorithm::Ddpg : Algorithm::Td3;
    // Only the actor is needed; a small buffer keeps the agent light.
    c.td3.buffer_capacity = std::max(1, c.td3.batch_size);
    auto agent = std::make_shared<Agent>(c, 0);
    agent->restore(ckpt);
    return [agent](const StateTensor& s) { return agent->exploit(s); };
}

Policy random_policy(std::uint64_t seed)
{
    auto rng = std::make_shared<Rng>(seed);
    return [rng](const StateTensor&) {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        return ActionVec{u(*rng), u(*rng), u(*rng)};
    };
}

Policy untrained_policy(const SimConfig& cfg, std::uint64_t seed)
{
    SimConfig c = cfg;
    c.td3.buffer_capacity = std::max(1, c.td3.batch_size);
    auto agent = std::make_shared<Agent>(c, seed);
    return [agent](const StateTensor& s) { return agent->exploit(s); };
}

std::uint64_t eval_seed(const SimConfig& cfg, int index)
{
    return derive_seed(cfg.seed, 0x20000000u + static_cast<std::uint64_t>(index));
}

EvalEpisode run_episode(Simulation& sim, const Policy& policy, std::uint64_t seed, int index,
                        const std::string& trajectory_path, int snapshot_stride)
{
    const auto& cfg = sim.config();
    StateTensor s = sim.reset(seed, RunMode::Deploy, cfg.mode.dt_enabled);
    nlohmann::ordered_json snapshots = nlohmann::ordered_json::array();
    while (!sim.done()) {
        s = sim.step(to_physical(policy(s), cfg.kinematics.v_max)).state;
        if (snapshot_stride > 0 && sim.slot() % snapshot_stride == 0)
            snapshots.push_back(nlohmann::ordered_json::parse(sim.twin().to_json()));
    }
    const double slot_s = cfg.timing.slot();
    EvalEpisode e;
    e.index = index;
    e.seed = seed;
    e.users = static_cast<int>(sim.map().users.size());
    e.served = sim.served_count();
    e.t_f = sim.log().t_f;
    e.mission_time = e.t_f ? *e.t_f * slot_s : cfg.timing.max_slots * slot_s;
    for (const auto& tk : sim.log().t_k)
        e.sum_tk_time += (tk ? *tk : cfg.timing.max_slots) * slot_s;
    e.vetoes = sim.log().vetoes;
    e.collisions = sim.log().collisions;
    e.total_reward = sim.log().total_reward;
    e.obstacle_ratio = sim.map().obstacle_ratio();
    if (!trajectory_path.empty()) {
        auto doc = nlohmann::ordered_json::parse(episode_to_json(sim, slot_s));
        if (snapshot_stride > 0)
            doc["ve_snapshots"] = std::move(snapshots);
        write_text(trajectory_path, doc.dump(2) + "\n");
    }
    return e;
}

namespace {

void summarize(EvalSummary& s)
{
    const auto n = static_cast<double>(s.episodes.size());
    if (s.episodes.empty())
        return;
    double sum = 0.0, served = 0.0, users = 0.0, vetoes = 0.0;
    for (const auto& e : s.episodes) {
        sum += e.mission_time;
        served += e.served;
        users += e.users;
        vetoes += e.vetoes;
        s.completed += e.all_served() ? 1 : 0;
        s.collisions += e.collisions;
    }
    s.mean_mission_time = sum / n;
    double var = 0.0;
    for (const auto& e : s.episodes)
        var += (e.mission_time - s.mean_mission_time) * (e.mission_time - s.mean_mission_time);
    s.std_mission_time = std::sqrt(var / n);
    s.served_fraction = users > 0 ? served / users : 0.0;
    s.mean_vetoes = vetoes / n;
}

} // namespace

EvalSummary run_eval(const SimConfig& cfg, const Policy& policy, int n_episodes, const std::string& out_dir,
                     bool trajectories)
{
    if (n_episodes < 1)
        throw ConfigError("eval needs at least one episode");
    ensure_dir(out_dir);
    Simulation sim(cfg);
    EvalSummary s;
    s.variant = variant_name(cfg);
    for (int i = 0; i < n_episodes; ++i) {
        std::string traj;
        if (trajectories && !out_dir.empty())
            traj = join_path(out_dir, "trajectory_" + std::to_string(i) + ".json");
        s.episodes.push_back(run_episode(sim, policy, eval_seed(cfg, i), i, traj, cfg.snapshot_stride));
    }
    summarize(s);
    if (!out_dir.empty())
        write_text(join_path(out_dir, "eval.csv"), eval_csv(cfg, s));
    return s;
}

std::string eval_csv(const SimConfig& cfg, const EvalSummary& s)
{
    std::string out = csv_banner("eval", cfg);
    out += "episode,seed,served,users,all_served,t_f,mission_time_s,sum_tk_s,vetoes,collisions,total_reward\n";
    for (const auto& e : s.episodes)
        out += std::to_string(e.index) + "," + std::to_string(e.seed) + "," + std::to_string(e.served) + ","
               + std::to_string(e.users) + "," + (e.all_served() ? "1" : "0") + ","
               + (e.t_f ? std::to_string(*e.t_f) : "") + "," + csv_num(e.mission_time) + "," + csv_num(e.sum_tk_time)
               + "," + std::to_string(e.vetoes) + "," + std::to_string(e.collisions) + "," + csv_num(e.total_reward)
               + "\n";
    return out;
}

SweepAxis parse_axis(const std::string& name)
{
    if (name == "data_volume")
        return SweepAxis::DataVolume;
    if (name == "gu_count")
        return SweepAxis::GuCount;
    if (name == "obstacle_ratio")
        return SweepAxis::ObstacleRatio;
    throw ConfigError("unknown sweep axis '" + name + "' (expected data_volume, gu_count or obstacle_ratio)");
}

const char* to_string(SweepAxis axis)
{
    switch (axis) {
    case SweepAxis::DataVolume: return "data_volume";
    case SweepAxis::GuCount: return "gu_count";
    case SweepAxis::ObstacleRatio: return "obstacle_ratio";
    }
    return "unknown";
}

SimConfig apply_axis(SimConfig cfg, SweepAxis axis, double value)
{
    switch (axis) {
    case SweepAxis::DataVolume: cfg.world.demand_bits = value * 1e6; break;
    case SweepAxis::GuCount: cfg.world.user_count = static_cast<int>(std::lround(value)); break;
    case SweepAxis::ObstacleRatio: cfg.world.obstacle_ratio = value; break;
    }
    validate_config(cfg);
    return cfg;
}

namespace {

std::string svg_num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string sweep_svg(const SweepSpec& spec, const std::vector<SweepPoint>& points)
{
    const double w = 560, h = 360, ml = 60, mr = 130, mt = 30, mb = 50;
    double x_lo = *std::min_element(spec.values.begin(), spec.values.end());
    double x_hi = *std::max_element(spec.values.begin(), spec.values.end());
    if (x_hi == x_lo)
        x_hi = x_lo + 1;
    double y_hi = 0;
    for (const auto& p : points)
        y_hi = std::max(y_hi, p.mean + p.stddev);
    if (y_hi <= 0)
        y_hi = 1;
    auto px = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * (w - ml - mr); };
    auto py = [&](double y) { return h - mb - y / y_hi * (h - mt - mb); };

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_num(w) + "\" height=\"" + svg_num(h)
                    + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<line x1=\"" + svg_num(ml) + "\" y1=\"" + svg_num(h - mb) + "\" x2=\"" + svg_num(w - mr) + "\" y2=\""
         + svg_num(h - mb) + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + svg_num(ml) + "\" y1=\"" + svg_num(mt) + "\" x2=\"" + svg_num(ml) + "\" y2=\""
         + svg_num(h - mb) + "\" stroke=\"black\"/>\n";
    for (double v : spec.values)
        s += "<text x=\"" + svg_num(px(v)) + "\" y=\"" + svg_num(h - mb + 16) + "\" text-anchor=\"middle\">"
             + csv_num(v) + "</text>\n";
    for (int i = 0; i <= 4; ++i) {
        const double y = y_hi * i / 4;
        s += "<text x=\"" + svg_num(ml - 6) + "\" y=\"" + svg_num(py(y) + 4) + "\" text-anchor=\"end\">"
             + svg_num(y) + "</text>\n";
    }
    s += "<text x=\"" + svg_num((ml + w - mr) / 2) + "\" y=\"" + svg_num(h - 12) + "\" text-anchor=\"middle\">"
         + to_string(spec.axis) + "</text>\n";
    s += "<text x=\"14\" y=\"" + svg_num(h / 2) + "\" transform=\"rotate(-90 14 " + svg_num(h / 2)
         + ")\" text-anchor=\"middle\">mission time (s)</text>\n";
    for (std::size_t vi = 0; vi < spec.variants.size(); ++vi) {
        const char* color = kPalette[vi % std::size(kPalette)];
        std::string pts;
        for (const auto& p : points)
            if (p.variant == spec.variants[vi])
                pts += svg_num(px(p.value)) + "," + svg_num(py(p.mean)) + " ";
        if (!pts.empty())
            pts.pop_back();
        s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + pts
             + "\"/>\n";
        for (const auto& p : points)
            if (p.variant == spec.variants[vi])
                s += "<circle cx=\"" + svg_num(px(p.value)) + "\" cy=\"" + svg_num(py(p.mean)) + "\" r=\"3\" fill=\""
                     + color + "\"/>\n";
        const double ly = mt + 16.0 * static_cast<double>(vi);
        s += "<line x1=\"" + svg_num(w - mr + 10) + "\" y1=\"" + svg_num(ly) + "\" x2=\"" + svg_num(w - mr + 30)
             + "\" y2=\"" + svg_num(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        s += "<text x=\"" + svg_num(w - mr + 34) + "\" y=\"" + svg_num(ly + 4) + "\">" + spec.variants[vi]
             + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

} // namespace

SweepResult run_sweep(const SimConfig& cfg, const SweepSpec& spec, const std::map<std::string, Policy>& policies,
                      const std::string& out_dir)
{
    if (spec.values.empty())
        throw ConfigError("sweep needs at least one axis value");
    if (spec.seeds < 1)
        throw ConfigError("sweep needs at least one seed per point");
    if (spec.variants.empty())
        throw ConfigError("sweep needs at least one variant");

    SweepResult res;
    res.csv = csv_banner("sweep", cfg);
    res.csv += "axis,value,seed,variant,mission_time_s,all_served,served,users,vetoes,collisions,obstacle_ratio\n";
    for (const auto& variant : spec.variants) {
        auto pol = policies.find(variant);
        if (pol == policies.end())
            throw ConfigError("sweep: no policy or checkpoint for variant '" + variant + "'");
        bool monotone = true;
        double prev = -1.0;
        for (double value : spec.values) {
            SimConfig c = apply_axis(cfg, spec.axis, value);
            apply_variant(c, variant);
            Simulation sim(c);
            std::vector<double> times;
            for (int k = 0; k < spec.seeds; ++k) {
                const auto e = run_episode(sim, pol->second, eval_seed(cfg, k), k);
                times.push_back(e.mission_time);
                res.csv += std::string(to_string(spec.axis)) + "," + csv_num(value) + "," + std::to_string(k) + ","
                           + variant + "," + csv_num(e.mission_time) + "," + (e.all_served() ? "1" : "0") + ","
                           + std::to_string(e.served) + "," + std::to_string(e.users) + ","
                           + std::to_string(e.vetoes) + "," + std::to_string(e.collisions) + ","
                           + csv_num(e.obstacle_ratio) + "\n";
            }
            SweepPoint p;
            p.value = value;
            p.variant = variant;
            p.mean = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
            double var = 0.0;
            for (double t : times)
                var += (t - p.mean) * (t - p.mean);
            p.stddev = std::sqrt(var / static_cast<double>(times.size()));
            if (p.mean < prev)
                monotone = false;
            prev = p.mean;
            res.points.push_back(p);
        }
        res.non_decreasing[variant] = monotone;
    }

    res.summary_csv = csv_banner("sweep-summary", cfg) + "axis,value,variant,mean_mission_time_s,std_mission_time_s\n";
    for (const auto& p : res.points)
        res.summary_csv += std::string(to_string(spec.axis)) + "," + csv_num(p.value) + "," + p.variant + ","
                           + csv_num(p.mean) + "," + csv_num(p.stddev) + "\n";
    res.summary_csv += "# non_decreasing";
    for (const auto& [v, ok] : res.non_decreasing)
        res.summary_csv += " " + v + "=" + (ok ? "true" : "false");
    res.summary_csv += "\n";
    res.svg = sweep_svg(spec, res.points);

    if (!out_dir.empty()) {
        ensure_dir(out_dir);
        const std::string base = std::string("sweep_") + to_string(spec.axis);
        write_text(join_path(out_dir, base + ".csv"), res.csv);
        write_text(join_path(out_dir, base + "_summary.csv"), res.summary_csv);
        write_text(join_path(out_dir, base + ".svg"), res.svg);
    }
    return res;
}

std::string export_trajectory_plot(const std::string& episode_json)
{
    using json = nlohmann::json;
    json j;
    try {
        j = json::parse(episode_json);
    } catch (const json::exception& e) {
        throw FormatError(std::string("trajectory JSON: ") + e.what());
    }
    double side = 0, max_alt = 0;
    json buildings, users, path, schedule, start;
    try {
        side = j.at("side_xy").get<double>();
        max_alt = j.at("max_alt").get<double>();
        buildings = j.at("buildings");
        users = j.at("users");
        path = j.at("path");
        schedule = j.value("schedule", json::array());
        start = j.at("start");
    } catch (const json::exception& e) {
        throw FormatError(std::string("trajectory JSON: ") + e.what());
    }
    if (!(side > 0) || !(max_alt > 0))
        throw FormatError("trajectory JSON: side_xy and max_alt must be positive");

    const double view = 400, pad = 40, gap = 40, prof_w = 400;
    const double width = pad + view + gap + prof_w + pad, height = pad + view + pad;
    auto tx = [&](double x) { return pad + x / side * view; };
    auto ty = [&](double y) { return pad + view - y / side * view; };
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_num(width) + "\" height=\""
                    + svg_num(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<rect x=\"" + svg_num(pad) + "\" y=\"" + svg_num(pad) + "\" width=\"" + svg_num(view) + "\" height=\""
         + svg_num(view) + "\" fill=\"none\" stroke=\"black\"/>\n";
    s += "<text x=\"" + svg_num(pad) + "\" y=\"" + svg_num(pad - 8) + "\">top view</text>\n";
    for (const auto& b : buildings) {
        const double x0 = b.at("x_min").get<double>(), x1 = b.at("x_max").get<double>();
        const double y0 = b.at("y_min").get<double>(), y1 = b.at("y_max").get<double>();
        const double shade = 0.85 - 0.5 * std::clamp(b.at("height").get<double>() / max_alt, 0.0, 1.0);
        const int g = static_cast<int>(std::lround(255 * shade));
        s += "<rect x=\"" + svg_num(tx(x0)) + "\" y=\"" + svg_num(ty(y1)) + "\" width=\"" + svg_num(tx(x1) - tx(x0))
             + "\" height=\"" + svg_num(ty(y0) - ty(y1)) + "\" fill=\"rgb(" + std::to_string(g) + ","
             + std::to_string(g) + "," + std::to_string(g) + ")\" stroke=\"#444\"/>\n";
    }
    std::vector<int> rank(users.size(), 0);
    for (std::size_t p = 0; p < schedule.size(); ++p) {
        const int k = schedule[p].get<int>();
        if (k >= 0 && static_cast<std::size_t>(k) < rank.size())
            rank[static_cast<std::size_t>(k)] = static_cast<int>(p) + 1;
    }
    for (std::size_t k = 0; k < users.size(); ++k) {
        const double x = users[k].at("x").get<double>(), y = users[k].at("y").get<double>();
        const bool served = users[k].value("served", false);
        s += "<circle cx=\"" + svg_num(tx(x)) + "\" cy=\"" + svg_num(ty(y)) + "\" r=\"5\" fill=\""
             + (served ? "#2ca02c" : "#d62728") + "\"/>\n";
        const int label = rank[k] > 0 ? rank[k] : static_cast<int>(k) + 1;
        s += "<text x=\"" + svg_num(tx(x) + 7) + "\" y=\"" + svg_num(ty(y) - 5) + "\">" + std::to_string(label)
             + "</text>\n";
    }

    const double sx = start.at(0).get<double>(), sy = start.at(1).get<double>(), sz = start.at(2).get<double>();
    std::string top = svg_num(tx(sx)) + "," + svg_num(ty(sy));
    auto px = [&](double i, double n) { return pad + view + gap + (n > 0 ? i / n : 0.0) * prof_w; };
    auto pz = [&](double z) { return pad + view - z / max_alt * view; };
    const double n = static_cast<double>(path.size());
    std::string prof = svg_num(px(0, n)) + "," + svg_num(pz(sz));
    for (std::size_t i = 0; i < path.size(); ++i) {
        top += " " + svg_num(tx(path[i].at("x").get<double>())) + "," + svg_num(ty(path[i].at("y").get<double>()));
        prof += " " + svg_num(px(static_cast<double>(i + 1), n)) + "," + svg_num(pz(path[i].at("z").get<double>()));
    }
    s += "<circle cx=\"" + svg_num(tx(sx)) + "\" cy=\"" + svg_num(ty(sy)) + "\" r=\"4\" fill=\"#1f77b4\"/>\n";
    if (!path.empty())
        s += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"" + top + "\"/>\n";
    if (!path.empty() && j.contains("t_f") && !j["t_f"].is_null()) {
        const auto& last = path.back();
        const double cx = tx(last.at("x").get<double>()), cy = ty(last.at("y").get<double>());
        s += "<path d=\"M" + svg_num(cx - 6) + "," + svg_num(cy - 6) + " L" + svg_num(cx + 6) + "," + svg_num(cy + 6)
             + " M" + svg_num(cx - 6) + "," + svg_num(cy + 6) + " L" + svg_num(cx + 6) + "," + svg_num(cy - 6)
             + "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        s += "<text x=\"" + svg_num(cx + 8) + "\" y=\"" + svg_num(cy + 12) + "\">t_f=" + std::to_string(j["t_f"].get<int>())
             + "</text>\n";
    }

    const double x0 = pad + view + gap;
    s += "<rect x=\"" + svg_num(x0) + "\" y=\"" + svg_num(pad) + "\" width=\"" + svg_num(prof_w) + "\" height=\""
         + svg_num(view) + "\" fill=\"none\" stroke=\"black\"/>\n";
    s += "<text x=\"" + svg_num(x0) + "\" y=\"" + svg_num(pad - 8) + "\">altitude by slot</text>\n";
    if (!path.empty())
        s += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"" + prof + "\"/>\n";
    s += "</svg>\n";
    return s;
}

std::string link_budget_csv(const SimConfig& cfg, double d_min, double d_max, double step)
{
    if (!(d_min > 0) || !(d_max >= d_min) || !(step > 0))
        throw DomainError("link budget sweep needs 0 < d_min <= d_max and step > 0");
    ChannelParams p = cfg.channel.params();
    std::string out = csv_banner("link-budget", cfg);
    out += "distance_m,fspl_db,lsf_los_db,lsf_nlos_db,rate_bs_uav_bps,rate_uav_gu_los_bps,rate_uav_gu_nlos_bps\n";
    const auto count = static_cast<long>(std::floor((d_max - d_min) / step + 1e-9));
    for (long i = 0; i <= count; ++i) {
        const double d = d_min + static_cast<double>(i) * step;
        const double los = large_scale_fading_db(d, 1, p);
        const double nlos = large_scale_fading_db(d, 0, p);
        const double g_los = std::pow(10.0, -los / 10.0);
        const double g_nlos = std::pow(10.0, -nlos / 10.0);
        out += csv_num(d) + "," + csv_num(free_space_path_loss_db(d, p.carrier_hz, p.light_speed)) + ","
               + csv_num(los) + "," + csv_num(nlos) + "," + csv_num(link_rate(p.bs_power_w, g_los, p)) + ","
               + csv_num(link_rate(p.uav_power_w, g_los, p)) + "," + csv_num(link_rate(p.uav_power_w, g_nlos, p))
               + "\n";
    }
    return out;
}

ScheduleReport schedule_report(const SimConfig& cfg, const EnvironmentMap& env, std::uint64_t seed)
{
    std::vector<Vec3> users;
    for (const auto& u : env.users)
        users.push_back(u.position);
    ScheduleReport r;
    Rng a(derive_seed(seed, 2));
    r.proposed = anneal(cfg.kinematics.start, users, cfg.anneal, a);
    Rng b(derive_seed(seed, 2));
    r.classical = anneal_classical(cfg.kinematics.start, users, cfg.anneal, b);
    r.csv = csv_banner("schedule", cfg);
    r.csv += "# order";
    for (int k : r.proposed.schedule.order)
        r.csv += " " + std::to_string(k);
    r.csv += "\n# length " + csv_num(r.proposed.length) + "\n";
    r.csv += "iteration,best_length_proposed,best_length_classical\n";
    for (std::size_t i = 0; i < r.proposed.best_trace.size(); ++i)
        r.csv += std::to_string(i + 1) + "," + csv_num(r.proposed.best_trace[i]) + ","
                 + csv_num(i < r.classical.best_trace.size() ? r.classical.best_trace[i] : r.classical.length) + "\n";
    return r;
}

} // namespace uavdt
