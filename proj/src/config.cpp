#include "uavdt/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <variant>

namespace uavdt {

ChannelParams ChannelConfig::params() const
{
    ChannelParams p;
    p.carrier_hz = carrier_hz;
    p.bandwidth_hz = bandwidth_hz;
    p.bs_power_w = dbm_to_watt(bs_power_dbm);
    p.uav_power_w = dbm_to_watt(uav_power_dbm);
    p.noise_w = dbm_to_watt(noise_dbm);
    p.gamma_los_db = gamma_los_db;
    p.gamma_nlos_db = gamma_nlos_db;
    p.rician_k_db = rician_k_db;
    p.light_speed = light_speed;
    p.freeze_fading = freeze_fading;
    return p;
}

SimConfig paper_config()
{
    SimConfig c;
    c.world.keep_clear = c.kinematics.start;
    c.world.keep_clear_radius = c.kinematics.start_clearance;
    return c;
}

// Scaled-down scenario that trains on one core in minutes. Altitudes and
// speed are chosen so that the sensing disc at min_alt always reaches past one
// full step plus half a cell diagonal, which keeps the twin's gate exact.
SimConfig desk_config()
{
    SimConfig c;
    c.preset = "desk";
    c.world.side_xy = 200.0;
    c.world.max_alt = 60.0;
    c.world.building_count = 2;
    c.world.footprint_min = 20.0;
    c.world.footprint_max = 50.0;
    c.world.footprint_quantum = 10.0;
    c.world.height_scale = 40.0;
    c.world.height_min = 30.0;
    c.world.height_max = 60.0;
    c.world.user_count = 3;
    c.world.demand_bits = 2e6;
    c.world.bs_position = {0.0, 0.0, 30.0};
    c.grid = {20, 20, 200.0};
    c.timing.max_slots = 40;
    c.kinematics.v_max = 20.0;
    // The floor keeps the sensing disc wide enough to cover a full slot of travel.
    c.kinematics.min_alt = 28.0;
    c.kinematics.max_alt = 58.0;
    c.kinematics.start = {20.0, 20.0, 40.0};
    c.kinematics.start_clearance = 30.0;
    c.world.keep_clear = c.kinematics.start;
    c.world.keep_clear_radius = c.kinematics.start_clearance;
    c.net_preset = "desk";
    c.td3.episodes = 2000;
    c.td3.batch_size = 32;
    c.td3.buffer_capacity = 50000;
    c.td3.actor_lr = 1e-4;
    c.td3.critic_lr = 1e-4;
    c.td3.warmup_steps = 2000;
    c.td3.explore_sigma = 0.3;
    // Short missions: scale the dense terms and the completion bonus down so
    // the shaped step reward is not swamped.
    c.reward.w51 *= 0.05;
    c.reward.w52 *= 0.05;
    c.reward.w6 *= 0.05;
    c.reward.w7 = 50.0;
    return c;
}

SimConfig preset_config(const std::string& name)
{
    if (name.empty() || name == "paper")
        return paper_config();
    if (name == "desk")
        return desk_config();
    throw ConfigError("unknown preset '" + name + "' (expected paper or desk)");
}

namespace {

using Array = std::vector<double>;
using Value = std::variant<double, bool, std::string, Array>;

struct Entry {
    Value value;
    int line = 0;
};

std::string trim(const std::string& s)
{
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
        ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
        --b;
    return s.substr(a, b - a);
}

[[noreturn]] void fail_at(int line, const std::string& msg)
{
    throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

double parse_number(const std::string& text, int line)
{
    const std::string t = trim(text);
    double v = 0.0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (!t.empty() && *first == '+')
        ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || t.empty())
        fail_at(line, "invalid number '" + t + "'");
    return v;
}

std::string strip_comment(const std::string& line)
{
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"')
            in_str = !in_str;
        else if (line[i] == '#' && !in_str)
            return line.substr(0, i);
    }
    return line;
}

Value parse_value(const std::string& raw, int line)
{
    const std::string t = trim(raw);
    if (t.empty())
        fail_at(line, "missing value");
    if (t == "true")
        return true;
    if (t == "false")
        return false;
    if (t.front() == '"') {
        if (t.size() < 2 || t.back() != '"')
            fail_at(line, "unterminated string");
        return t.substr(1, t.size() - 2);
    }
    if (t.front() == '[') {
        if (t.back() != ']')
            fail_at(line, "unterminated array");
        Array out;
        const std::string body = trim(t.substr(1, t.size() - 2));
        if (body.empty())
            return out;
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ','))
            out.push_back(parse_number(item, line));
        return out;
    }
    return parse_number(t, line);
}

std::map<std::string, Entry> parse_entries(const std::string& text)
{
    std::map<std::string, Entry> entries;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(strip_comment(raw));
        if (s.empty())
            continue;
        if (s.front() == '[') {
            if (s.back() != ']' || s.size() < 3)
                fail_at(line, "malformed section header '" + s + "'");
            section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            fail_at(line, "expected 'key = value'");
        const std::string key = trim(s.substr(0, eq));
        if (key.empty())
            fail_at(line, "empty key");
        const std::string path = section.empty() ? key : section + "." + key;
        if (entries.count(path))
            fail_at(line, "duplicate key '" + path + "'");
        entries[path] = {parse_value(s.substr(eq + 1), line), line};
    }
    return entries;
}

// One settable field: its writer and its canonical text form.
struct Field {
    std::function<void(SimConfig&, const Value&, int)> set;
    std::function<std::string(const SimConfig&)> get;
};

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double as_number(const Value& v, int line, const std::string& key)
{
    if (const auto* d = std::get_if<double>(&v))
        return *d;
    fail_at(line, "'" + key + "' expects a number");
}

int as_int(const Value& v, int line, const std::string& key)
{
    const double d = as_number(v, line, key);
    if (d != static_cast<double>(static_cast<long long>(d)) || d < -2147483648.0 || d > 2147483647.0)
        fail_at(line, "'" + key + "' expects an integer");
    return static_cast<int>(d);
}

bool as_bool(const Value& v, int line, const std::string& key)
{
    if (const auto* b = std::get_if<bool>(&v))
        return *b;
    fail_at(line, "'" + key + "' expects true or false");
}

std::string as_string(const Value& v, int line, const std::string& key)
{
    if (const auto* s = std::get_if<std::string>(&v))
        return *s;
    fail_at(line, "'" + key + "' expects a quoted string");
}

Array as_array(const Value& v, int line, const std::string& key, std::size_t n)
{
    const auto* a = std::get_if<Array>(&v);
    if (!a || a->size() != n)
        fail_at(line, "'" + key + "' expects an array of " + std::to_string(n) + " numbers");
    return *a;
}

template <class T>
void add_num(std::map<std::string, Field>& f, const std::string& key, T SimConfig::*section, double T::*member)
{
    f[key] = {[=](SimConfig& c, const Value& v, int line) { (c.*section).*member = as_number(v, line, key); },
              [=](const SimConfig& c) { return fmt((c.*section).*member); }};
}

template <class T>
void add_int(std::map<std::string, Field>& f, const std::string& key, T SimConfig::*section, int T::*member)
{
    f[key] = {[=](SimConfig& c, const Value& v, int line) { (c.*section).*member = as_int(v, line, key); },
              [=](const SimConfig& c) { return std::to_string((c.*section).*member); }};
}

template <class T>
void add_bool(std::map<std::string, Field>& f, const std::string& key, T SimConfig::*section, bool T::*member)
{
    f[key] = {[=](SimConfig& c, const Value& v, int line) { (c.*section).*member = as_bool(v, line, key); },
              [=](const SimConfig& c) { return std::string((c.*section).*member ? "true" : "false"); }};
}

template <class T>
void add_vec(std::map<std::string, Field>& f, const std::string& key, T SimConfig::*section, Vec3 T::*member)
{
    f[key] = {[=](SimConfig& c, const Value& v, int line) {
                  const auto a = as_array(v, line, key, 3);
                  (c.*section).*member = {a[0], a[1], a[2]};
              },
              [=](const SimConfig& c) {
                  const Vec3 p = (c.*section).*member;
                  return "[" + fmt(p.x) + ", " + fmt(p.y) + ", " + fmt(p.z) + "]";
              }};
}

template <class T>
void add_arr3(std::map<std::string, Field>& f, const std::string& key, T SimConfig::*section,
              std::array<double, 3> T::*member)
{
    f[key] = {[=](SimConfig& c, const Value& v, int line) {
                  const auto a = as_array(v, line, key, 3);
                  (c.*section).*member = {a[0], a[1], a[2]};
              },
              [=](const SimConfig& c) {
                  const auto& p = (c.*section).*member;
                  return "[" + fmt(p[0]) + ", " + fmt(p[1]) + ", " + fmt(p[2]) + "]";
              }};
}

const std::map<std::string, Field>& fields()
{
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> f;
        using S = SimConfig;

        f["run.preset"] = {[](S& c, const Value& v, int line) { c.preset = as_string(v, line, "run.preset"); },
                           [](const S& c) { return "\"" + c.preset + "\""; }};
        f["run.seed"] = {[](S& c, const Value& v, int line) {
                             const double d = as_number(v, line, "run.seed");
                             if (d < 0 || d != static_cast<double>(static_cast<std::uint64_t>(d)))
                                 fail_at(line, "'run.seed' expects a non-negative integer");
                             c.seed = static_cast<std::uint64_t>(d);
                         },
                         [](const S& c) { return std::to_string(c.seed); }};
        f["run.eval_episodes"] = {[](S& c, const Value& v, int line) { c.eval_episodes = as_int(v, line, "run.eval_episodes"); },
                                  [](const S& c) { return std::to_string(c.eval_episodes); }};
        f["run.snapshot_stride"] = {
            [](S& c, const Value& v, int line) { c.snapshot_stride = as_int(v, line, "run.snapshot_stride"); },
            [](const S& c) { return std::to_string(c.snapshot_stride); }};

        add_num(f, "world.side_xy", &S::world, &WorldConfig::side_xy);
        add_num(f, "world.max_alt", &S::world, &WorldConfig::max_alt);
        add_int(f, "world.building_count", &S::world, &WorldConfig::building_count);
        add_num(f, "world.footprint_min", &S::world, &WorldConfig::footprint_min);
        add_num(f, "world.footprint_max", &S::world, &WorldConfig::footprint_max);
        add_num(f, "world.footprint_quantum", &S::world, &WorldConfig::footprint_quantum);
        add_num(f, "world.height_scale", &S::world, &WorldConfig::height_scale);
        add_num(f, "world.height_min", &S::world, &WorldConfig::height_min);
        add_num(f, "world.height_max", &S::world, &WorldConfig::height_max);
        add_int(f, "world.user_count", &S::world, &WorldConfig::user_count);
        f["world.demand_mbit"] = {
            [](S& c, const Value& v, int line) { c.world.demand_bits = as_number(v, line, "world.demand_mbit") * 1e6; },
            [](const S& c) { return fmt(c.world.demand_bits / 1e6); }};
        add_vec(f, "world.bs_position", &S::world, &WorldConfig::bs_position);
        add_num(f, "world.obstacle_ratio", &S::world, &WorldConfig::obstacle_ratio);
        add_num(f, "world.obstacle_ratio_tolerance", &S::world, &WorldConfig::obstacle_ratio_tolerance);
        add_int(f, "world.max_retries", &S::world, &WorldConfig::max_retries);

        add_int(f, "grid.rows", &S::grid, &GridGeometry::rows);
        add_int(f, "grid.cols", &S::grid, &GridGeometry::cols);

        add_num(f, "timing.delta1", &S::timing, &TimingConfig::delta1);
        add_num(f, "timing.delta2", &S::timing, &TimingConfig::delta2);
        add_num(f, "timing.delta3", &S::timing, &TimingConfig::delta3);
        add_int(f, "timing.max_slots", &S::timing, &TimingConfig::max_slots);

        add_num(f, "kinematics.v_max", &S::kinematics, &KinematicsConfig::v_max);
        add_num(f, "kinematics.min_alt", &S::kinematics, &KinematicsConfig::min_alt);
        add_num(f, "kinematics.max_alt", &S::kinematics, &KinematicsConfig::max_alt);
        add_num(f, "kinematics.beta_sen", &S::kinematics, &KinematicsConfig::beta_sen);
        add_num(f, "kinematics.beta_com", &S::kinematics, &KinematicsConfig::beta_com);
        add_vec(f, "kinematics.start", &S::kinematics, &KinematicsConfig::start);
        add_num(f, "kinematics.start_clearance", &S::kinematics, &KinematicsConfig::start_clearance);

        add_num(f, "channel.carrier_hz", &S::channel, &ChannelConfig::carrier_hz);
        add_num(f, "channel.bandwidth_hz", &S::channel, &ChannelConfig::bandwidth_hz);
        add_num(f, "channel.bs_power_dbm", &S::channel, &ChannelConfig::bs_power_dbm);
        add_num(f, "channel.uav_power_dbm", &S::channel, &ChannelConfig::uav_power_dbm);
        add_num(f, "channel.noise_dbm", &S::channel, &ChannelConfig::noise_dbm);
        add_num(f, "channel.gamma_los_db", &S::channel, &ChannelConfig::gamma_los_db);
        add_num(f, "channel.gamma_nlos_db", &S::channel, &ChannelConfig::gamma_nlos_db);
        add_num(f, "channel.rician_k_db", &S::channel, &ChannelConfig::rician_k_db);
        add_num(f, "channel.light_speed", &S::channel, &ChannelConfig::light_speed);
        add_bool(f, "channel.freeze_fading", &S::channel, &ChannelConfig::freeze_fading);

        add_num(f, "reward.w1", &S::reward, &RewardWeights::w1);
        add_num(f, "reward.w2", &S::reward, &RewardWeights::w2);
        add_num(f, "reward.w3", &S::reward, &RewardWeights::w3);
        add_num(f, "reward.w4", &S::reward, &RewardWeights::w4);
        add_num(f, "reward.b4", &S::reward, &RewardWeights::b4);
        add_num(f, "reward.w51", &S::reward, &RewardWeights::w51);
        add_num(f, "reward.w52", &S::reward, &RewardWeights::w52);
        add_num(f, "reward.w6", &S::reward, &RewardWeights::w6);
        add_num(f, "reward.w7", &S::reward, &RewardWeights::w7);
        add_num(f, "reward.j_vr", &S::reward, &RewardWeights::j_vr);
        add_num(f, "reward.j_dr", &S::reward, &RewardWeights::j_dr);
        add_num(f, "reward.j_dp", &S::reward, &RewardWeights::j_dp);
        add_num(f, "reward.mu_top", &S::reward, &RewardWeights::mu_top);

        add_num(f, "anneal.initial_temperature", &S::anneal, &AnnealParams::initial_temperature);
        add_num(f, "anneal.cooling_rate", &S::anneal, &AnnealParams::cooling_rate);
        add_int(f, "anneal.max_iterations", &S::anneal, &AnnealParams::max_iterations);
        add_arr3(f, "anneal.op_bias", &S::anneal, &AnnealParams::op_bias);
        add_arr3(f, "anneal.op_sensitivity", &S::anneal, &AnnealParams::op_sensitivity);

        f["network.preset"] = {[](S& c, const Value& v, int line) { c.net_preset = as_string(v, line, "network.preset"); },
                               [](const S& c) { return "\"" + c.net_preset + "\""; }};

        add_num(f, "td3.gamma", &S::td3, &Td3Hyper::gamma);
        add_num(f, "td3.tau", &S::td3, &Td3Hyper::tau);
        add_int(f, "td3.policy_delay", &S::td3, &Td3Hyper::policy_delay);
        add_int(f, "td3.batch_size", &S::td3, &Td3Hyper::batch_size);
        add_num(f, "td3.explore_sigma", &S::td3, &Td3Hyper::explore_sigma);
        add_num(f, "td3.target_sigma", &S::td3, &Td3Hyper::target_sigma);
        add_num(f, "td3.target_clip", &S::td3, &Td3Hyper::target_clip);
        add_num(f, "td3.actor_lr", &S::td3, &Td3Hyper::actor_lr);
        add_num(f, "td3.critic_lr", &S::td3, &Td3Hyper::critic_lr);
        add_int(f, "td3.episodes", &S::td3, &Td3Hyper::episodes);
        add_int(f, "td3.buffer_capacity", &S::td3, &Td3Hyper::buffer_capacity);
        add_int(f, "td3.warmup_steps", &S::td3, &Td3Hyper::warmup_steps);
        add_bool(f, "td3.couple_target_updates", &S::td3, &Td3Hyper::couple_target_updates);

        f["mode.algorithm"] = {[](S& c, const Value& v, int line) {
                                   const auto s = as_string(v, line, "mode.algorithm");
                                   if (s == "td3")
                                       c.mode.algorithm = Algorithm::Td3;
                                   else if (s == "ddpg")
                                       c.mode.algorithm = Algorithm::Ddpg;
                                   else
                                       fail_at(line, "'mode.algorithm' must be \"td3\" or \"ddpg\"");
                               },
                               [](const S& c) {
                                   return std::string(c.mode.algorithm == Algorithm::Td3 ? "\"td3\"" : "\"ddpg\"");
                               }};
        add_bool(f, "mode.dt_enabled", &S::mode, &ModeConfig::dt_enabled);
        return f;
    }();
    return table;
}

} // namespace

SimConfig parse_config(const std::string& text, const std::string& preset)
{
    const auto entries = parse_entries(text);
    std::string name = preset;
    if (auto it = entries.find("run.preset"); it != entries.end() && preset.empty())
        name = as_string(it->second.value, it->second.line, "run.preset");

    SimConfig cfg = preset_config(name);
    const auto& table = fields();
    for (const auto& [key, entry] : entries) {
        auto it = table.find(key);
        if (it == table.end())
            fail_at(entry.line, "unknown key '" + key + "'");
        if (key == "run.preset")
            continue;
        it->second.set(cfg, entry.value, entry.line);
    }
    cfg.grid.side_xy = cfg.world.side_xy;
    cfg.world.keep_clear = cfg.kinematics.start;
    cfg.world.keep_clear_radius = cfg.kinematics.start_clearance;
    validate_config(cfg);
    return cfg;
}

SimConfig load_config(const std::string& path, const std::string& preset)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str(), preset);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

namespace {

void require(bool ok, const std::string& field, const std::string& why)
{
    if (!ok)
        throw ConfigError(field + ": " + why);
}

} // namespace

void validate_config(SimConfig& cfg)
{
    cfg.warnings.clear();
    const auto& w = cfg.world;
    require(w.side_xy > 0, "world.side_xy", "must be positive");
    require(w.max_alt > 0, "world.max_alt", "must be positive");
    require(w.building_count >= 0, "world.building_count", "must be non-negative");
    require(w.footprint_min > 0 && w.footprint_min <= w.footprint_max, "world.footprint_min",
            "must satisfy 0 < footprint_min <= footprint_max");
    require(w.footprint_max <= w.side_xy, "world.footprint_max", "must not exceed world.side_xy");
    require(w.footprint_quantum >= 0, "world.footprint_quantum", "must be non-negative");
    require(w.height_scale > 0, "world.height_scale", "must be positive");
    require(w.height_min > 0 && w.height_min <= w.height_max, "world.height_min",
            "must satisfy 0 < height_min <= height_max");
    require(w.height_max <= w.max_alt, "world.height_max", "must not exceed world.max_alt");
    require(w.user_count >= 1, "world.user_count", "must be at least 1");
    require(w.demand_bits >= 0, "world.demand_mbit", "must be non-negative");
    require(w.obstacle_ratio >= 0 && w.obstacle_ratio < 1, "world.obstacle_ratio", "must lie in [0, 1)");
    require(w.obstacle_ratio_tolerance > 0, "world.obstacle_ratio_tolerance", "must be positive");
    require(w.max_retries >= 1, "world.max_retries", "must be at least 1");

    require(cfg.grid.rows >= 1 && cfg.grid.cols >= 1, "grid.rows", "grid dimensions must be positive");

    const auto& t = cfg.timing;
    require(t.delta1 > 0 && t.delta2 > 0 && t.delta3 > 0, "timing.delta1", "sub-slot durations must be positive");
    require(t.delta1 == t.delta2, "timing.delta2", "must equal timing.delta1");
    require(t.max_slots >= 1, "timing.max_slots", "must be at least 1");

    const auto& k = cfg.kinematics;
    require(k.v_max > 0, "kinematics.v_max", "must be positive");
    require(k.min_alt >= 0 && k.min_alt < k.max_alt, "kinematics.min_alt", "must satisfy 0 <= min_alt < max_alt");
    require(k.max_alt <= w.max_alt, "kinematics.max_alt", "must not exceed world.max_alt");
    require(k.beta_sen > 0 && k.beta_sen < kPi / 2, "kinematics.beta_sen", "must lie in (0, pi/2)");
    require(k.beta_com > 0 && k.beta_com < kPi / 2, "kinematics.beta_com", "must lie in (0, pi/2)");
    require(k.beta_com > k.beta_sen, "kinematics.beta_com", "must exceed kinematics.beta_sen");
    require(k.start.x >= 0 && k.start.x <= w.side_xy && k.start.y >= 0 && k.start.y <= w.side_xy
                && k.start.z >= k.min_alt && k.start.z <= k.max_alt,
            "kinematics.start", "must lie inside the flight envelope");
    require(k.start_clearance >= 0, "kinematics.start_clearance", "must be non-negative");

    const auto& ch = cfg.channel;
    require(ch.carrier_hz > 0, "channel.carrier_hz", "must be positive");
    require(ch.bandwidth_hz > 0, "channel.bandwidth_hz", "must be positive");
    require(ch.light_speed > 0, "channel.light_speed", "must be positive");

    const auto& r = cfg.reward;
    for (double v : {r.w1, r.w2, r.w3, r.w4, r.b4, r.w6, r.w7})
        require(v >= 0, "reward", "weights must be non-negative");
    require(r.w51 > r.w52 && r.w52 > 0, "reward.w51", "must satisfy w51 > w52 > 0");
    require(r.j_vr > 0 && r.j_vr <= 1, "reward.j_vr", "must lie in (0, 1]");
    require(r.j_dr > 0, "reward.j_dr", "must be positive");
    require(r.j_dp > 0, "reward.j_dp", "must be positive");
    require(r.mu_top >= 0, "reward.mu_top", "must be non-negative");

    const auto& a = cfg.anneal;
    require(a.initial_temperature > 0, "anneal.initial_temperature", "must be positive");
    require(a.cooling_rate > 0 && a.cooling_rate < 1, "anneal.cooling_rate", "must lie in (0, 1)");
    require(a.max_iterations >= 1, "anneal.max_iterations", "must be at least 1");
    for (double b : a.op_bias)
        require(b > 0, "anneal.op_bias", "entries must be positive");

    require(cfg.net_preset == "paper" || cfg.net_preset == "desk", "network.preset", "must be \"paper\" or \"desk\"");

    const auto& h = cfg.td3;
    require(h.gamma > 0 && h.gamma < 1, "td3.gamma", "must lie in (0, 1)");
    require(h.tau > 0 && h.tau <= 1, "td3.tau", "must lie in (0, 1]");
    require(h.policy_delay >= 1, "td3.policy_delay", "must be at least 1");
    require(h.batch_size >= 1, "td3.batch_size", "must be at least 1");
    require(h.explore_sigma >= 0 && h.target_sigma >= 0 && h.target_clip >= 0, "td3.explore_sigma",
            "noise scales must be non-negative");
    require(h.actor_lr > 0 && h.critic_lr > 0, "td3.actor_lr", "learning rates must be positive");
    require(h.episodes >= 0, "td3.episodes", "must be non-negative");
    require(h.buffer_capacity >= h.batch_size, "td3.buffer_capacity", "must be at least td3.batch_size");
    require(h.warmup_steps >= 0, "td3.warmup_steps", "must be non-negative");
    require(cfg.eval_episodes >= 1, "run.eval_episodes", "must be at least 1");
    require(cfg.snapshot_stride >= 0, "run.snapshot_stride", "must be non-negative");

    const double cell_half_diag = 0.5 * std::hypot(cfg.grid.dx(), cfg.grid.dy());
    const double reach = k.v_max * t.slot() + cell_half_diag;
    if (coverage_radius(k.min_alt, k.beta_sen) < reach)
        cfg.warnings.push_back("sensing radius at min_alt is shorter than one step plus half a cell diagonal; "
                               "the twin may miss obstacles along a step");
    if (w.footprint_quantum > 0) {
        const double q = w.footprint_quantum / cfg.grid.dx();
        if (std::abs(q - std::round(q)) > 1e-9 || cfg.grid.dx() != cfg.grid.dy())
            cfg.warnings.push_back("footprint quantum is not a multiple of the grid cell; "
                                   "sensed cells may under-cover building footprints");
    }
}

std::string dump_config(const SimConfig& cfg)
{
    std::string out;
    std::string section;
    for (const auto& [key, field] : fields()) {
        const auto dot = key.find('.');
        const std::string sec = key.substr(0, dot);
        if (sec != section) {
            if (!section.empty())
                out += "\n";
            out += "[" + sec + "]\n";
            section = sec;
        }
        out += key.substr(dot + 1) + " = " + field.get(cfg) + "\n";
    }
    return out;
}

std::uint64_t config_hash(const SimConfig& cfg)
{
    // FNV-1a over the canonical dump.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump_config(cfg)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string variant_name(const SimConfig& cfg)
{
    return std::string(cfg.mode.algorithm == Algorithm::Td3 ? "td3" : "ddpg") + (cfg.mode.dt_enabled ? "-dt" : "-nodt");
}

void apply_variant(SimConfig& cfg, const std::string& variant)
{
    const auto dash = variant.find('-');
    const std::string algo = variant.substr(0, dash);
    const std::string dt = dash == std::string::npos ? "dt" : variant.substr(dash + 1);
    if (algo == "td3")
        cfg.mode.algorithm = Algorithm::Td3;
    else if (algo == "ddpg")
        cfg.mode.algorithm = Algorithm::Ddpg;
    else
        throw ConfigError("unknown variant '" + variant + "' (expected td3-dt, td3-nodt, ddpg-dt or ddpg-nodt)");
    if (dt == "dt")
        cfg.mode.dt_enabled = true;
    else if (dt == "nodt")
        cfg.mode.dt_enabled = false;
    else
        throw ConfigError("unknown variant '" + variant + "' (expected td3-dt, td3-nodt, ddpg-dt or ddpg-nodt)");
}

} // namespace uavdt
