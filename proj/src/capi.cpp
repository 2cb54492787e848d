#include "uavdt/uavdt.h"

#include "uavdt/harness.hpp"

#include <cstring>
#include <memory>
#include <new>

struct uavdt_config {
    uavdt::SimConfig cfg;
};

struct uavdt_sim {
    explicit uavdt_sim(const uavdt::SimConfig& c) : sim(c) {}
    uavdt::Simulation sim;
    bool started = false;
};

namespace {

thread_local std::string g_last_error;

struct ArgError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class F>
uavdt_status guard(F&& f)
{
    try {
        f();
        g_last_error.clear();
        return UAVDT_OK;
    } catch (const ArgError& e) {
        g_last_error = e.what();
        return UAVDT_E_ARGUMENT;
    } catch (const uavdt::DomainError& e) {
        g_last_error = e.what();
        return UAVDT_E_DOMAIN;
    } catch (const uavdt::ConfigError& e) {
        g_last_error = e.what();
        return UAVDT_E_CONFIG;
    } catch (const uavdt::ContractError& e) {
        g_last_error = e.what();
        return UAVDT_E_CONTRACT;
    } catch (const uavdt::GenerationError& e) {
        g_last_error = e.what();
        return UAVDT_E_GENERATION;
    } catch (const uavdt::FormatError& e) {
        g_last_error = e.what();
        return UAVDT_E_FORMAT;
    } catch (const uavdt::IoError& e) {
        g_last_error = e.what();
        return UAVDT_E_IO;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return UAVDT_E_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return UAVDT_E_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return UAVDT_E_INTERNAL;
    }
}

template <class T>
T& need(T* p, const char* what)
{
    if (!p)
        throw ArgError(std::string(what) + " is null");
    return *p;
}

std::string need_str(const char* s, const char* what)
{
    if (!s)
        throw ArgError(std::string(what) + " is null");
    return s;
}

void give(char** out, const std::string& s)
{
    need(out, "output pointer");
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p)
        throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    *out = p;
}

uavdt::Policy make_policy(const uavdt::SimConfig& cfg, const std::string& spec)
{
    if (spec == "random")
        return uavdt::random_policy(uavdt::derive_seed(cfg.seed, 11));
    if (spec == "untrained")
        return uavdt::untrained_policy(cfg, uavdt::derive_seed(cfg.seed, 7));
    return uavdt::checkpoint_policy(cfg, spec);
}

} // namespace

extern "C" {

const char* uavdt_last_error(void) { return g_last_error.c_str(); }

const char* uavdt_status_name(uavdt_status s)
{
    switch (s) {
    case UAVDT_OK: return "ok";
    case UAVDT_E_ARGUMENT: return "argument";
    case UAVDT_E_DOMAIN: return "domain";
    case UAVDT_E_CONFIG: return "config";
    case UAVDT_E_CONTRACT: return "contract";
    case UAVDT_E_GENERATION: return "generation";
    case UAVDT_E_FORMAT: return "format";
    case UAVDT_E_IO: return "io";
    case UAVDT_E_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* uavdt_version(void) { return "0.1.0"; }

void uavdt_string_free(char* s) { std::free(s); }

uavdt_status uavdt_config_preset(const char* name, uavdt_config** out)
{
    return guard([&] {
        need(out, "out");
        auto c = std::make_unique<uavdt_config>();
        c->cfg = uavdt::preset_config(need_str(name, "name"));
        *out = c.release();
    });
}

uavdt_status uavdt_config_load(const char* path, const char* preset, uavdt_config** out)
{
    return guard([&] {
        need(out, "out");
        auto c = std::make_unique<uavdt_config>();
        c->cfg = uavdt::load_config(need_str(path, "path"), preset ? preset : "");
        *out = c.release();
    });
}

uavdt_status uavdt_config_parse(const char* text, const char* preset, uavdt_config** out)
{
    return guard([&] {
        need(out, "out");
        auto c = std::make_unique<uavdt_config>();
        c->cfg = uavdt::parse_config(need_str(text, "text"), preset ? preset : "");
        *out = c.release();
    });
}

void uavdt_config_free(uavdt_config* cfg) { delete cfg; }

uavdt_status uavdt_config_set_seed(uavdt_config* cfg, uint64_t seed)
{
    return guard([&] { need(cfg, "config").cfg.seed = seed; });
}

uavdt_status uavdt_config_seed(const uavdt_config* cfg, uint64_t* out)
{
    return guard([&] { need(out, "out") = need(cfg, "config").cfg.seed; });
}

uavdt_status uavdt_config_eval_episodes(const uavdt_config* cfg, int* out)
{
    return guard([&] { need(out, "out") = need(cfg, "config").cfg.eval_episodes; });
}

uavdt_status uavdt_config_set_episodes(uavdt_config* cfg, int episodes)
{
    return guard([&] {
        auto& c = need(cfg, "config").cfg;
        if (episodes < 1)
            throw uavdt::ConfigError("td3.episodes: must be at least 1");
        c.td3.episodes = episodes;
    });
}

uavdt_status uavdt_config_set_variant(uavdt_config* cfg, const char* variant)
{
    return guard([&] { uavdt::apply_variant(need(cfg, "config").cfg, need_str(variant, "variant")); });
}

uavdt_status uavdt_config_variant(const uavdt_config* cfg, char** out)
{
    return guard([&] { give(out, uavdt::variant_name(need(cfg, "config").cfg)); });
}

uavdt_status uavdt_config_dump(const uavdt_config* cfg, char** out)
{
    return guard([&] { give(out, uavdt::dump_config(need(cfg, "config").cfg)); });
}

uavdt_status uavdt_config_hash(const uavdt_config* cfg, uint64_t* out)
{
    return guard([&] { need(out, "out") = uavdt::config_hash(need(cfg, "config").cfg); });
}

uavdt_status uavdt_config_warnings(const uavdt_config* cfg, char** out)
{
    return guard([&] {
        std::string text;
        for (const auto& w : need(cfg, "config").cfg.warnings)
            text += w + "\n";
        give(out, text);
    });
}

uavdt_status uavdt_gen_env(const uavdt_config* cfg, uint64_t seed, char** json_out)
{
    return guard([&] {
        const auto& c = need(cfg, "config").cfg;
        need(json_out, "output pointer");
        give(json_out, uavdt::environment_to_json(uavdt::generate_environment(c.world, uavdt::derive_seed(seed, 1))));
    });
}

uavdt_status uavdt_schedule(const uavdt_config* cfg, uint64_t seed, const char* env_json, char** csv_out,
                            uavdt_schedule_info* info)
{
    return guard([&] {
        const auto& c = need(cfg, "config").cfg;
        const auto env = env_json ? uavdt::environment_from_json(env_json)
                                  : uavdt::generate_environment(c.world, uavdt::derive_seed(seed, 1));
        const auto r = uavdt::schedule_report(c, env, seed);
        if (csv_out)
            give(csv_out, r.csv);
        if (info) {
            info->length = r.proposed.length;
            info->classical_length = r.classical.length;
            info->users = static_cast<int>(env.users.size());
        }
    });
}

uavdt_status uavdt_train(const uavdt_config* cfg, const char* out_dir, int resume, uavdt_progress_fn progress,
                         void* user, uavdt_train_stats* out)
{
    return guard([&] {
        const auto& c = need(cfg, "config").cfg;
        std::function<void(const uavdt::EpisodeSummary&)> cb;
        if (progress)
            cb = [&](const uavdt::EpisodeSummary& s) { progress(s.episode, s.total_reward, s.served, s.users, user); };
        const auto r = uavdt::run_train(c, need_str(out_dir, "out_dir"), resume != 0, cb);
        if (out)
            *out = {r.episodes, r.steps, r.vetoes, r.collisions, r.critic_updates, r.actor_updates, r.wall_seconds};
    });
}

uavdt_status uavdt_eval(const uavdt_config* cfg, const char* policy, int episodes, const char* out_dir,
                        int trajectories, uavdt_eval_stats* out)
{
    return guard([&] {
        const auto& c = need(cfg, "config").cfg;
        const auto s = uavdt::run_eval(c, make_policy(c, need_str(policy, "policy")), episodes, out_dir ? out_dir : "",
                                       trajectories != 0);
        if (out)
            *out = {static_cast<int>(s.episodes.size()), s.completed, s.served_fraction, s.mean_mission_time,
                    s.std_mission_time, s.mean_vetoes, s.collisions};
    });
}

uavdt_status uavdt_sweep(const uavdt_config* cfg, const char* axis, const double* values, size_t n_values, int seeds,
                         const char* const* variants, const char* const* policies, size_t n_variants,
                         const char* out_dir, int* non_decreasing)
{
    return guard([&] {
        const auto& c = need(cfg, "config").cfg;
        if (n_values > 0)
            need(values, "values");
        if (n_variants > 0) {
            need(variants, "variants");
            need(policies, "policies");
        }
        uavdt::SweepSpec spec;
        spec.axis = uavdt::parse_axis(need_str(axis, "axis"));
        spec.values.assign(values, values + n_values);
        spec.seeds = seeds;
        spec.variants.clear();
        std::map<std::string, uavdt::Policy> pols;
        for (std::size_t i = 0; i < n_variants; ++i) {
            const std::string v = need_str(variants[i], "variant");
            uavdt::SimConfig vc = c;
            uavdt::apply_variant(vc, v);
            spec.variants.push_back(v);
            pols[v] = make_policy(vc, need_str(policies[i], "policy"));
        }
        const auto r = uavdt::run_sweep(c, spec, pols, out_dir ? out_dir : "");
        if (non_decreasing)
            for (std::size_t i = 0; i < n_variants; ++i)
                non_decreasing[i] = r.non_decreasing.at(spec.variants[i]) ? 1 : 0;
    });
}

uavdt_status uavdt_plot(const char* trajectory_json, char** svg_out)
{
    return guard([&] {
        need(svg_out, "output pointer");
        give(svg_out, uavdt::export_trajectory_plot(need_str(trajectory_json, "trajectory_json")));
    });
}

uavdt_status uavdt_link_budget(const uavdt_config* cfg, double d_min, double d_max, double step, char** csv_out)
{
    return guard([&] {
        need(csv_out, "output pointer");
        give(csv_out, uavdt::link_budget_csv(need(cfg, "config").cfg, d_min, d_max, step));
    });
}

uavdt_status uavdt_sim_create(const uavdt_config* cfg, uavdt_sim** out)
{
    return guard([&] {
        need(out, "out");
        *out = new uavdt_sim(need(cfg, "config").cfg);
    });
}

void uavdt_sim_free(uavdt_sim* sim) { delete sim; }

uavdt_status uavdt_sim_reset(uavdt_sim* sim, uint64_t seed, int dt_enabled)
{
    return guard([&] {
        auto& s = need(sim, "sim");
        s.sim.reset(seed, uavdt::RunMode::Deploy, dt_enabled != 0);
        s.started = true;
    });
}

uavdt_status uavdt_sim_step(uavdt_sim* sim, const double action[3], double* reward, int* done, double position[3])
{
    return guard([&] {
        auto& s = need(sim, "sim");
        need(action, "action");
        if (!s.started)
            throw uavdt::ContractError("step before reset");
        for (int i = 0; i < 3; ++i)
            if (!std::isfinite(action[i]))
                throw uavdt::DomainError("action component " + std::to_string(i) + " is not finite");
        const auto r = s.sim.step(uavdt::to_physical({action[0], action[1], action[2]}, s.sim.config().kinematics.v_max));
        if (reward)
            *reward = r.reward;
        if (done)
            *done = r.done ? 1 : 0;
        if (position) {
            const auto p = s.sim.position();
            position[0] = p.x;
            position[1] = p.y;
            position[2] = p.z;
        }
    });
}

uavdt_status uavdt_sim_served(const uavdt_sim* sim, int* served, int* users)
{
    return guard([&] {
        const auto& s = need(sim, "sim");
        if (!s.started)
            throw uavdt::ContractError("no episode has been reset");
        if (served)
            *served = s.sim.served_count();
        if (users)
            *users = static_cast<int>(s.sim.map().users.size());
    });
}

uavdt_status uavdt_sim_episode_json(const uavdt_sim* sim, char** out)
{
    return guard([&] {
        const auto& s = need(sim, "sim");
        if (!s.started)
            throw uavdt::ContractError("no episode has been reset");
        give(out, uavdt::episode_to_json(s.sim, s.sim.config().timing.slot()));
    });
}

} // extern "C"
