#ifndef UAVDT_H
#define UAVDT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define UAVDT_API __declspec(dllexport)
#else
#define UAVDT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum uavdt_status {
    UAVDT_OK = 0,
    UAVDT_E_ARGUMENT = 1,   /* null handle or bad argument at the API boundary */
    UAVDT_E_DOMAIN = 2,     /* non-finite or out-of-range numeric input */
    UAVDT_E_CONFIG = 3,     /* invalid configuration */
    UAVDT_E_CONTRACT = 4,   /* call made in the wrong state */
    UAVDT_E_GENERATION = 5, /* random map could not satisfy its constraints */
    UAVDT_E_FORMAT = 6,     /* malformed JSON or checkpoint */
    UAVDT_E_IO = 7,
    UAVDT_E_INTERNAL = 8
} uavdt_status;

typedef struct uavdt_config uavdt_config;
typedef struct uavdt_sim uavdt_sim;

/* Message of the last failed call on this thread; "" after a success. */
UAVDT_API const char* uavdt_last_error(void);
UAVDT_API const char* uavdt_status_name(uavdt_status s);
UAVDT_API const char* uavdt_version(void);

/* Strings returned through char** are owned by the caller. */
UAVDT_API void uavdt_string_free(char* s);

/* ---- configuration ---- */
UAVDT_API uavdt_status uavdt_config_preset(const char* name, uavdt_config** out);
/* preset may be NULL: the file's run.preset (or "desk") is used. */
UAVDT_API uavdt_status uavdt_config_load(const char* path, const char* preset, uavdt_config** out);
UAVDT_API uavdt_status uavdt_config_parse(const char* text, const char* preset, uavdt_config** out);
UAVDT_API void uavdt_config_free(uavdt_config* cfg);
UAVDT_API uavdt_status uavdt_config_set_seed(uavdt_config* cfg, uint64_t seed);
UAVDT_API uavdt_status uavdt_config_seed(const uavdt_config* cfg, uint64_t* out);
UAVDT_API uavdt_status uavdt_config_eval_episodes(const uavdt_config* cfg, int* out);
UAVDT_API uavdt_status uavdt_config_set_episodes(uavdt_config* cfg, int episodes);
/* "td3-dt", "td3-nodt", "ddpg-dt" or "ddpg-nodt". */
UAVDT_API uavdt_status uavdt_config_set_variant(uavdt_config* cfg, const char* variant);
UAVDT_API uavdt_status uavdt_config_variant(const uavdt_config* cfg, char** out);
UAVDT_API uavdt_status uavdt_config_dump(const uavdt_config* cfg, char** out);
UAVDT_API uavdt_status uavdt_config_hash(const uavdt_config* cfg, uint64_t* out);
/* Newline-separated validation warnings, possibly empty. */
UAVDT_API uavdt_status uavdt_config_warnings(const uavdt_config* cfg, char** out);

/* ---- environment and schedule ---- */
/* Ground-truth map that an evaluation episode reset with `seed` would use. */
UAVDT_API uavdt_status uavdt_gen_env(const uavdt_config* cfg, uint64_t seed, char** json_out);

typedef struct uavdt_schedule_info {
    double length;           /* tour length of the proposed annealer, m */
    double classical_length; /* same budget, fixed operator probabilities */
    int users;
} uavdt_schedule_info;

/* env_json may be NULL, in which case the map comes from uavdt_gen_env(seed).
   csv_out receives the order and the best-length trace of both annealers. */
UAVDT_API uavdt_status uavdt_schedule(const uavdt_config* cfg, uint64_t seed, const char* env_json, char** csv_out,
                                      uavdt_schedule_info* info);

/* ---- training and evaluation ---- */
typedef struct uavdt_train_stats {
    int episodes;
    long long steps;
    int vetoes;
    int collisions;
    uint64_t critic_updates;
    uint64_t actor_updates;
    double wall_seconds;
} uavdt_train_stats;

/* Called after every episode. */
typedef void (*uavdt_progress_fn)(int episode, double total_reward, int served, int users, void* user);

UAVDT_API uavdt_status uavdt_train(const uavdt_config* cfg, const char* out_dir, int resume, uavdt_progress_fn progress,
                                   void* user, uavdt_train_stats* out);

typedef struct uavdt_eval_stats {
    int episodes;
    int completed;
    double served_fraction;
    double mean_mission_time;
    double std_mission_time;
    double mean_vetoes;
    int collisions;
} uavdt_eval_stats;

/* policy: a checkpoint path, or "random" / "untrained". */
UAVDT_API uavdt_status uavdt_eval(const uavdt_config* cfg, const char* policy, int episodes, const char* out_dir,
                                  int trajectories, uavdt_eval_stats* out);

/* axis: "data_volume" (Mbit), "gu_count" or "obstacle_ratio". policies[i] is
   the policy for variants[i], in the same form as uavdt_eval. non_decreasing
   receives one flag per variant and may be NULL. */
UAVDT_API uavdt_status uavdt_sweep(const uavdt_config* cfg, const char* axis, const double* values, size_t n_values,
                                   int seeds, const char* const* variants, const char* const* policies,
                                   size_t n_variants, const char* out_dir, int* non_decreasing);

UAVDT_API uavdt_status uavdt_plot(const char* trajectory_json, char** svg_out);
UAVDT_API uavdt_status uavdt_link_budget(const uavdt_config* cfg, double d_min, double d_max, double step,
                                         char** csv_out);

/* ---- stepping a simulation directly ---- */
UAVDT_API uavdt_status uavdt_sim_create(const uavdt_config* cfg, uavdt_sim** out);
UAVDT_API void uavdt_sim_free(uavdt_sim* sim);
UAVDT_API uavdt_status uavdt_sim_reset(uavdt_sim* sim, uint64_t seed, int dt_enabled);
/* action is normalized to [-1, 1]^3: speed, polar angle from vertical, azimuth. */
UAVDT_API uavdt_status uavdt_sim_step(uavdt_sim* sim, const double action[3], double* reward, int* done,
                                      double position[3]);
UAVDT_API uavdt_status uavdt_sim_served(const uavdt_sim* sim, int* served, int* users);
UAVDT_API uavdt_status uavdt_sim_episode_json(const uavdt_sim* sim, char** out);

#ifdef __cplusplus
}
#endif

#endif
