#pragma once

#include "uavdt/common.hpp"

namespace uavdt {

// Link-budget constants. Powers are stored in watts; configs carry dBm and
// convert once at load.
struct ChannelParams {
    double carrier_hz = 2e9;
    double bandwidth_hz = 10e6;
    double bs_power_w = dbm_to_watt(40.0);
    double uav_power_w = dbm_to_watt(10.0);
    double noise_w = dbm_to_watt(-75.0);
    double gamma_los_db = 0.1;
    double gamma_nlos_db = 21.0;
    double rician_k_db = 15.0;
    double light_speed = 3e8;
    // Pins |SSF|^2 = 1 for deterministic golden runs.
    bool freeze_fading = false;
};

struct LinkBudget {
    double distance = 0.0;
    int los = 1;
    double lsf_db = 0.0;
    double ssf_mag2 = 1.0;
    double gain_mag2 = 0.0;
    double rate_bps = 0.0;
};

double free_space_path_loss_db(double d, double carrier_hz, double light_speed = 3e8);
double large_scale_fading_db(double d, int los, const ChannelParams& params);
double sample_small_scale(int los, const ChannelParams& params, Rng& rng);
double link_rate(double p_tx_w, double gain_mag2, const ChannelParams& params);

inline double effective_rate(double r_bs_uav, double r_uav_gu) { return r_bs_uav < r_uav_gu ? r_bs_uav : r_uav_gu; }
inline double slot_data(double r_eff, double delta2) { return r_eff * delta2; }

LinkBudget build_link(double d, int los, double p_tx_w, const ChannelParams& params, Rng& rng);

} // namespace uavdt
