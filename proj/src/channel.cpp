#include "uavdt/channel.hpp"

#include <cmath>
#include <random>

namespace uavdt {

double free_space_path_loss_db(double d, double carrier_hz, double light_speed)
{
    if (!(d > 0.0))
        throw DomainError("path loss distance must be positive");
    return 20.0 * std::log10(d) + 20.0 * std::log10(carrier_hz) + 20.0 * std::log10(4.0 * kPi / light_speed);
}

double large_scale_fading_db(double d, int los, const ChannelParams& params)
{
    const double pl = free_space_path_loss_db(d, params.carrier_hz, params.light_speed);
    return pl + (los ? params.gamma_los_db : params.gamma_nlos_db);
}

double sample_small_scale(int los, const ChannelParams& params, Rng& rng)
{
    if (params.freeze_fading)
        return 1.0;
    // CN(0,1): independent real and imaginary parts with variance 1/2 each.
    std::normal_distribution<double> half(0.0, std::sqrt(0.5));
    const double re = half(rng);
    const double im = half(rng);
    if (!los)
        return re * re + im * im;
    const double k = db_to_linear(params.rician_k_db);
    const double spec = std::sqrt(k / (k + 1.0));
    const double diff = std::sqrt(1.0 / (k + 1.0));
    const double a = spec + diff * re;
    const double b = diff * im;
    return a * a + b * b;
}

double link_rate(double p_tx_w, double gain_mag2, const ChannelParams& params)
{
    if (gain_mag2 < 0.0)
        throw DomainError("channel gain must be non-negative");
    return params.bandwidth_hz * std::log2(1.0 + p_tx_w * gain_mag2 / params.noise_w);
}

LinkBudget build_link(double d, int los, double p_tx_w, const ChannelParams& params, Rng& rng)
{
    LinkBudget lb;
    lb.distance = d;
    lb.los = los ? 1 : 0;
    lb.lsf_db = large_scale_fading_db(d, lb.los, params);
    lb.ssf_mag2 = sample_small_scale(lb.los, params, rng);
    lb.gain_mag2 = std::pow(10.0, -lb.lsf_db / 10.0) * lb.ssf_mag2;
    lb.rate_bps = link_rate(p_tx_w, lb.gain_mag2, params);
    return lb;
}

} // namespace uavdt
