#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "uavdt/channel.hpp"

#include <cmath>

using namespace uavdt;

TEST_CASE("free-space path loss, term by term")
{
    // 20 log10(4 pi f / c) at f = 2 GHz.
    const double at_1m = 20.0 * std::log10(4.0 * kPi * 2e9 / 3e8);
    CHECK(free_space_path_loss_db(1.0, 2e9) == doctest::Approx(at_1m).epsilon(1e-12));
    CHECK(std::abs(free_space_path_loss_db(1.0, 2e9) - 38.462) < 1e-3);
    CHECK(std::abs(free_space_path_loss_db(100.0, 2e9) - 78.462) < 1e-3);
    CHECK(free_space_path_loss_db(250.0, 2e9) - free_space_path_loss_db(25.0, 2e9) == doctest::Approx(20.0));
    CHECK_THROWS_AS(free_space_path_loss_db(0.0, 2e9), DomainError);
    CHECK_THROWS_AS(free_space_path_loss_db(-3.0, 2e9), DomainError);
}

TEST_CASE("large-scale fading adds the shadowing constant")
{
    const ChannelParams p;
    CHECK(std::abs(large_scale_fading_db(100.0, 1, p) - 78.562) < 1e-3);
    CHECK(std::abs(large_scale_fading_db(100.0, 0, p) - 99.462) < 1e-3);
    for (double d : {1.0, 37.0, 900.0})
        CHECK(large_scale_fading_db(d, 0, p) - large_scale_fading_db(d, 1, p) == doctest::Approx(20.9));
}

TEST_CASE("small-scale fading calibration")
{
    ChannelParams p;
    Rng rng(11);
    double rayleigh = 0.0, rician = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        rayleigh += sample_small_scale(0, p, rng);
        rician += sample_small_scale(1, p, rng);
    }
    CHECK(rayleigh / n >= 0.99);
    CHECK(rayleigh / n <= 1.01);
    CHECK(rician / n >= 0.99);
    CHECK(rician / n <= 1.01);

    p.rician_k_db = 400.0; // K -> infinity: the specular term alone
    CHECK(sample_small_scale(1, p, rng) == doctest::Approx(1.0).epsilon(1e-12));
    p.freeze_fading = true;
    CHECK(sample_small_scale(0, p, rng) == 1.0);
}

TEST_CASE("Shannon rate")
{
    ChannelParams p;
    // Choose the gain so that SNR is exactly 1 and 3.
    const double unit = p.noise_w / p.bs_power_w;
    CHECK(link_rate(p.bs_power_w, unit, p) == doctest::Approx(1e7));
    CHECK(link_rate(p.bs_power_w, 3.0 * unit, p) == doctest::Approx(2e7));
    CHECK(link_rate(p.bs_power_w, 0.0, p) == 0.0);
    CHECK_THROWS_AS(link_rate(p.bs_power_w, -1.0, p), DomainError);
}

TEST_CASE("bottleneck rate and slot data")
{
    CHECK(effective_rate(5e6, 8e6) == 5e6);
    CHECK(effective_rate(4.2e6, 4.2e6) == 4.2e6);
    CHECK(effective_rate(0.0, 8e6) == 0.0);
    CHECK(slot_data(2e7, 0.5) == 1e7);
    CHECK(slot_data(0.0, 0.5) == 0.0);
}

TEST_CASE("link budget")
{
    ChannelParams p;
    Rng a(5), b(5);
    const auto x = build_link(140.0, 0, p.uav_power_w, p, a);
    const auto y = build_link(140.0, 0, p.uav_power_w, p, b);
    CHECK(x.rate_bps == y.rate_bps);
    CHECK(x.ssf_mag2 == y.ssf_mag2);

    p.freeze_fading = true;
    Rng r(1);
    const auto los = build_link(100.0, 1, p.uav_power_w, p, r);
    const auto nlos = build_link(100.0, 0, p.uav_power_w, p, r);
    CHECK(los.gain_mag2 == doctest::Approx(std::pow(10.0, -7.8562)).epsilon(1e-4));
    CHECK(los.gain_mag2 / nlos.gain_mag2 == doctest::Approx(std::pow(10.0, 2.09)));
    CHECK(los.rate_bps > nlos.rate_bps);
}

TEST_CASE("dBm conversion")
{
    CHECK(dbm_to_watt(30.0) == doctest::Approx(1.0));
    CHECK(dbm_to_watt(40.0) == doctest::Approx(10.0));
    CHECK(dbm_to_watt(-75.0) == doctest::Approx(3.1622776601683795e-11));
}
