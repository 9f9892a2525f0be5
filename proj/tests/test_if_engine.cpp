#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "kirin/if_engine.hpp"
#include "kirin/rng.hpp"

using namespace kirin;

TEST_CASE("rate IF drains a simple train completely") {
    const std::int32_t codes[] = {3};
    const std::int32_t weights[] = {2};
    const SpikeTrain t = encode_rate(codes, 16);
    const RateRunResult r = if_rate_run(t, weights, 2.0);
    CHECK(r.output_spikes == 3);
    CHECK(r.residual_v == 0.0);
}

TEST_CASE("empty rate input yields no output spikes") {
    const std::vector<std::int32_t> codes;
    const SpikeTrain t = encode_rate(codes, 8);
    const RateRunResult r = if_rate_run(t, {}, 1.0);
    CHECK(r.output_spikes == 0);
}

TEST_CASE("rate IF count equals the floor closed form on nonnegative instances") {
    Rng rng(99);
    for (int iter = 0; iter < 2000; ++iter) {
        const std::int64_t T = rng.uniform_int(1, 8);
        const std::int64_t n = rng.uniform_int(1, 4);
        std::vector<std::int32_t> codes(static_cast<std::size_t>(n));
        std::vector<std::int32_t> weights(static_cast<std::size_t>(n));
        std::int64_t total = 0;
        for (std::size_t i = 0; i < codes.size(); ++i) {
            codes[i] = static_cast<std::int32_t>(rng.uniform_int(0, T));
            weights[i] = static_cast<std::int32_t>(rng.uniform_int(0, 4));
            total += std::int64_t(codes[i]) * weights[i];
        }
        const double v_th = static_cast<double>(rng.uniform_int(1, 8));
        const SpikeTrain t = encode_rate(codes, T);
        const RateRunResult r = if_rate_run(t, weights, v_th);
        CHECK(r.output_spikes ==
              static_cast<std::int64_t>(std::floor(static_cast<double>(total) / v_th)));
    }
}

TEST_CASE("window-truncated mode can undershoot the closed form") {
    // one neuron, every step carries weight 4 against a unit threshold:
    // the backlog cannot drain inside the window
    const std::int32_t codes[] = {8};
    const std::int32_t weights[] = {4};
    const SpikeTrain t = encode_rate(codes, 8);
    const RateRunResult truncated = if_rate_run(t, weights, 1.0, /*drain=*/false);
    const RateRunResult drained = if_rate_run(t, weights, 1.0);
    CHECK(truncated.output_spikes == 8);
    CHECK(drained.output_spikes == 32);
}

TEST_CASE("classic ttfs fires once and discards the rest") {
    // neuron A spikes at t=4 (weight 1 -> current 4), neuron B at t=5
    // (weight 2 -> current 10); threshold 3 crosses at t=4
    const std::int32_t codes[] = {4, 5};
    const std::int32_t weights[] = {1, 2};
    const SpikeTrain t = encode_ttfs(codes, 16);
    const ClassicTtfsResult r = if_ttfs_classic_run(t, weights, 3.0);
    REQUIRE(r.fire_time.has_value());
    CHECK(*r.fire_time == 4);
    CHECK(r.v_at_fire == 4);
    CHECK(r.v_total_full == 14);
    CHECK(r.truncated_potential == 10);
}

TEST_CASE("classic ttfs stays silent below threshold") {
    const std::int32_t codes[] = {2};
    const std::int32_t weights[] = {1};
    const SpikeTrain t = encode_ttfs(codes, 16);
    const ClassicTtfsResult r = if_ttfs_classic_run(t, weights, 100.0);
    CHECK_FALSE(r.fire_time.has_value());
}

TEST_CASE("classic ttfs truncates information the silence threshold keeps") {
    // existence witness: classic output differs from the silence count
    Rng rng(4242);
    bool found = false;
    for (int iter = 0; iter < 500 && !found; ++iter) {
        const std::int64_t n = rng.uniform_int(2, 6);
        std::vector<std::int32_t> codes(static_cast<std::size_t>(n));
        std::vector<std::int32_t> weights(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < codes.size(); ++i) {
            codes[i] = static_cast<std::int32_t>(rng.uniform_int(0, 15));
            weights[i] = static_cast<std::int32_t>(rng.uniform_int(0, 7));
        }
        const SpikeTrain t = encode_ttfs(codes, 16);
        const std::int64_t v_total = accumulate_potential(t, weights);
        const ThresholdSpec spec = ThresholdSpec::from_scales(0.5, 0.5);
        const IFResult silence = if_silence_run(v_total, spec, 0.0);
        const ClassicTtfsResult classic = if_ttfs_classic_run(t, weights, spec.v_th);
        const std::int64_t classic_value =
            classic.fire_time ? *classic.fire_time : 0;
        if (classic_value != silence.silence_count_st &&
            silence.silence_count_st > 0)
            found = true;
    }
    CHECK(found);
}

TEST_CASE("silence threshold worked example") {
    const ThresholdSpec spec = ThresholdSpec::from_scales(0.5, 0.5);
    CHECK(spec.v_th == 4.0);
    CHECK(spec.s_th == spec.v_th);
    const IFResult r = if_silence_run(10, spec, 0.0);
    CHECK(r.silence_count_st == 2);
    CHECK(r.residual_v_rest == 2.0);
    CHECK(r.output_value == 2.5);

    const IFResult zero = if_silence_run(0, spec, 1.5);
    CHECK(zero.silence_count_st == 0);
    CHECK(zero.output_value == 1.5);
}

TEST_CASE("silence threshold algebra holds over random draws") {
    Rng rng(31337);
    for (int iter = 0; iter < 20000; ++iter) {
        const std::int64_t v = rng.uniform_int(-1000000, 1000000);
        const double s1 = rng.uniform(1e-3, 10.0);
        const double s2 = rng.uniform(1e-3, 10.0);
        const double bias = rng.uniform(-2.0, 2.0);
        const ThresholdSpec spec = ThresholdSpec::from_scales(s1, s2);
        const IFResult r = if_silence_run(v, spec, bias);

        // firing identity, exact in the arithmetic performed
        CHECK(static_cast<double>(r.silence_count_st) * spec.s_th +
                  r.residual_v_rest ==
              static_cast<double>(v));
        CHECK(r.residual_v_rest >= 0.0);
        CHECK(r.residual_v_rest < spec.s_th);
        // the fired value is exactly the dequantized reference
        CHECK(r.output_value == spec.scale_product * static_cast<double>(v) + bias);
        if (v >= 0) CHECK(r.silence_count_st >= 0);
        CHECK(r.negative_st == (r.silence_count_st < 0));
    }
}

TEST_CASE("emission mode clamps the spike time and flags it") {
    const ThresholdSpec spec = ThresholdSpec::from_scales(1.0, 1.0);
    const IFResult r = if_silence_run(100, spec, 0.0, /*emission_window=*/16);
    CHECK(r.silence_count_st == 100);
    CHECK(r.output_spike_time == 15);
    CHECK(r.truncated);
    CHECK(r.output_value == 100.0); // the carried value stays exact

    const IFResult neg = if_silence_run(-3, spec, 0.0, 16);
    CHECK(neg.output_spike_time == 0);
    CHECK(neg.truncated);
    CHECK(neg.negative_st);

    const IFResult fits = if_silence_run(7, spec, 0.0, 16);
    CHECK(fits.output_spike_time == 7);
    CHECK_FALSE(fits.truncated);
}

TEST_CASE("bulk accumulation worked example and oracle") {
    const std::int32_t codes[] = {5, 3};
    const std::int32_t weights[] = {2, -1};
    const SpikeTrain t = encode_ttfs(codes, 16);
    CHECK(accumulate_potential(t, weights) == 7);

    const std::int32_t silent[] = {0, 0};
    CHECK(accumulate_potential(encode_ttfs(silent, 16), weights) == 0);

    Rng rng(555);
    for (int iter = 0; iter < 1000; ++iter) {
        const std::int64_t n = rng.uniform_int(1, 16);
        std::vector<std::int32_t> codes_r(static_cast<std::size_t>(n));
        std::vector<std::int32_t> weights_r(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < codes_r.size(); ++i) {
            codes_r[i] = static_cast<std::int32_t>(rng.uniform_int(-15, 15));
            weights_r[i] = static_cast<std::int32_t>(rng.uniform_int(-20, 20));
        }
        const SpikeTrain train = encode_ttfs(codes_r, 16);
        std::int64_t dot = 0;
        const auto decoded = decode(train);
        for (std::size_t i = 0; i < decoded.size(); ++i)
            dot += std::int64_t(decoded[i]) * weights_r[i];
        CHECK(accumulate_potential(train, weights_r) == dot);
    }
}

TEST_CASE("length mismatches are rejected") {
    const std::int32_t codes[] = {1, 2};
    const std::int32_t weights[] = {1};
    const SpikeTrain ttfs = encode_ttfs(codes, 16);
    const SpikeTrain rate = encode_rate(codes, 16);
    CHECK_THROWS(accumulate_potential(ttfs, weights));
    CHECK_THROWS(if_rate_run(rate, weights, 1.0));
    CHECK_THROWS(if_ttfs_classic_run(ttfs, weights, 1.0));
    CHECK_THROWS(if_rate_run(ttfs, codes, 1.0)); // wrong scheme
}
