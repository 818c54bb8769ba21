#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "eventid/synthgen.hpp"
#include "test_util.hpp"

using namespace eventid;

TEST_CASE("noiseless event equals the forward model of its drawn parameters") {
    ClassArchetype arch = default_archetype(kLabelGenLoss);
    arch.noise_sigma = 0.0;
    const int m = 5, n = 120;
    const double ts = 1.0 / 30.0;
    const std::uint64_t seed = 99;

    EventWindow w = generate_event(arch, kLabelGenLoss, m, n, ts, seed);
    ModeSet drawn = drawn_modes(arch, m, ts, seed);

    for (Channel c : kChannels) {
        for (int i = 0; i < m; ++i) {
            const Eigen::VectorXd model =
                evaluate_modes(drawn.channel_modes(c), i, n, ts);
            CHECK((w.channel(c).row(i).transpose() - model).norm() == 0.0);
        }
    }
}

TEST_CASE("generation is deterministic per seed") {
    const SynthConfig cfg;
    ClassArchetype arch = default_archetype(kLabelLoadLoss);
    EventWindow a = generate_event(arch, kLabelLoadLoss, 4, 60, cfg.ts, 7);
    EventWindow b = generate_event(arch, kLabelLoadLoss, 4, 60, cfg.ts, 7);
    for (Channel c : kChannels) CHECK(a.channel(c) == b.channel(c));

    EventWindow other = generate_event(arch, kLabelLoadLoss, 4, 60, cfg.ts, 8);
    bool all_equal = true;
    for (Channel c : kChannels) all_equal = all_equal && a.channel(c) == other.channel(c);
    CHECK(!all_equal);
}

TEST_CASE("drawn parameters stay within archetype ranges over 1000 seeds") {
    const ClassArchetype arch = default_archetype(kLabelGenLoss);
    const double ts = 1.0 / 30.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const ModeSet drawn = drawn_modes(arch, 3, ts, seed);
        for (Channel c : kChannels) {
            const auto& base = arch.channel_modes(c);
            const auto& got = drawn.channel_modes(c);
            REQUIRE(got.size() == base.size());
            for (std::size_t k = 0; k < base.size(); ++k) {
                CHECK(got[k].sigma >= base[k].sigma_base - base[k].sigma_jitter - 1e-12);
                CHECK(got[k].sigma <= base[k].sigma_base + base[k].sigma_jitter + 1e-12);
                CHECK(got[k].omega >= base[k].omega_base - base[k].omega_jitter - 1e-12);
                CHECK(got[k].omega <= base[k].omega_base + base[k].omega_jitter + 1e-12);
                // slot 0 magnitude before the per-PMU decay profile
                const double lo = base[k].rmag_base * (1.0 - base[k].rmag_jitter);
                const double hi = base[k].rmag_base * (1.0 + base[k].rmag_jitter);
                CHECK(got[k].residues[0].mag >= lo - 1e-12);
                CHECK(got[k].residues[0].mag <= hi + 1e-12);
            }
        }
    }
}

TEST_CASE("residue magnitudes decay geometrically across PMUs") {
    const ClassArchetype arch = default_archetype(kLabelLoadLoss);
    const ModeSet drawn = drawn_modes(arch, 6, 1.0 / 30.0, 42);
    for (Channel c : kChannels) {
        for (const Mode& mode : drawn.channel_modes(c)) {
            for (int i = 1; i < 6; ++i) {
                CHECK(mode.residues[i].mag ==
                      doctest::Approx(mode.residues[i - 1].mag * arch.residue_decay));
            }
        }
    }
}

TEST_CASE("dataset counts, ids and labels") {
    const SynthConfig cfg;
    auto full = generate_dataset(750, 750, cfg, 1);
    CHECK(full.size() == 1500);

    auto desk = generate_dataset(100, 100, cfg, 1);
    CHECK(desk.size() == 200);
    int gl = 0, ll = 0;
    std::set<std::string> ids;
    for (const auto& e : desk) {
        (e.label == kLabelGenLoss ? gl : ll)++;
        ids.insert(e.id);
    }
    CHECK(gl == 100);
    CHECK(ll == 100);
    CHECK(ids.size() == desk.size());
}

TEST_CASE("dataset generation is reproducible byte for byte") {
    SynthConfig cfg;
    cfg.num_pmus = 4;
    cfg.num_samples = 40;
    auto a = generate_dataset(3, 3, cfg, 5);
    auto b = generate_dataset(3, 3, cfg, 5);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        for (Channel c : kChannels) CHECK(a[i].channel(c) == b[i].channel(c));
    }
}

TEST_CASE("archetypes with possibly-positive damping are rejected") {
    ClassArchetype arch = default_archetype(kLabelGenLoss);
    arch.modes[0][0].sigma_base = -0.05;
    arch.modes[0][0].sigma_jitter = 0.2;  // upper end crosses zero
    CHECK_THROWS_AS(generate_event(arch, kLabelGenLoss, 2, 40, 1.0 / 30.0, 0), InvalidArchetype);
}

TEST_CASE("class archetypes are separated in the frequency channel") {
    const ClassArchetype gl = default_archetype(kLabelGenLoss);
    const ClassArchetype ll = default_archetype(kLabelLoadLoss);
    const ArchetypeMode& g0 = gl.channel_modes(Channel::F)[0];
    const ArchetypeMode& l0 = ll.channel_modes(Channel::F)[0];
    // jittered ranges of the dominant F mode must not overlap
    CHECK(g0.omega_base + g0.omega_jitter < l0.omega_base - l0.omega_jitter);
    CHECK(g0.sigma_base + g0.sigma_jitter < l0.sigma_base - l0.sigma_jitter);
}
