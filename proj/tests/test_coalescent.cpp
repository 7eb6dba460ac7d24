#include <doctest.h>

#include <cmath>
#include <set>

#include "dicekit/coalescent.hpp"
#include "dicekit/errors.hpp"
#include "family_zoo.hpp"
#include "test_support.hpp"

using namespace dicekit;

namespace {

CoalescentParams kingman1(double rho) {
    CoalescentParams cp;
    cp.coal.rho = {rho};
    cp.coal.q = {{}};
    cp.dice.d = 1;
    cp.dice.a = RateMatrixA(1);
    cp.dice.nu = ZeroMeasure{};
    return cp;
}

} // namespace

TEST_CASE("typed partitions serialize and parse with 1-based blocks ordered by least element") {
    TypedPartition pi;
    pi.blocks = {{0, 2}, {1}};
    pi.types = {1, 0};
    pi.validate(2);
    CHECK(pi.serialize() == "1,3:2|2:1");
    CHECK(TypedPartition::parse("1,3:2|2:1", 2) == pi);

    // Canonicalization sorts blocks by least element and elements in blocks.
    TypedPartition raw;
    raw.blocks = {{3}, {2, 0}, {1}};
    raw.types = {0, 1, 1};
    raw.canonicalize();
    CHECK(raw.blocks[0] == std::vector<int>{0, 2});
    CHECK(raw.serialize() == "1,3:2|2:2|4:1");
}

TEST_CASE("partition parsing rejects malformed text") {
    CHECK_THROWS_AS(TypedPartition::parse("1,3:2|2", 2), validation_error);
    CHECK_THROWS_AS(TypedPartition::parse("1:3", 2), validation_error);   // type out of range
    CHECK_THROWS_AS(TypedPartition::parse("1,1:1", 2), validation_error); // duplicate element
    CHECK_THROWS_AS(TypedPartition::parse("1,3:1", 2), validation_error); // gap in elements
    CHECK_THROWS_AS(TypedPartition::parse("1x:1", 2), validation_error);  // trailing garbage
    CHECK_THROWS_AS(TypedPartition::parse("", 2), validation_error);
}

TEST_CASE("singleton construction and restriction") {
    auto pi = TypedPartition::singletons({0, 1, 0, 1});
    CHECK(pi.block_count() == 4);
    CHECK(pi.serialize() == "1:1|2:2|3:1|4:2");

    auto merged = coal_apply(pi, {0, 2}, 1);
    CHECK(merged.serialize() == "1,3:2|2:2|4:2");
    auto cut = merged.restricted(2);
    CHECK(cut.serialize() == "1:2|2:2");
    auto cut3 = merged.restricted(3);
    CHECK(cut3.serialize() == "1,3:2|2:2");
    // Restriction that empties a block removes it entirely.
    TypedPartition tail;
    tail.blocks = {{0}, {1, 2, 3}};
    tail.types = {0, 1};
    CHECK(tail.restricted(1).serialize() == "1:1");
}

TEST_CASE("merging and retyping rebuild canonical partitions") {
    auto pi = TypedPartition::parse("1:1|2:2|3:1", 2);
    auto merged = coal_apply(pi, {1, 2}, 0);
    CHECK(merged.serialize() == "1:1|2,3:1");
    CHECK_THROWS_AS(coal_apply(pi, {1}, 0), validation_error); // needs two blocks

    auto retyped = muta_apply(pi, {1, 1, 1});
    CHECK(retyped.serialize() == "1:2|2:2|3:2");
}

TEST_CASE("merger rates combine the pairwise coefficient and participation atoms") {
    CoalescenceSpec spec;
    spec.rho = {2.0, 0.0};
    spec.q.resize(2);
    spec.q[0].push_back({0.5, {0.4, 0.9}});

    auto pi = TypedPartition::parse("1:1|2:1|3:2", 2);
    // Two type-1 blocks merging into type 1: rho contributes; the atom
    // contributes w * u1^2 * (1-u1)^0 * u2^0 * (1-u2)^1.
    double expect = 2.0 + 0.5 * 0.4 * 0.4 * 0.1;
    CHECK(coal_rate(pi, {0, 1}, 0, spec) == doctest::Approx(expect).epsilon(1e-12));
    // A mixed pair gets no rho even when both target type 1; the remaining
    // type-1 block stands by with factor (1 - u1).
    double mixed = 0.5 * 0.4 * 0.9 * 0.6;
    CHECK(coal_rate(pi, {0, 2}, 0, spec) == doctest::Approx(mixed).epsilon(1e-12));
    // Triple merger: atoms only.
    double triple = 0.5 * 0.4 * 0.4 * 0.9;
    CHECK(coal_rate(pi, {0, 1, 2}, 0, spec) == doctest::Approx(triple).epsilon(1e-12));
    // No atoms for type 2 and rho_2 = 0: impossible merger.
    CHECK(coal_rate(pi, {0, 1}, 1, spec) == 0.0);
}

TEST_CASE("type switching runs at the block-type process rate") {
    DiceParams p;
    p.d = 2;
    p.a = testsup::demo_rate_matrix(2);
    p.nu = testsup::family_zoo(2)[1].nu;
    auto pi = TypedPartition::parse("1,2:1|3:2", 2);
    // Block types (1, 2): switching to (2, 2) is the one-coordinate move of
    // the two-chain dice system.
    CHECK(switch_rate(pi, {1, 1}, p) ==
          doctest::Approx(config_rate(p, {0, 1}, {1, 1})).epsilon(1e-12));
    CHECK_THROWS_AS(switch_rate(pi, {0, 1}, p), validation_error); // not a change
}

TEST_CASE("coalescence specs validate their shapes") {
    CoalescenceSpec spec;
    spec.rho = {1.0};
    spec.q.resize(1);
    spec.q[0].push_back({0.5, {0.0}}); // all-zero atom merges nothing
    CHECK(testsup::throws_containing<validation_error>([&] { spec.validate(1); },
                                                       "all-zero"));
    CoalescenceSpec bad_u;
    bad_u.rho = {1.0};
    bad_u.q.resize(1);
    bad_u.q[0].push_back({0.5, {1.4}});
    CHECK_THROWS_AS(bad_u.validate(1), validation_error);
    CoalescenceSpec neg;
    neg.rho = {-1.0};
    neg.q.resize(1);
    CHECK_THROWS_AS(neg.validate(1), validation_error);
}

TEST_CASE("typed partition enumeration counts sum_k S(m,k) d^k") {
    CHECK(enumerate_typed_partitions(2, 2).size() == 6);   // 1*4 + 1*2
    CHECK(enumerate_typed_partitions(3, 2).size() == 22);  // 8 + 3*4 + 2
    CHECK(enumerate_typed_partitions(3, 3).size() == 57);  // 27 + 3*9 + 3
    auto all = enumerate_typed_partitions(3, 2);
    std::set<std::string> uniq;
    for (const auto& pi : all) uniq.insert(pi.serialize());
    CHECK(uniq.size() == all.size());
}

TEST_CASE("coalescent simulation is reproducible and absorbs under Kingman rates") {
    auto cp = kingman1(1.0);
    auto pi0 = TypedPartition::singletons({0, 0, 0});
    auto t1 = simulate_coalescent(pi0, cp, 100.0, 1e-3, 5);
    auto t2 = simulate_coalescent(pi0, cp, 100.0, 1e-3, 5);
    REQUIRE(t1.events.size() == t2.events.size());
    CHECK(t1.final_state == t2.final_state);
    CHECK(t1.final_state.block_count() == 1);
    // Two mergers happen, in order, each reducing the block count by one.
    int mergers = 0;
    for (const auto& ev : t1.events)
        if (ev.merger) ++mergers;
    CHECK(mergers == 2);
}

TEST_CASE("kingman absorption time from three lineages has mean four thirds") {
    auto cp = kingman1(1.0);
    auto pi0 = TypedPartition::singletons({0, 0, 0});
    testsup::MeanAccumulator tmrca;
    for (std::uint64_t s = 0; s < 20000; ++s) {
        auto traj = simulate_coalescent(pi0, cp, 60.0, 1e-3, 1234, s);
        REQUIRE(traj.final_state.block_count() == 1);
        double last = 0.0;
        for (const auto& ev : traj.events)
            if (ev.merger) last = ev.time;
        tmrca.add(last);
    }
    CHECK(std::abs(tmrca.mean - 4.0 / 3.0) < 3.0 * tmrca.se());
}

TEST_CASE("multiple-merger atoms reach deeper than pairwise rates") {
    CoalescentParams cp;
    cp.coal.rho = {0.0};
    cp.coal.q = {{{1.0, {1.0}}}}; // every block participates: star coalescent
    cp.dice.d = 1;
    cp.dice.a = RateMatrixA(1);
    auto pi0 = TypedPartition::singletons({0, 0, 0, 0});
    auto traj = simulate_coalescent(pi0, cp, 50.0, 1e-3, 8);
    REQUIRE(!traj.events.empty());
    // The first merger takes all four lineages at once.
    CHECK(traj.events.front().participants.size() == 4);
    CHECK(traj.final_state.block_count() == 1);
}

TEST_CASE("block types switch according to the dice dynamics while merging") {
    CoalescentParams cp;
    cp.coal.rho = {1.0, 1.0};
    cp.coal.q.resize(2);
    cp.dice.d = 2;
    cp.dice.a = testsup::demo_rate_matrix(2);
    cp.dice.nu = testsup::family_zoo(2)[1].nu;
    auto pi0 = TypedPartition::singletons({0, 1, 0, 1});
    auto traj = simulate_coalescent(pi0, cp, 3.0, 1e-3, 99);
    bool saw_switch = false;
    for (const auto& ev : traj.events)
        if (!ev.merger && ev.changed) saw_switch = true;
    CHECK(saw_switch);
    traj.final_state.validate(2);
}

TEST_CASE("element cap is enforced") {
    auto cp = kingman1(1.0);
    Config big(kCoalescentElementCap + 1, 0);
    CHECK_THROWS_AS(simulate_coalescent(TypedPartition::singletons(big), cp, 1.0, 1e-3, 1),
                    resource_error);
}

TEST_CASE("coalescent restriction consistency holds and its negative control fails") {
    CoalescentParams cp;
    cp.coal.rho = {0.8, 1.2};
    cp.coal.q.resize(2);
    cp.coal.q[0].push_back({0.4, {0.7, 0.2}});
    cp.dice.d = 2;
    cp.dice.a = testsup::demo_rate_matrix(2);
    cp.dice.nu = testsup::family_zoo(2)[1].nu;
    auto pi0 = TypedPartition::singletons({0, 1, 0});
    auto rep = coalescent_consistency_test(pi0, cp, 2, 0.7, 30000, 616);
    CHECK(rep.pass());

    CoalescentParams wrong = cp;
    wrong.coal.rho = {3.5, 0.1};
    auto bad = coalescent_consistency_test(pi0, cp, 2, 0.7, 30000, 616, 1e-3, wrong);
    CHECK_FALSE(bad.pass());
}
