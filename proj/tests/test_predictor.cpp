#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "ipdl/errors.hpp"
#include "ipdl/predictor.hpp"
#include "ipdl/synthgen.hpp"

using namespace ipdl;

namespace {

// 2 destinations x 3 modes grid used by the solver oracles.
struct Grid {
    std::vector<Alternative> alts = {{Mode::Driving, 0}, {Mode::Transit, 0},
                                     {Mode::Walking, 0}, {Mode::Driving, 1},
                                     {Mode::Transit, 1}, {Mode::Walking, 1}};
    NestingStructure nesting = build_nesting(alts, 2);
    ChoiceSet cs = make_choice_set(nesting, {0, 1, 2, 3, 4, 5});
};

std::vector<double> random_utilities(std::mt19937_64& rng, size_t n, double lo = -2,
                                     double hi = 2) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

// Oracle 1: plain softmax with an outside option at utility 0.
std::vector<double> softmax0(const std::vector<double>& V, double& outside) {
    double denom = 1;
    std::vector<double> e(V.size());
    for (size_t j = 0; j < V.size(); ++j) denom += (e[j] = std::exp(V[j]));
    for (auto& x : e) x /= denom;
    outside = 1 / denom;
    return e;
}

// Oracle 2: closed-form two-level nested logit with the outside option in
// its own singleton nest; nest scale mu = 1 - rho.
std::vector<double> nested_logit(const ChoiceSet& cs, const std::vector<double>& V,
                                 const std::vector<int>& nest_of, size_t n_nests,
                                 double rho, double& outside) {
    double mu = 1 - rho;
    std::vector<double> expsum(n_nests, 0.0);
    for (size_t j = 0; j < V.size(); ++j) expsum[nest_of[j]] += std::exp(V[j] / mu);
    double denom = 1; // outside nest: inclusive value exp(0)
    for (double es : expsum) denom += std::pow(es, mu);
    std::vector<double> s(V.size());
    for (size_t j = 0; j < V.size(); ++j) {
        int g = nest_of[j];
        s[j] = std::pow(expsum[g], mu) / denom * std::exp(V[j] / mu) / expsum[g];
    }
    outside = 1 / denom;
    (void)cs;
    return s;
}

// Oracle 3: mirror descent on the convex potential
//   Omega(s) = (1 - sum rho) sum_j s_j ln s_j
//            + sum_h rho_h sum_g S_g ln S_g + s_0 ln s_0 - sum_j s_j V_j
// whose minimizer over the simplex is the IPDL share vector.
std::vector<double> mirror_descent(const ChoiceSet& cs, const std::vector<double>& V,
                                   double rho_m, double rho_d, double& outside) {
    size_t n = V.size();
    std::vector<double> s(n, 1.0 / (n + 1));
    double s0 = 1.0 / (n + 1);
    double rsum = rho_m + rho_d;
    double eta = 0.5;
    for (int it = 0; it < 200000; ++it) {
        std::vector<double> Sm(cs.mode_members.size(), 0), Sd(cs.dest_members.size(), 0);
        for (size_t j = 0; j < n; ++j) {
            Sm[cs.mode_g[j]] += s[j];
            Sd[cs.dest_g[j]] += s[j];
        }
        // gradient of Omega - s.V (the +1 entropy terms cancel after
        // normalization)
        std::vector<double> g(n);
        double g0 = std::log(s0);
        double gmax = g0;
        for (size_t j = 0; j < n; ++j) {
            g[j] = (1 - rsum) * std::log(s[j]) + rho_m * std::log(Sm[cs.mode_g[j]]) +
                   rho_d * std::log(Sd[cs.dest_g[j]]) - V[j];
            gmax = std::max(gmax, g[j]);
        }
        double denom = s0 * std::exp(-eta * (g0 - gmax));
        std::vector<double> ns(n);
        for (size_t j = 0; j < n; ++j) denom += (ns[j] = s[j] * std::exp(-eta * (g[j] - gmax)));
        double delta = 0;
        double ns0 = s0 * std::exp(-eta * (g0 - gmax)) / denom;
        for (size_t j = 0; j < n; ++j) {
            ns[j] /= denom;
            delta = std::max(delta, std::fabs(ns[j] - s[j]));
            s[j] = ns[j];
        }
        delta = std::max(delta, std::fabs(ns0 - s0));
        s0 = ns0;
        if (delta < 1e-14) break;
    }
    outside = s0;
    return s;
}

} // namespace

TEST_CASE("rho = 0 equals plain softmax to machine precision") {
    Grid grid;
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 200; ++rep) {
        auto V = random_utilities(rng, 6);
        double o_ref;
        auto ref = softmax0(V, o_ref);
        ShareResult got = solve_shares(grid.cs, V, 0, 0);
        for (size_t j = 0; j < V.size(); ++j)
            CHECK(got.inside[j] == doctest::Approx(ref[j]).epsilon(1e-13));
        CHECK(got.outside == doctest::Approx(o_ref).epsilon(1e-13));
        // the plain-logit switch gives the same result regardless of rho
        SolveOptions plain;
        plain.forward = ForwardModel::PlainLogit;
        ShareResult pl = solve_shares(grid.cs, V, 0.3, 0.2, plain);
        CHECK(pl.inside[0] == doctest::Approx(ref[0]).epsilon(1e-13));
    }
}

TEST_CASE("single-dimension IPDL matches closed-form nested logit") {
    Grid grid;
    std::mt19937_64 rng(11);
    for (double rho : {0.2, 0.5, 0.8}) {
        for (int rep = 0; rep < 30; ++rep) {
            auto V = random_utilities(rng, 6);
            double o_ref, o_got;

            // mode dimension active
            auto ref = nested_logit(grid.cs, V, grid.cs.mode_g,
                                    grid.cs.mode_members.size(), rho, o_ref);
            ShareResult got = solve_shares(grid.cs, V, rho, 0);
            o_got = got.outside;
            for (size_t j = 0; j < V.size(); ++j)
                CHECK(got.inside[j] == doctest::Approx(ref[j]).epsilon(1e-8));
            CHECK(o_got == doctest::Approx(o_ref).epsilon(1e-8));

            // destination dimension active
            ref = nested_logit(grid.cs, V, grid.cs.dest_g, grid.cs.dest_members.size(),
                               rho, o_ref);
            got = solve_shares(grid.cs, V, 0, rho);
            for (size_t j = 0; j < V.size(); ++j)
                CHECK(got.inside[j] == doctest::Approx(ref[j]).epsilon(1e-8));
        }
    }
}

TEST_CASE("two-dimension IPDL minimizes the convex potential (mirror descent oracle)") {
    Grid grid;
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 5; ++rep) {
        auto V = random_utilities(rng, 6);
        double o_ref;
        auto ref = mirror_descent(grid.cs, V, 0.3, 0.2, o_ref);
        ShareResult got = solve_shares(grid.cs, V, 0.3, 0.2);
        for (size_t j = 0; j < V.size(); ++j)
            CHECK(got.inside[j] == doctest::Approx(ref[j]).epsilon(1e-7));
        CHECK(got.outside == doctest::Approx(o_ref).epsilon(1e-7));
    }
}

TEST_CASE("forward and inverse demand are mutual inverses") {
    Grid grid;
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 100; ++rep) {
        auto V = random_utilities(rng, 6);
        ShareResult s = solve_shares(grid.cs, V, 0.3, 0.2);
        auto Vb = inverse_utility(grid.cs, s.inside, s.outside, 0.3, 0.2);
        for (size_t j = 0; j < V.size(); ++j)
            CHECK(Vb[j] == doctest::Approx(V[j]).epsilon(1e-8));
    }
}

TEST_CASE("solver input validation") {
    Grid grid;
    std::vector<double> V(6, 0.0);
    CHECK_THROWS_AS(solve_shares(grid.cs, V, 0.6, 0.5), Error); // sum >= 1
    CHECK_THROWS_AS(solve_shares(grid.cs, V, -0.1, 0), Error);
    CHECK_THROWS_AS(solve_shares(grid.cs, {1.0}, 0.1, 0), Error); // size mismatch
    std::vector<double> bad = V;
    bad[0] = std::nan("");
    CHECK_THROWS_AS(solve_shares(grid.cs, bad, 0.1, 0), Error);
    CHECK_THROWS_AS(inverse_utility(grid.cs, {0.1, 0.1, 0.1, 0.1, 0.1, 0.0}, 0.5, 0.1, 0),
                    Error); // zero share
}

TEST_CASE("higher utility raises own share (monotonicity)") {
    Grid grid;
    std::vector<double> V(6, 0.2);
    ShareResult base = solve_shares(grid.cs, V, 0.3, 0.2);
    V[2] += 0.5;
    ShareResult up = solve_shares(grid.cs, V, 0.3, 0.2);
    CHECK(up.inside[2] > base.inside[2]);
    CHECK(up.outside < base.outside);
}

TEST_CASE("scenario application semantics") {
    auto gen = testutil::small_exact();
    const MarketDataset& ds = gen.dataset;

    // pick a market whose origin is not in the CRZ and a CRZ-destined
    // driving alternative
    int crz = *ds.crz_zone();
    int mi = 0;
    const Market& m = ds.markets[mi];
    REQUIRE_FALSE(ds.zones[m.origin].is_crz);
    int alt_drive = ds.alternative(Mode::Driving, crz);
    int alt_transit = ds.alternative(Mode::Transit, crz);
    int cell_drive = -1, cell_transit = -1;
    for (size_t c = 0; c < m.cells.size(); ++c) {
        if (m.cells[c].alt == alt_drive) cell_drive = (int)c;
        if (m.cells[c].alt == alt_transit) cell_transit = (int)c;
    }
    REQUIRE(cell_drive >= 0);

    Scenario sc;
    sc.toll[{Mode::Driving, Period::Peak}] = 9.0;
    sc.crz_auto_time_factor = 1 / 1.15;

    SUBCASE("toll and speed factor hit CRZ-destined driving only") {
        auto eff = apply_scenario(sc, ds, mi, ds.alternatives[alt_drive],
                                  m.cells[cell_drive].attrs);
        CHECK(eff.toll_paid == 9.0);
        CHECK(eff.attrs.cost ==
              doctest::Approx(m.cells[cell_drive].attrs.cost + 9.0));
        CHECK(eff.attrs.tt == doctest::Approx(m.cells[cell_drive].attrs.tt / 1.15));

        int alt_other = ds.alternative(Mode::Driving, ds.zones[crz].id == "D1"
                                                          ? ds.zone("D2")
                                                          : ds.zone("D1"));
        const MarketCell* other = nullptr;
        for (const auto& c : m.cells)
            if (c.alt == alt_other) other = &c;
        REQUIRE(other);
        auto eff2 = apply_scenario(sc, ds, mi, ds.alternatives[alt_other], other->attrs);
        CHECK(eff2.toll_paid == 0);
        CHECK(eff2.attrs.cost == other->attrs.cost);
        CHECK(eff2.attrs.tt == other->attrs.tt);
    }

    SUBCASE("wait reduction floors at zero and counts the clamp") {
        Scenario wsc;
        wsc.transit_wait_delta = -1000;
        auto eff = apply_scenario(wsc, ds, mi, ds.alternatives[alt_transit],
                                  m.cells[cell_transit].attrs);
        CHECK(eff.attrs.wait == 0);
        CHECK(eff.clamps == 1);
    }

    SUBCASE("fare discount applies only to the market's population") {
        Scenario fsc;
        fsc.transit_fare_delta[Population::Senior] = -1.0;
        auto eff = apply_scenario(fsc, ds, mi, ds.alternatives[alt_transit],
                                  m.cells[cell_transit].attrs);
        // market 0 belongs to NotLowIncome in the generated dataset
        CHECK(eff.attrs.cost == m.cells[cell_transit].attrs.cost);
    }

    SUBCASE("toll ASCs enter only when active and only where charged") {
        const SegmentParams* p0 = &gen.truth.require(m.segment);
        SegmentParams p = *p0;
        p.toll_asc_driving = -0.3;
        p.toll_asc_crz = -0.2;
        double v_off = post_utility(p, ds, mi, ds.alternatives[alt_drive],
                                    m.cells[cell_drive].attrs, sc);
        Scenario sc_on = sc;
        sc_on.toll_asc_active = true;
        double v_on = post_utility(p, ds, mi, ds.alternatives[alt_drive],
                                   m.cells[cell_drive].attrs, sc_on);
        CHECK(v_on == doctest::Approx(v_off - 0.5));
        // transit to CRZ gets only the CRZ constant
        double t_off = post_utility(p, ds, mi, ds.alternatives[alt_transit],
                                    m.cells[cell_transit].attrs, sc);
        double t_on = post_utility(p, ds, mi, ds.alternatives[alt_transit],
                                   m.cells[cell_transit].attrs, sc_on);
        CHECK(t_on == doctest::Approx(t_off - 0.2));
    }

    SUBCASE("identity scenario is a bitwise no-op") {
        Scenario id;
        double a = post_utility(gen.truth.require(m.segment), ds, mi,
                                ds.alternatives[alt_drive], m.cells[cell_drive].attrs, id);
        double b = systematic_utility(gen.truth.require(m.segment),
                                      ds.zones[m.origin].is_nyc, Mode::Driving, crz,
                                      m.cells[cell_drive].attrs);
        CHECK(a == b);
    }
}

TEST_CASE("identity prediction reproduces generated trips") {
    auto gen = testutil::small_exact();
    Prediction pred = predict_volumes(gen.dataset, gen.truth, Scenario{});
    size_t r = 0;
    for (const auto& m : gen.dataset.markets)
        for (const auto& c : m.cells) {
            CHECK(pred.rows[r].trips ==
                  doctest::Approx(c.trips).epsilon(1e-7));
            ++r;
        }
}

TEST_CASE("prediction is independent of the worker count") {
    auto gen = testutil::small_exact();
    Scenario sc;
    sc.toll[{Mode::Driving, Period::Peak}] = 9.0;
    Prediction p1 = predict_volumes(gen.dataset, gen.truth, sc, {}, 1);
    Prediction p4 = predict_volumes(gen.dataset, gen.truth, sc, {}, 4);
    REQUIRE(p1.rows.size() == p4.rows.size());
    for (size_t i = 0; i < p1.rows.size(); ++i) {
        CHECK(p1.rows[i].market == p4.rows[i].market);
        CHECK(p1.rows[i].alt == p4.rows[i].alt);
        CHECK(p1.rows[i].trips == p4.rows[i].trips); // bitwise
    }
}

TEST_CASE("prediction rejects incomplete attribute coverage") {
    auto gen = testutil::small_exact();
    gen.dataset.markets[0].cells.pop_back();
    CHECK_THROWS_WITH_AS(predict_volumes(gen.dataset, gen.truth, Scenario{}),
                         doctest::Contains("MissingAttributes"), Error);
}
