#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ipdl/errors.hpp"
#include "ipdl/estimator.hpp"
#include "ipdl/synthgen.hpp"

using namespace ipdl;

namespace {

double rel_err(double got, double truth) {
    return std::fabs(got - truth) / std::max(1.0, std::fabs(truth));
}

void check_recovery(const SegmentParams& got, const SegmentParams& truth,
                    const MarketDataset& ds, double tol) {
    CHECK(rel_err(got.auto_tt, truth.auto_tt) < tol);
    CHECK(rel_err(got.auto_tt_nyc, truth.auto_tt_nyc) < tol);
    CHECK(rel_err(got.at, truth.at) < tol);
    CHECK(rel_err(got.et, truth.et) < tol);
    CHECK(rel_err(got.wt, truth.wt) < tol);
    CHECK(rel_err(got.ivt, truth.ivt) < tol);
    CHECK(rel_err(got.trans, truth.trans) < tol);
    CHECK(rel_err(got.nonauto_tt, truth.nonauto_tt) < tol);
    CHECK(rel_err(got.cost, truth.cost) < tol);
    CHECK(rel_err(got.cost_nyc, truth.cost_nyc) < tol);
    CHECK(rel_err(got.asc_driving, truth.asc_driving) < tol);
    CHECK(rel_err(got.asc_transit, truth.asc_transit) < tol);
    CHECK(rel_err(got.asc_fhv, truth.asc_fhv) < tol);
    CHECK(rel_err(got.asc_biking, truth.asc_biking) < tol);
    CHECK(rel_err(got.asc_walking, truth.asc_walking) < tol);
    CHECK(rel_err(got.rho_mode, truth.rho_mode) < tol);
    CHECK(rel_err(got.rho_dest, truth.rho_dest) < tol);
    // destination ASCs exist only for zones appearing as destinations
    for (const auto& a : ds.alternatives)
        CHECK(rel_err(got.dest_asc_of(a.dest), truth.dest_asc_of(a.dest)) < tol);
}

} // namespace

TEST_CASE("OLS on exact shares recovers the generating parameters") {
    auto gen = testutil::small_exact();
    const MarketDataset& ds = gen.dataset;
    for (const Segment& seg : ds.segments) {
        DesignMatrix d = build_design(ds, seg, ModelClass::IPDL);
        EstimationResult r = fit(d, nullptr, Method::OLS);
        check_recovery(r.params, gen.truth.require(seg), ds, 1e-6);
        CHECK(r.adj_r2 == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(r.rho_in_range);
        CHECK(r.dropped_rows == 0);
        CHECK(r.dropped_markets == 0);
    }
}

TEST_CASE("rounded trips keep recovery within 1e-3") {
    GenerationSpec spec;
    spec.seed = 5;
    spec.round_trips = true;
    spec.total_trips = 1e8;
    auto gen = generate(spec);
    for (const Segment& seg : gen.dataset.segments) {
        DesignMatrix d = build_design(gen.dataset, seg, ModelClass::IPDL);
        EstimationResult r = fit(d, nullptr, Method::OLS);
        check_recovery(r.params, gen.truth.require(seg), gen.dataset, 1e-3);
    }
}

TEST_CASE("design rows are the strictly positive-share cells only") {
    auto gen = testutil::small_exact();
    MarketDataset& ds = gen.dataset;
    Market& m = ds.markets[0];
    // force one cell to zero, pushing its trips to the outside option
    m.outside_trips += m.cells[3].trips;
    m.cells[3].trips = 0;
    DesignMatrix d = build_design(ds, m.segment, ModelClass::IPDL);
    long positive = 0, markets_of_seg = 0;
    for (const auto& mm : ds.markets) {
        if (mm.segment != m.segment) continue;
        ++markets_of_seg;
        for (const auto& c : mm.cells)
            if (c.trips > 0) ++positive;
    }
    CHECK(d.n_obs() == positive);
    CHECK(d.dropped_rows == 1);
    CHECK((long)d.row_ids.size() == positive);
    CHECK(markets_of_seg * (long)ds.alternatives.size() == positive + 1);
}

TEST_CASE("markets with zero outside share are dropped whole") {
    auto gen = testutil::small_exact();
    MarketDataset& ds = gen.dataset;
    Market& m = ds.markets[1];
    m.cells[0].trips += m.outside_trips;
    m.outside_trips = 0;
    DesignMatrix d = build_design(ds, m.segment, ModelClass::IPDL);
    CHECK(d.dropped_markets == 1);
    for (auto [mi, ci] : d.row_ids) CHECK(mi != 1);
}

TEST_CASE("model classes control the nesting columns") {
    auto gen = testutil::small_exact();
    const Segment& seg = gen.dataset.segments[0];
    DesignMatrix mnl = build_design(gen.dataset, seg, ModelClass::MNL);
    CHECK(mnl.nest_mode_col == -1);
    CHECK(mnl.nest_dest_col == -1);
    DesignMatrix nlm = build_design(gen.dataset, seg, ModelClass::NL_mode);
    CHECK(nlm.nest_mode_col >= 0);
    CHECK(nlm.nest_dest_col == -1);
    DesignMatrix ipdl_d = build_design(gen.dataset, seg, ModelClass::IPDL);
    CHECK(ipdl_d.nest_mode_col >= 0);
    CHECK(ipdl_d.nest_dest_col >= 0);
    CHECK(ipdl_d.endogenous[13]);
    CHECK(ipdl_d.endogenous[ipdl_d.nest_mode_col]);
    DesignMatrix cost_only =
        build_design(gen.dataset, seg, ModelClass::IPDL, EndogenousSet::CostOnly);
    CHECK_FALSE(cost_only.endogenous[cost_only.nest_mode_col]);
}

TEST_CASE("TSLS with the endogenous columns as instruments equals OLS") {
    auto gen = testutil::small_exact();
    const Segment& seg = gen.dataset.segments[0];
    DesignMatrix d = build_design(gen.dataset, seg, ModelClass::IPDL);
    std::vector<int> endo;
    for (size_t c = 0; c < d.endogenous.size(); ++c)
        if (d.endogenous[c]) endo.push_back((int)c);
    Eigen::MatrixXd Z(d.X.rows(), (Eigen::Index)endo.size());
    for (size_t i = 0; i < endo.size(); ++i) Z.col(i) = d.X.col(endo[i]);
    EstimationResult ols = fit(d, nullptr, Method::OLS);
    EstimationResult tsls = fit(d, &Z, Method::TSLS);
    for (Eigen::Index c = 0; c < ols.estimates.size(); ++c)
        CHECK(tsls.estimates(c) == doctest::Approx(ols.estimates(c)).epsilon(1e-8));
}

TEST_CASE("instrument matrix: 12 columns, relevant for the cost column") {
    GenerationSpec spec;
    spec.seed = 23;
    spec.round_trips = false;
    spec.endogeneity_strength = 0.8;
    auto gen = generate(spec);
    const Segment& seg = gen.dataset.segments[0];
    DesignMatrix d = build_design(gen.dataset, seg, ModelClass::IPDL);
    Eigen::MatrixXd Z = build_instruments(d, gen.dataset);
    REQUIRE(Z.cols() == 12);
    REQUIRE(Z.rows() == d.X.rows());

    // relevance on the rows the family can move: driving rows, auto-time
    // leave-out means vs the cost column
    std::vector<double> z0, z1, cost;
    for (Eigen::Index r = 0; r < Z.rows(); ++r) {
        auto [mi, ci] = d.row_ids[r];
        const MarketCell& c = gen.dataset.markets[mi].cells[ci];
        if (gen.dataset.alternatives[c.alt].mode != Mode::Driving) continue;
        z0.push_back(Z(r, 0));
        z1.push_back(Z(r, 1));
        cost.push_back(d.X(r, 13));
    }
    auto corr = [](const std::vector<double>& a, const std::vector<double>& b) {
        double ma = 0, mb = 0;
        for (size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
        ma /= a.size();
        mb /= b.size();
        double num = 0, va = 0, vb = 0;
        for (size_t i = 0; i < a.size(); ++i) {
            num += (a[i] - ma) * (b[i] - mb);
            va += (a[i] - ma) * (a[i] - ma);
            vb += (b[i] - mb) * (b[i] - mb);
        }
        return num / std::sqrt(va * vb);
    };
    // the destination-dimension mean drives the congestion cost component
    // directly; the mode-dimension mean is relevant only through the shared
    // origin/destination distance components
    CHECK(std::fabs(corr(z0, cost)) > 0.1);
    CHECK(std::fabs(corr(z1, cost)) > 0.3);

    // off-family rows carry zero in the auto-time columns
    for (Eigen::Index r = 0; r < Z.rows(); ++r) {
        auto [mi, ci] = d.row_ids[r];
        Mode m = gen.dataset.alternatives[gen.dataset.markets[mi].cells[ci].alt].mode;
        if (!is_auto_mode(m)) {
            CHECK(Z(r, 0) == 0.0);
            CHECK(Z(r, 1) == 0.0);
        }
        // NYC interactions vanish for non-NYC origins
        if (!gen.dataset.zones[gen.dataset.markets[mi].origin].is_nyc)
            for (int k = 6; k < 12; ++k) CHECK(Z(r, k) == 0.0);
    }
}

TEST_CASE("endogenous cost biases OLS; TSLS corrects it (small Monte Carlo)") {
    double ols_bias = 0, tsls_bias = 0;
    const int reps = 10;
    for (int rep = 0; rep < reps; ++rep) {
        GenerationSpec spec;
        spec.seed = 1000 + rep;
        spec.round_trips = false;
        spec.endogeneity_strength = 0.8;
        spec.n_origin_zones = 10;
        auto gen = generate(spec);
        const Segment& seg = gen.dataset.segments[0];
        double truth = gen.truth.require(seg).cost;
        DesignMatrix d = build_design(gen.dataset, seg, ModelClass::IPDL);
        Eigen::MatrixXd Z = build_instruments(d, gen.dataset);
        ols_bias += std::fabs(fit(d, nullptr, Method::OLS).params.cost - truth);
        tsls_bias += std::fabs(fit(d, &Z, Method::TSLS).params.cost - truth);
    }
    CHECK(tsls_bias / reps < ols_bias / reps);
}

TEST_CASE("identification failures are loud") {
    auto gen = testutil::small_exact();
    const Segment& seg = gen.dataset.segments[0];
    DesignMatrix d = build_design(gen.dataset, seg, ModelClass::IPDL);

    SUBCASE("TSLS without instruments") {
        CHECK_THROWS_WITH_AS(fit(d, nullptr, Method::TSLS),
                             doctest::Contains("UnderIdentified"), Error);
    }
    SUBCASE("too few instruments") {
        Eigen::MatrixXd Z = Eigen::MatrixXd::Ones(d.X.rows(), 1);
        CHECK_THROWS_WITH_AS(fit(d, &Z, Method::TSLS),
                             doctest::Contains("UnderIdentified"), Error);
    }
    SUBCASE("fewer rows than columns") {
        DesignMatrix tiny = d;
        tiny.X = d.X.topRows(5);
        tiny.y = d.y.head(5);
        CHECK_THROWS_WITH_AS(fit(tiny, nullptr, Method::OLS),
                             doctest::Contains("UnderIdentified"), Error);
    }
    SUBCASE("duplicated column is reported as collinear") {
        DesignMatrix dup = d;
        dup.X.col(0) = dup.X.col(13);
        CHECK_THROWS_WITH_AS(fit(dup, nullptr, Method::OLS),
                             doctest::Contains("RankDeficient"), Error);
    }
}

TEST_CASE("fit statistics: McFadden R2 via re-solved shares") {
    auto gen = testutil::small_exact();
    const Segment& seg = gen.dataset.segments[0];
    DesignMatrix d = build_design(gen.dataset, seg, ModelClass::IPDL);
    EstimationResult r = fit(d, nullptr, Method::OLS);
    auto [adj, mcf] = fit_statistics(r, gen.dataset);
    CHECK(adj == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mcf > 0);
    CHECK(mcf < 1);
    CHECK(r.mcfadden_r2 == mcf);

    SUBCASE("out-of-range rho refuses the likelihood computation") {
        r.params.rho_mode = 1.2;
        r.rho_in_range = false;
        CHECK_THROWS_WITH_AS(fit_statistics(r, gen.dataset),
                             doctest::Contains("InvalidRho"), Error);
    }
}

TEST_CASE("std errors shrink as noise vanishes, map covers all columns") {
    GenerationSpec noisy;
    noisy.seed = 9;
    noisy.round_trips = false;
    noisy.noise_sd = 0.05;
    auto gen = generate(noisy);
    const Segment& seg = gen.dataset.segments[0];
    DesignMatrix d = build_design(gen.dataset, seg, ModelClass::IPDL);
    EstimationResult r = fit(d, nullptr, Method::OLS);
    auto se = r.std_error_map();
    CHECK(se.size() == r.names.size());
    CHECK(se.at("cost") > 0);
    CHECK(r.adj_r2 < 1.0);
    CHECK(r.adj_r2 > 0.5);

    auto exact = testutil::small_exact(9);
    DesignMatrix d0 = build_design(exact.dataset, seg, ModelClass::IPDL);
    EstimationResult r0 = fit(d0, nullptr, Method::OLS);
    CHECK(r0.std_error_map().at("cost") < se.at("cost"));
}
