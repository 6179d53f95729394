#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "ipdl/csv.hpp"
#include "ipdl/dataset.hpp"
#include "ipdl/errors.hpp"
#include "ipdl/params.hpp"
#include "ipdl/synthgen.hpp"

using namespace ipdl;
using testutil::TempDir;
using testutil::read_text;
using testutil::write_text;

namespace {

struct Fixture {
    TempDir dir{"data_model"};
    std::string zones = dir.file("zones.csv");
    std::string markets = dir.file("markets.csv");
    std::string attrs = dir.file("attributes.csv");
    std::string shares = dir.file("shares.csv");

    // Minimal well-formed corpus: two zones, one market, two alternatives.
    std::string zones_text =
        "zone_id,region_tag,is_nyc,is_crz\n"
        "O1,NYC_Other,1,0\n"
        "CBD,CRZ,1,1\n";
    std::string markets_text =
        "segment_population,segment_purpose,segment_period,origin_zone,total_trips\n"
        "LowIncome,Commute,Peak,O1,1000\n";
    std::string attrs_header =
        "segment_population,segment_purpose,segment_period,origin_zone,mode,dest_zone,"
        "tt_min,cost_usd,access_min,egress_min,wait_min,ivt_min,transfers,toll_flag,"
        "crz_dest_flag\n";
    std::string attrs_text =
        attrs_header +
        "LowIncome,Commute,Peak,O1,driving,CBD,25,7.5,0,0,0,0,0,1,1\n"
        "LowIncome,Commute,Peak,O1,transit,CBD,0,2.9,5,4,8,30,1,0,1\n";
    std::string shares_text =
        "segment_population,segment_purpose,segment_period,origin_zone,mode,dest_zone,"
        "trips\n"
        "LowIncome,Commute,Peak,O1,driving,CBD,300\n"
        "LowIncome,Commute,Peak,O1,transit,CBD,450\n";

    void write_all() {
        write_text(zones, zones_text);
        write_text(markets, markets_text);
        write_text(attrs, attrs_text);
        write_text(shares, shares_text);
    }
    MarketDataset load() { return load_dataset(zones, markets, attrs, shares); }
};

} // namespace

TEST_CASE("well-formed corpus loads with derived outside trips") {
    Fixture f;
    f.write_all();
    MarketDataset ds = f.load();
    CHECK(ds.zones.size() == 2);
    CHECK(ds.alternatives.size() == 2);
    REQUIRE(ds.markets.size() == 1);
    const Market& m = ds.markets[0];
    CHECK(m.total_trips == 1000);
    CHECK(m.outside_trips == doctest::Approx(250));
    REQUIRE(m.cells.size() == 2);
    CHECK(ds.crz_zone() == 1);
    CHECK(ds.zone("CBD") == 1);
    CHECK(ds.alternative(Mode::Driving, 1) >= 0);
    CHECK(ds.alternative(Mode::Biking, 1) == -1);
    CHECK(ds.segments.size() == 1);
}

TEST_CASE("validation failures carry code, file and row") {
    Fixture f;

    SUBCASE("missing column") {
        f.zones_text = "zone_id,is_nyc,is_crz\nO1,1,0\n";
        f.write_all();
        CHECK_THROWS_WITH_AS(f.load(), doctest::Contains("region_tag"), DataError);
    }
    SUBCASE("duplicate zone id") {
        f.zones_text += "O1,NYC_Other,1,0\n";
        f.write_all();
        try {
            f.load();
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(e.code() == "DuplicateKey");
            CHECK(e.row() == 4);
        }
    }
    SUBCASE("crz implies nyc") {
        f.zones_text =
            "zone_id,region_tag,is_nyc,is_crz\nO1,NYC_Other,1,0\nCBD,CRZ,0,1\n";
        f.write_all();
        CHECK_THROWS_AS(f.load(), DataError);
    }
    SUBCASE("unknown origin zone in markets") {
        f.markets_text =
            "segment_population,segment_purpose,segment_period,origin_zone,total_trips\n"
            "LowIncome,Commute,Peak,NOPE,1000\n";
        f.write_all();
        try {
            f.load();
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(e.code() == "UnknownZoneRef");
        }
    }
    SUBCASE("unknown enum value") {
        f.markets_text =
            "segment_population,segment_purpose,segment_period,origin_zone,total_trips\n"
            "Wealthy,Commute,Peak,O1,1000\n";
        f.write_all();
        CHECK_THROWS_AS(f.load(), Error);
    }
    SUBCASE("non-transit row with transit components") {
        f.attrs_text = f.attrs_header +
                       "LowIncome,Commute,Peak,O1,driving,CBD,25,7.5,0,0,3,0,0,1,1\n";
        f.shares_text =
            "segment_population,segment_purpose,segment_period,origin_zone,mode,"
            "dest_zone,trips\n";
        f.write_all();
        CHECK_THROWS_AS(f.load(), DataError);
    }
    SUBCASE("toll flag on a non-auto mode") {
        f.attrs_text = f.attrs_header +
                       "LowIncome,Commute,Peak,O1,walking,CBD,60,0,0,0,0,0,0,1,1\n";
        f.shares_text =
            "segment_population,segment_purpose,segment_period,origin_zone,mode,"
            "dest_zone,trips\n";
        f.write_all();
        CHECK_THROWS_AS(f.load(), DataError);
    }
    SUBCASE("crz_dest_flag inconsistent with zone") {
        f.attrs_text = f.attrs_header +
                       "LowIncome,Commute,Peak,O1,driving,O1,25,7.5,0,0,0,0,0,1,1\n";
        f.shares_text =
            "segment_population,segment_purpose,segment_period,origin_zone,mode,"
            "dest_zone,trips\n";
        f.write_all();
        CHECK_THROWS_AS(f.load(), DataError);
    }
    SUBCASE("negative trips") {
        f.shares_text =
            "segment_population,segment_purpose,segment_period,origin_zone,mode,"
            "dest_zone,trips\n"
            "LowIncome,Commute,Peak,O1,driving,CBD,-5\n";
        f.write_all();
        try {
            f.load();
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(e.code() == "NegativeValue");
        }
    }
    SUBCASE("positive share without attribute row") {
        f.shares_text +=
            "LowIncome,Commute,Peak,O1,walking,CBD,10\n";
        f.write_all();
        try {
            f.load();
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(e.code() == "MissingAttributes");
        }
    }
    SUBCASE("zero share without attribute row is ignorable") {
        f.shares_text += "LowIncome,Commute,Peak,O1,walking,CBD,0\n";
        f.write_all();
        CHECK_NOTHROW(f.load());
    }
    SUBCASE("inside trips above total") {
        f.shares_text =
            "segment_population,segment_purpose,segment_period,origin_zone,mode,"
            "dest_zone,trips\n"
            "LowIncome,Commute,Peak,O1,driving,CBD,800\n"
            "LowIncome,Commute,Peak,O1,transit,CBD,300\n";
        f.write_all();
        try {
            f.load();
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(e.code() == "InconsistentTotals");
        }
    }
    SUBCASE("duplicate attribute row") {
        f.attrs_text += "LowIncome,Commute,Peak,O1,driving,CBD,25,7.5,0,0,0,0,0,1,1\n";
        f.write_all();
        try {
            f.load();
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(e.code() == "DuplicateKey");
        }
    }
}

TEST_CASE("save/load round trip is lossless and byte-stable") {
    auto gen = testutil::small_exact();
    TempDir dir("roundtrip");
    auto z = dir.file("z.csv"), m = dir.file("m.csv"), a = dir.file("a.csv"),
         s = dir.file("s.csv");
    save_dataset(gen.dataset, z, m, a, s);
    MarketDataset re = load_dataset(z, m, a, s);

    REQUIRE(re.markets.size() == gen.dataset.markets.size());
    REQUIRE(re.alternatives.size() == gen.dataset.alternatives.size());
    for (size_t mi = 0; mi < re.markets.size(); ++mi) {
        const Market& a1 = gen.dataset.markets[mi];
        const Market& b = re.markets[mi];
        CHECK(a1.segment == b.segment);
        CHECK(a1.origin == b.origin);
        CHECK(a1.total_trips == doctest::Approx(b.total_trips));
        CHECK(a1.outside_trips == doctest::Approx(b.outside_trips).epsilon(1e-9));
        REQUIRE(a1.cells.size() == b.cells.size());
        for (size_t c = 0; c < a1.cells.size(); ++c) {
            CHECK(a1.cells[c].alt == b.cells[c].alt);
            CHECK(a1.cells[c].trips == doctest::Approx(b.cells[c].trips).epsilon(1e-9));
            CHECK(a1.cells[c].attrs.tt == doctest::Approx(b.cells[c].attrs.tt));
            CHECK(a1.cells[c].attrs.cost == doctest::Approx(b.cells[c].attrs.cost));
        }
    }

    // second save of the reloaded data must be byte-identical
    auto z2 = dir.file("z2.csv"), m2 = dir.file("m2.csv"), a2 = dir.file("a2.csv"),
         s2 = dir.file("s2.csv");
    save_dataset(re, z2, m2, a2, s2);
    CHECK(read_text(z) == read_text(z2));
    CHECK(read_text(m) == read_text(m2));
    CHECK(read_text(a) == read_text(a2));
    CHECK(read_text(s) == read_text(s2));
}

TEST_CASE("nesting structure groups by mode and destination") {
    std::vector<Alternative> alts = {{Mode::Driving, 0}, {Mode::Transit, 0},
                                     {Mode::Driving, 1}, {Mode::Transit, 1}};
    NestingStructure n = build_nesting(alts, 2);
    CHECK(n.n_mode_groups == 2);
    CHECK(n.n_dest_groups == 2);
    CHECK(n.mode_group[0] == n.mode_group[2]);
    CHECK(n.dest_group[0] == n.dest_group[1]);
    CHECK(n.mode_members[n.mode_group[0]] == std::vector<int>{0, 2});
    CHECK(n.dest_members[n.dest_group[2]] == std::vector<int>{2, 3});
}

TEST_CASE("parameter CSV round trip with std errors and dest ASCs") {
    auto gen = testutil::small_exact();
    const MarketDataset& ds = gen.dataset;
    TempDir dir("params");
    auto path = dir.file("params.csv");

    std::map<Segment, std::map<std::string, double>> se;
    const Segment& seg = ds.segments[0];
    se[seg]["cost"] = 0.021;
    se[seg]["rho_mode"] = 0.05;
    save_parameters(gen.truth, ds, &se, path);

    std::map<Segment, std::map<std::string, double>> se_back;
    ParameterSet re = load_parameters(path, ds, &se_back);
    for (const auto& [s, truth] : gen.truth.by_segment) {
        const SegmentParams& got = re.require(s);
        CHECK(got.cost == doctest::Approx(truth.cost).epsilon(1e-12));
        CHECK(got.rho_mode == doctest::Approx(truth.rho_mode).epsilon(1e-12));
        CHECK(got.wt_nyc == doctest::Approx(truth.wt_nyc).epsilon(1e-12));
        for (size_t z = 0; z < truth.dest_asc.size(); ++z)
            CHECK(got.dest_asc_of((int)z) ==
                  doctest::Approx(truth.dest_asc[z]).epsilon(1e-12));
    }
    CHECK(se_back[seg]["cost"] == doctest::Approx(0.021));
    CHECK(se_back[seg]["rho_mode"] == doctest::Approx(0.05));

    SUBCASE("unknown parameter name is rejected") {
        write_text(path, "segment_population,segment_purpose,segment_period,"
                         "parameter_name,estimate,std_error,significance\n"
                         "LowIncome,Commute,Peak,theta_mystery,1.0,,\n");
        CHECK_THROWS_AS(load_parameters(path, ds), DataError);
    }
    SUBCASE("missing segment params raise MissingParameter") {
        ParameterSet empty;
        CHECK_THROWS_WITH_AS(empty.require(seg), doctest::Contains("MissingParameter"),
                             Error);
    }
}

TEST_CASE("attribute override table keys by segment, origin, mode, destination") {
    Fixture f;
    f.write_all();
    MarketDataset ds = f.load();
    auto path = f.dir.file("overrides.csv");
    write_text(path, f.attrs_header +
                         "LowIncome,Commute,Peak,O1,transit,CBD,0,2.9,5,4,2,28,1,0,1\n");
    AttributeTable tab = load_attribute_table(path, ds);
    Segment seg{Population::LowIncome, Purpose::Commute, Period::Peak};
    const AlternativeAttributes* a = tab.find(seg, 0, Mode::Transit, 1);
    REQUIRE(a != nullptr);
    CHECK(a->wait == 2);
    CHECK(a->ivt == 28);
    CHECK(tab.find(seg, 0, Mode::Driving, 1) == nullptr);
}
