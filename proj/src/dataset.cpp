#include "ipdl/dataset.hpp"

#include <algorithm>
#include <set>

#include "ipdl/csv.hpp"
#include "ipdl/errors.hpp"

namespace ipdl {

int MarketDataset::zone(const std::string& id) const {
    auto it = zone_index.find(id);
    return it == zone_index.end() ? -1 : it->second;
}

int MarketDataset::alternative(Mode m, int dest) const {
    auto it = alt_index.find({(int)m, dest});
    return it == alt_index.end() ? -1 : it->second;
}

const Market* MarketDataset::find_market(const Segment& s, int origin) const {
    if (origin < 0 || origin >= (int)zones.size()) return nullptr;
    auto it = market_index.find({s.key(), zones[origin].id});
    return it == market_index.end() ? nullptr : &markets[it->second];
}

std::optional<int> MarketDataset::crz_zone() const {
    for (size_t i = 0; i < zones.size(); ++i)
        if (zones[i].is_crz) return (int)i;
    return std::nullopt;
}

NestingStructure build_nesting(const std::vector<Alternative>& alternatives, int n_zones) {
    NestingStructure n;
    n.mode_group.resize(alternatives.size());
    n.dest_group.resize(alternatives.size());
    std::map<int, int> mode_ids, dest_ids;
    for (size_t j = 0; j < alternatives.size(); ++j) {
        int m = (int)alternatives[j].mode;
        int d = alternatives[j].dest;
        if (d < 0 || d >= n_zones) throw Error("BadAlternative", "destination index out of range");
        auto [mi, m_new] = mode_ids.try_emplace(m, (int)mode_ids.size());
        auto [di, d_new] = dest_ids.try_emplace(d, (int)dest_ids.size());
        n.mode_group[j] = mi->second;
        n.dest_group[j] = di->second;
    }
    n.n_mode_groups = (int)mode_ids.size();
    n.n_dest_groups = (int)dest_ids.size();
    n.mode_members.resize(n.n_mode_groups);
    n.dest_members.resize(n.n_dest_groups);
    for (size_t j = 0; j < alternatives.size(); ++j) {
        n.mode_members[n.mode_group[j]].push_back((int)j);
        n.dest_members[n.dest_group[j]].push_back((int)j);
    }
    return n;
}

namespace {

Segment parse_segment(const csv::Table& t, size_t row, int cpop, int cpur, int cper) {
    Segment s;
    s.population = parse_population(t.cell(row, cpop));
    s.purpose = parse_purpose(t.cell(row, cpur));
    s.period = parse_period(t.cell(row, cper));
    return s;
}

AlternativeAttributes read_attrs(const csv::Table& t, size_t row, Mode mode, bool dest_is_crz) {
    AlternativeAttributes a;
    a.tt = csv::parse_nonneg(t, row, t.col("tt_min"));
    a.cost = csv::parse_nonneg(t, row, t.col("cost_usd"));
    a.access = csv::parse_nonneg(t, row, t.col("access_min"));
    a.egress = csv::parse_nonneg(t, row, t.col("egress_min"));
    a.wait = csv::parse_nonneg(t, row, t.col("wait_min"));
    a.ivt = csv::parse_nonneg(t, row, t.col("ivt_min"));
    a.transfers = csv::parse_nonneg(t, row, t.col("transfers"));
    a.toll_flag = csv::parse_bool01(t, row, t.col("toll_flag"));
    a.crz_dest_flag = csv::parse_bool01(t, row, t.col("crz_dest_flag"));

    long r = (long)row + 2;
    if (mode != Mode::Transit &&
        (a.access != 0 || a.egress != 0 || a.wait != 0 || a.ivt != 0 || a.transfers != 0))
        throw DataError("InvalidValue", t.path, r, "access_min",
                        "non-transit row has nonzero transit components");
    if (a.toll_flag == 1 && !is_auto_mode(mode))
        throw DataError("InvalidValue", t.path, r, "toll_flag",
                        "toll_flag only allowed for driving/fhv/carpool");
    if ((a.crz_dest_flag == 1) != dest_is_crz)
        throw DataError("InvalidValue", t.path, r, "crz_dest_flag",
                        "crz_dest_flag inconsistent with destination zone");
    return a;
}

} // namespace

MarketDataset load_dataset(const std::string& zones_path, const std::string& markets_path,
                           const std::string& attributes_path, const std::string& shares_path) {
    MarketDataset ds;

    // zones
    {
        auto t = csv::read_file(zones_path);
        int cid = t.col("zone_id"), ctag = t.col("region_tag");
        int cnyc = t.col("is_nyc"), ccrz = t.col("is_crz");
        for (size_t i = 0; i < t.rows.size(); ++i) {
            Zone z;
            z.id = t.cell(i, cid);
            z.region = parse_region_tag(t.cell(i, ctag));
            z.is_nyc = csv::parse_bool01(t, i, cnyc) == 1;
            z.is_crz = csv::parse_bool01(t, i, ccrz) == 1;
            long r = (long)i + 2;
            if (ds.zone_index.count(z.id))
                throw duplicate_key(zones_path, r, "zone_id", z.id);
            if (z.is_crz && !z.is_nyc)
                throw DataError("InvalidValue", zones_path, r, "is_crz",
                                "is_crz implies is_nyc");
            if (z.region == RegionTag::CRZ && !z.is_crz)
                throw DataError("InvalidValue", zones_path, r, "region_tag",
                                "region_tag CRZ requires is_crz=1");
            ds.zone_index[z.id] = (int)ds.zones.size();
            ds.zones.push_back(z);
        }
    }

    // markets
    {
        auto t = csv::read_file(markets_path);
        int cpop = t.col("segment_population"), cpur = t.col("segment_purpose");
        int cper = t.col("segment_period"), corg = t.col("origin_zone");
        int ctot = t.col("total_trips");
        for (size_t i = 0; i < t.rows.size(); ++i) {
            long r = (long)i + 2;
            Market m;
            m.segment = parse_segment(t, i, cpop, cpur, cper);
            int org = ds.zone(t.cell(i, corg));
            if (org < 0)
                throw unknown_zone_ref(markets_path, r, "origin_zone", t.cell(i, corg));
            m.origin = org;
            m.total_trips = csv::parse_nonneg(t, i, ctot);
            auto key = std::make_pair(m.segment.key(), ds.zones[org].id);
            if (ds.market_index.count(key))
                throw duplicate_key(markets_path, r, "origin_zone",
                                    key.first + "@" + key.second);
            ds.market_index[key] = (int)ds.markets.size();
            ds.markets.push_back(std::move(m));
        }
    }

    // attributes
    {
        auto t = csv::read_file(attributes_path);
        int cpop = t.col("segment_population"), cpur = t.col("segment_purpose");
        int cper = t.col("segment_period"), corg = t.col("origin_zone");
        int cmode = t.col("mode"), cdst = t.col("dest_zone");
        std::set<std::tuple<int, int>> seen; // (market, alt)
        for (size_t i = 0; i < t.rows.size(); ++i) {
            long r = (long)i + 2;
            Segment seg = parse_segment(t, i, cpop, cpur, cper);
            int org = ds.zone(t.cell(i, corg));
            if (org < 0)
                throw unknown_zone_ref(attributes_path, r, "origin_zone", t.cell(i, corg));
            auto mit = ds.market_index.find({seg.key(), ds.zones[org].id});
            if (mit == ds.market_index.end())
                throw unknown_zone_ref(attributes_path, r, "origin_zone",
                                       "no market " + seg.key() + "@" + ds.zones[org].id);
            Mode mode = parse_mode(t.cell(i, cmode));
            int dst = ds.zone(t.cell(i, cdst));
            if (dst < 0)
                throw unknown_zone_ref(attributes_path, r, "dest_zone", t.cell(i, cdst));
            int alt = ds.alternative(mode, dst);
            if (alt < 0) {
                alt = (int)ds.alternatives.size();
                ds.alt_index[{(int)mode, dst}] = alt;
                ds.alternatives.push_back({mode, dst});
            }
            if (!seen.insert({mit->second, alt}).second)
                throw duplicate_key(attributes_path, r, "mode",
                                    to_string(mode) + "->" + ds.zones[dst].id);
            MarketCell cell;
            cell.alt = alt;
            cell.attrs = read_attrs(t, i, mode, ds.zones[dst].is_crz);
            ds.markets[mit->second].cells.push_back(cell);
        }
    }

    // shares
    {
        auto t = csv::read_file(shares_path);
        int cpop = t.col("segment_population"), cpur = t.col("segment_purpose");
        int cper = t.col("segment_period"), corg = t.col("origin_zone");
        int cmode = t.col("mode"), cdst = t.col("dest_zone"), ctr = t.col("trips");
        std::set<std::tuple<int, int>> seen;
        for (size_t i = 0; i < t.rows.size(); ++i) {
            long r = (long)i + 2;
            Segment seg = parse_segment(t, i, cpop, cpur, cper);
            int org = ds.zone(t.cell(i, corg));
            if (org < 0)
                throw unknown_zone_ref(shares_path, r, "origin_zone", t.cell(i, corg));
            auto mit = ds.market_index.find({seg.key(), ds.zones[org].id});
            if (mit == ds.market_index.end())
                throw unknown_zone_ref(shares_path, r, "origin_zone",
                                       "no market " + seg.key() + "@" + ds.zones[org].id);
            Mode mode = parse_mode(t.cell(i, cmode));
            int dst = ds.zone(t.cell(i, cdst));
            if (dst < 0)
                throw unknown_zone_ref(shares_path, r, "dest_zone", t.cell(i, cdst));
            double trips = csv::parse_nonneg(t, i, ctr);
            int alt = ds.alternative(mode, dst);
            if (!seen.insert({mit->second, alt < 0 ? -(int)i - 2 : alt}).second)
                throw duplicate_key(shares_path, r, "mode",
                                    to_string(mode) + "->" + ds.zones[dst].id);
            Market& m = ds.markets[mit->second];
            MarketCell* cell = nullptr;
            if (alt >= 0)
                for (auto& c : m.cells)
                    if (c.alt == alt) cell = &c;
            if (!cell) {
                if (trips > 0)
                    throw DataError("MissingAttributes", shares_path, r, "trips",
                                    "share row with trips > 0 has no attribute row");
                continue; // zero-trip pair without attributes: ignorable
            }
            cell->trips = trips;
        }
    }

    // derived outside trips + final checks
    for (auto& m : ds.markets) {
        std::sort(m.cells.begin(), m.cells.end(),
                  [](const MarketCell& a, const MarketCell& b) { return a.alt < b.alt; });
        double inside = 0;
        for (const auto& c : m.cells) inside += c.trips;
        m.outside_trips = m.total_trips - inside;
        if (m.outside_trips < 0)
            throw DataError("InconsistentTotals", markets_path, 0, "total_trips",
                            "inside trips exceed total_trips for market " + m.segment.key() +
                                "@" + ds.zones[m.origin].id);
    }

    std::set<Segment> segs;
    for (const auto& m : ds.markets) segs.insert(m.segment);
    ds.segments.assign(segs.begin(), segs.end());

    ds.nesting = build_nesting(ds.alternatives, (int)ds.zones.size());
    return ds;
}

void save_dataset(const MarketDataset& ds, const std::string& zones_path,
                  const std::string& markets_path, const std::string& attributes_path,
                  const std::string& shares_path) {
    {
        csv::Writer w({"zone_id", "region_tag", "is_nyc", "is_crz"});
        for (const auto& z : ds.zones)
            w.add_row({z.id, to_string(z.region), z.is_nyc ? "1" : "0", z.is_crz ? "1" : "0"});
        w.write(zones_path);
    }
    {
        csv::Writer w({"segment_population", "segment_purpose", "segment_period", "origin_zone",
                       "total_trips"});
        for (const auto& m : ds.markets)
            w.add_row({to_string(m.segment.population), to_string(m.segment.purpose),
                       to_string(m.segment.period), ds.zones[m.origin].id,
                       csv::fmt(m.total_trips)});
        w.write(markets_path);
    }
    std::vector<std::string> seg_cols = {"segment_population", "segment_purpose",
                                         "segment_period", "origin_zone", "mode", "dest_zone"};
    {
        auto hdr = seg_cols;
        for (const char* c : {"tt_min", "cost_usd", "access_min", "egress_min", "wait_min",
                              "ivt_min", "transfers", "toll_flag", "crz_dest_flag"})
            hdr.push_back(c);
        csv::Writer w(hdr);
        for (const auto& m : ds.markets)
            for (const auto& c : m.cells) {
                const auto& alt = ds.alternatives[c.alt];
                const auto& a = c.attrs;
                w.add_row({to_string(m.segment.population), to_string(m.segment.purpose),
                           to_string(m.segment.period), ds.zones[m.origin].id,
                           to_string(alt.mode), ds.zones[alt.dest].id, csv::fmt(a.tt),
                           csv::fmt(a.cost), csv::fmt(a.access), csv::fmt(a.egress),
                           csv::fmt(a.wait), csv::fmt(a.ivt), csv::fmt(a.transfers),
                           a.toll_flag ? "1" : "0", a.crz_dest_flag ? "1" : "0"});
            }
        w.write(attributes_path);
    }
    {
        auto hdr = seg_cols;
        hdr.push_back("trips");
        csv::Writer w(hdr);
        for (const auto& m : ds.markets)
            for (const auto& c : m.cells) {
                const auto& alt = ds.alternatives[c.alt];
                w.add_row({to_string(m.segment.population), to_string(m.segment.purpose),
                           to_string(m.segment.period), ds.zones[m.origin].id,
                           to_string(alt.mode), ds.zones[alt.dest].id, csv::fmt(c.trips)});
            }
        w.write(shares_path);
    }
}

const AlternativeAttributes* AttributeTable::find(const Segment& seg, int origin, Mode m,
                                                 int dest) const {
    auto it = entries.find({seg.key(), origin, (int)m, dest});
    return it == entries.end() ? nullptr : &it->second;
}

AttributeTable load_attribute_table(const std::string& path, const MarketDataset& ds) {
    AttributeTable out;
    auto t = csv::read_file(path);
    int cpop = t.col("segment_population"), cpur = t.col("segment_purpose");
    int cper = t.col("segment_period"), corg = t.col("origin_zone");
    int cmode = t.col("mode"), cdst = t.col("dest_zone");
    for (size_t i = 0; i < t.rows.size(); ++i) {
        long r = (long)i + 2;
        Segment seg = parse_segment(t, i, cpop, cpur, cper);
        int org = ds.zone(t.cell(i, corg));
        if (org < 0) throw unknown_zone_ref(path, r, "origin_zone", t.cell(i, corg));
        Mode mode = parse_mode(t.cell(i, cmode));
        int dst = ds.zone(t.cell(i, cdst));
        if (dst < 0) throw unknown_zone_ref(path, r, "dest_zone", t.cell(i, cdst));
        out.entries[{seg.key(), org, (int)mode, dst}] =
            read_attrs(t, i, mode, ds.zones[dst].is_crz);
    }
    return out;
}

} // namespace ipdl
