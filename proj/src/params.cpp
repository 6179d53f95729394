#include "ipdl/params.hpp"

#include <cmath>

#include "ipdl/csv.hpp"
#include "ipdl/errors.hpp"

namespace ipdl {

namespace {
struct Field {
    const char* name;
    double SegmentParams::* member;
};

const std::vector<Field>& scalar_fields() {
    static const std::vector<Field> f = {
        {"auto_tt", &SegmentParams::auto_tt},
        {"at", &SegmentParams::at},
        {"et", &SegmentParams::et},
        {"wt", &SegmentParams::wt},
        {"ivt", &SegmentParams::ivt},
        {"trans", &SegmentParams::trans},
        {"nonauto_tt", &SegmentParams::nonauto_tt},
        {"cost", &SegmentParams::cost},
        {"auto_tt_nyc", &SegmentParams::auto_tt_nyc},
        {"at_nyc", &SegmentParams::at_nyc},
        {"et_nyc", &SegmentParams::et_nyc},
        {"wt_nyc", &SegmentParams::wt_nyc},
        {"ivt_nyc", &SegmentParams::ivt_nyc},
        {"nonauto_tt_nyc", &SegmentParams::nonauto_tt_nyc},
        {"cost_nyc", &SegmentParams::cost_nyc},
        {"asc_driving", &SegmentParams::asc_driving},
        {"asc_transit", &SegmentParams::asc_transit},
        {"asc_fhv", &SegmentParams::asc_fhv},
        {"asc_biking", &SegmentParams::asc_biking},
        {"asc_walking", &SegmentParams::asc_walking},
        {"rho_mode", &SegmentParams::rho_mode},
        {"rho_dest", &SegmentParams::rho_dest},
        {"toll_asc_driving", &SegmentParams::toll_asc_driving},
        {"toll_asc_fhv", &SegmentParams::toll_asc_fhv},
        {"toll_asc_carpool", &SegmentParams::toll_asc_carpool},
        {"toll_asc_crz", &SegmentParams::toll_asc_crz},
    };
    return f;
}

std::string significance_stars(double est, double se) {
    if (se <= 0) return "";
    double z = std::fabs(est / se);
    if (z > 3.2905) return "***"; // p < 0.001 (normal approx)
    if (z > 2.5758) return "**";  // p < 0.01
    if (z > 1.9600) return "*";   // p < 0.05
    return "";
}
} // namespace

const SegmentParams& ParameterSet::require(const Segment& s) const {
    auto it = by_segment.find(s);
    if (it == by_segment.end())
        throw Error("MissingParameter", "no parameters for segment " + s.key());
    return it->second;
}

void ParameterSet::set_toll_ascs(double driving, double fhv, double carpool, double crz) {
    for (auto& [seg, p] : by_segment) {
        p.toll_asc_driving = driving;
        p.toll_asc_fhv = fhv;
        p.toll_asc_carpool = carpool;
        p.toll_asc_crz = crz;
    }
}

bool Scenario::is_identity() const {
    if (toll_asc_active || attribute_overrides) return false;
    if (crz_auto_time_factor != 1.0 || transit_wait_delta != 0.0) return false;
    for (const auto& [k, v] : toll)
        if (v != 0) return false;
    for (const auto& [k, v] : transit_fare_delta)
        if (v != 0) return false;
    return true;
}

double Scenario::toll_for(Mode m, Period p) const {
    auto it = toll.find({m, p});
    return it == toll.end() ? 0.0 : it->second;
}

void save_parameters(const ParameterSet& params, const MarketDataset& ds,
                     const std::map<Segment, std::map<std::string, double>>* std_errors,
                     const std::string& path) {
    csv::Writer w({"segment_population", "segment_purpose", "segment_period", "parameter_name",
                   "estimate", "std_error", "significance"});
    for (const auto& [seg, p] : params.by_segment) {
        const std::map<std::string, double>* se = nullptr;
        if (std_errors) {
            auto it = std_errors->find(seg);
            if (it != std_errors->end()) se = &it->second;
        }
        auto emit = [&](const std::string& name, double value) {
            double sev = 0;
            if (se) {
                auto it = se->find(name);
                if (it != se->end()) sev = it->second;
            }
            w.add_row({to_string(seg.population), to_string(seg.purpose),
                       to_string(seg.period), name, csv::fmt(value),
                       sev > 0 ? csv::fmt(sev) : "", significance_stars(value, sev)});
        };
        for (const auto& f : scalar_fields()) emit(f.name, p.*(f.member));
        for (size_t z = 0; z < p.dest_asc.size(); ++z)
            if (z < ds.zones.size()) emit("dest_asc:" + ds.zones[z].id, p.dest_asc[z]);
    }
    w.write(path);
}

ParameterSet load_parameters(const std::string& path, const MarketDataset& ds,
                             std::map<Segment, std::map<std::string, double>>* std_errors_out) {
    ParameterSet out;
    auto t = csv::read_file(path);
    int cpop = t.col("segment_population"), cpur = t.col("segment_purpose");
    int cper = t.col("segment_period"), cname = t.col("parameter_name");
    int cest = t.col("estimate"), cse = t.col("std_error");
    for (size_t i = 0; i < t.rows.size(); ++i) {
        Segment seg;
        seg.population = parse_population(t.cell(i, cpop));
        seg.purpose = parse_purpose(t.cell(i, cpur));
        seg.period = parse_period(t.cell(i, cper));
        SegmentParams& p = out.by_segment[seg];
        const std::string& name = t.cell(i, cname);
        double est = csv::parse_double(t, i, cest);
        if (name.rfind("dest_asc:", 0) == 0) {
            int z = ds.zone(name.substr(9));
            if (z < 0) throw unknown_zone_ref(path, (long)i + 2, "parameter_name", name);
            if ((int)p.dest_asc.size() <= z) p.dest_asc.resize(ds.zones.size(), 0.0);
            p.dest_asc[z] = est;
        } else {
            bool found = false;
            for (const auto& f : scalar_fields())
                if (name == f.name) {
                    p.*(f.member) = est;
                    found = true;
                    break;
                }
            if (!found)
                throw DataError("UnknownParameter", path, (long)i + 2, "parameter_name", name);
        }
        if (std_errors_out && !t.cell(i, cse).empty())
            (*std_errors_out)[seg][name] = csv::parse_double(t, i, cse);
    }
    return out;
}

} // namespace ipdl
