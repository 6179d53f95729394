#ifndef IPDL_PARAMS_HPP
#define IPDL_PARAMS_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "ipdl/dataset.hpp"
#include "ipdl/types.hpp"

namespace ipdl {

// Taste parameters for one trip segment. Carpool is the reference mode
// and has no ASC; destination ASCs are indexed by zone.
struct SegmentParams {
    double auto_tt = 0, at = 0, et = 0, wt = 0, ivt = 0, trans = 0, nonauto_tt = 0, cost = 0;
    double auto_tt_nyc = 0, at_nyc = 0, et_nyc = 0, wt_nyc = 0, ivt_nyc = 0,
           nonauto_tt_nyc = 0, cost_nyc = 0;
    double asc_driving = 0, asc_transit = 0, asc_fhv = 0, asc_biking = 0, asc_walking = 0;
    std::vector<double> dest_asc; // indexed by zone index; missing -> 0
    double rho_mode = 0, rho_dest = 0;
    double toll_asc_driving = 0, toll_asc_fhv = 0, toll_asc_carpool = 0, toll_asc_crz = 0;

    double dest_asc_of(int zone) const {
        return zone >= 0 && zone < (int)dest_asc.size() ? dest_asc[zone] : 0.0;
    }
    double rho_sum() const { return rho_mode + rho_dest; }
    bool rho_valid() const {
        return rho_mode >= 0 && rho_mode < 1 && rho_dest >= 0 && rho_dest < 1 && rho_sum() < 1;
    }
};

struct ParameterSet {
    std::map<Segment, SegmentParams> by_segment;

    const SegmentParams& require(const Segment& s) const;
    SegmentParams& at(const Segment& s) { return by_segment.at(s); }
    void set_toll_ascs(double driving, double fhv, double carpool, double crz);
};

// Policy scenario applied on top of the pre-implementation attributes.
struct Scenario {
    std::map<std::pair<Mode, Period>, double> toll; // dollars added to cost
    double crz_auto_time_factor = 1.0; // multiplier on auto tt for CRZ-destined trips
    double transit_wait_delta = 0.0;   // minutes, <= 0 means reduction
    std::map<Population, double> transit_fare_delta; // dollars, <= 0 means discount
    std::set<int> scope_markets; // wait/fare deltas apply here; empty = all markets
    bool toll_asc_active = false;
    const AttributeTable* attribute_overrides = nullptr;

    bool is_identity() const;
    double toll_for(Mode m, Period p) const;
    bool in_scope(int market_idx) const {
        return scope_markets.empty() || scope_markets.count(market_idx) > 0;
    }
};

// Parameter CSV round trip (columns: segment_population, segment_purpose,
// segment_period, parameter_name, estimate, std_error, significance).
// dest ASCs serialize as dest_asc:<zone_id>.
void save_parameters(const ParameterSet& params, const MarketDataset& ds,
                     const std::map<Segment, std::map<std::string, double>>* std_errors,
                     const std::string& path);
ParameterSet load_parameters(const std::string& path, const MarketDataset& ds,
                             std::map<Segment, std::map<std::string, double>>* std_errors_out =
                                 nullptr);

} // namespace ipdl

#endif
