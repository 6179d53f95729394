#ifndef IPDL_WELFARE_HPP
#define IPDL_WELFARE_HPP

#include <map>
#include <string>
#include <vector>

#include "ipdl/predictor.hpp"

namespace ipdl {

enum class TimeComponent { AutoTT, TransitIVT, TransitWT, NonAutoTT };

// Marginal rate of substitution between a time component and cost,
// converted to dollars per hour.
double value_of_time(const SegmentParams& p, TimeComponent component, bool nyc);

// Logsum consumer surplus with the unknown constant fixed at zero:
// CS = -ln(s_0) under the scenario.
double consumer_surplus(const SegmentParams& p, const MarketDataset& ds, int market_idx,
                        const Scenario& scenario, const SolveOptions& opt = {});

struct MarketWelfare {
    int market = -1;
    double cs_pre = 0, cs_post = 0; // utils
    double cv_per_trip = 0;         // dollars; losses negative
    double cv_per_day = 0;          // dollars/day
};

MarketWelfare compensating_variation(const SegmentParams& p, const MarketDataset& ds,
                                     int market_idx, const Scenario& scenario_pre,
                                     const Scenario& scenario_post,
                                     const SolveOptions& opt = {});

struct WelfareReport {
    std::vector<MarketWelfare> per_market; // one entry per dataset market

    double total_cv_per_day() const;
    std::map<int, double> cv_by_origin_zone(const MarketDataset& ds) const;
    std::map<Population, double> cv_by_population(const MarketDataset& ds) const;
    std::map<std::string, double> cv_by_segment(const MarketDataset& ds) const;
    std::map<RegionTag, double> cv_by_region(const MarketDataset& ds) const;
};

WelfareReport welfare_report(const MarketDataset& ds, const ParameterSet& params,
                             const Scenario& scenario_pre, const Scenario& scenario_post,
                             const SolveOptions& opt = {}, int workers = 1);

// Toll revenue accounting (daily tolled volumes x rate x annualization).
struct TollRateTable {
    // vehicle class is "passenger_car" or "for_hire"
    std::map<std::pair<std::string, Period>, double> rates;
    int annualization_days = 365;

    double rate_for(const std::string& vclass, Period p) const;
};

std::string vehicle_class_of(Mode m); // driving/carpool -> passenger_car, fhv -> for_hire

struct RevenueCell {
    Population population;
    std::string vehicle_class;
    Period period;
    double trips_per_day = 0;
    double rate = 0;
    double annual_usd = 0;
};

struct RevenueTable {
    std::vector<RevenueCell> cells; // ordered by (population, vehicle class, period)
    double grand_total_usd = 0;
    std::map<Population, double> total_by_population;
};

// Tolled trips are cells where the post scenario actually charges a toll.
RevenueTable toll_revenue(const MarketDataset& ds, const Prediction& post_volumes,
                          const Scenario& scenario_post, const TollRateTable& rates);

} // namespace ipdl

#endif
