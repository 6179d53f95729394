#include "ipdl/welfare.hpp"

#include <cmath>

#include "ipdl/errors.hpp"

namespace ipdl {

double value_of_time(const SegmentParams& p, TimeComponent component, bool nyc) {
    double theta_time = 0;
    switch (component) {
    case TimeComponent::AutoTT: theta_time = p.auto_tt + (nyc ? p.auto_tt_nyc : 0); break;
    case TimeComponent::TransitIVT: theta_time = p.ivt + (nyc ? p.ivt_nyc : 0); break;
    case TimeComponent::TransitWT: theta_time = p.wt + (nyc ? p.wt_nyc : 0); break;
    case TimeComponent::NonAutoTT:
        theta_time = p.nonauto_tt + (nyc ? p.nonauto_tt_nyc : 0);
        break;
    }
    double theta_cost = p.cost + (nyc ? p.cost_nyc : 0);
    if (theta_cost == 0) throw Error("ZeroCostParameter", "cost coefficient is zero");
    return 60.0 * theta_time / theta_cost;
}

namespace {
double outside_share_under(const SegmentParams& p, const MarketDataset& ds, int market_idx,
                           const Scenario& sc, const SolveOptions& opt) {
    const Market& m = ds.markets[market_idx];
    std::vector<int> alts(m.cells.size());
    std::vector<double> V(m.cells.size());
    for (size_t c = 0; c < m.cells.size(); ++c) {
        alts[c] = m.cells[c].alt;
        V[c] = post_utility(p, ds, market_idx, ds.alternatives[m.cells[c].alt],
                            m.cells[c].attrs, sc);
    }
    ChoiceSet cs = make_choice_set(ds.nesting, alts);
    return solve_shares(cs, V, p.rho_mode, p.rho_dest, opt).outside;
}
} // namespace

double consumer_surplus(const SegmentParams& p, const MarketDataset& ds, int market_idx,
                        const Scenario& scenario, const SolveOptions& opt) {
    return -std::log(outside_share_under(p, ds, market_idx, scenario, opt));
}

MarketWelfare compensating_variation(const SegmentParams& p, const MarketDataset& ds,
                                     int market_idx, const Scenario& scenario_pre,
                                     const Scenario& scenario_post, const SolveOptions& opt) {
    if (p.cost == 0) throw Error("ZeroCostParameter", "cost coefficient is zero");
    MarketWelfare w;
    w.market = market_idx;
    w.cs_pre = consumer_surplus(p, ds, market_idx, scenario_pre, opt);
    w.cs_post = consumer_surplus(p, ds, market_idx, scenario_post, opt);
    w.cv_per_trip = -(w.cs_post - w.cs_pre) / p.cost;
    w.cv_per_day = w.cv_per_trip * ds.markets[market_idx].total_trips;
    return w;
}

WelfareReport welfare_report(const MarketDataset& ds, const ParameterSet& params,
                             const Scenario& scenario_pre, const Scenario& scenario_post,
                             const SolveOptions& opt, int workers) {
    (void)workers; // per-market solves are cheap; sequential keeps output deterministic
    WelfareReport rep;
    rep.per_market.resize(ds.markets.size());
    for (size_t mi = 0; mi < ds.markets.size(); ++mi) {
        const SegmentParams& p = params.require(ds.markets[mi].segment);
        rep.per_market[mi] =
            compensating_variation(p, ds, (int)mi, scenario_pre, scenario_post, opt);
    }
    return rep;
}

double WelfareReport::total_cv_per_day() const {
    double t = 0;
    for (const auto& w : per_market) t += w.cv_per_day;
    return t;
}

std::map<int, double> WelfareReport::cv_by_origin_zone(const MarketDataset& ds) const {
    std::map<int, double> out;
    for (const auto& w : per_market) out[ds.markets[w.market].origin] += w.cv_per_day;
    return out;
}

std::map<Population, double> WelfareReport::cv_by_population(const MarketDataset& ds) const {
    std::map<Population, double> out;
    for (const auto& w : per_market)
        out[ds.markets[w.market].segment.population] += w.cv_per_day;
    return out;
}

std::map<std::string, double> WelfareReport::cv_by_segment(const MarketDataset& ds) const {
    std::map<std::string, double> out;
    for (const auto& w : per_market) out[ds.markets[w.market].segment.key()] += w.cv_per_day;
    return out;
}

std::map<RegionTag, double> WelfareReport::cv_by_region(const MarketDataset& ds) const {
    std::map<RegionTag, double> out;
    for (const auto& w : per_market)
        out[ds.zones[ds.markets[w.market].origin].region] += w.cv_per_day;
    return out;
}

double TollRateTable::rate_for(const std::string& vclass, Period p) const {
    auto it = rates.find({vclass, p});
    if (it == rates.end())
        throw Error("MissingRate", "no toll rate for " + vclass + "/" + to_string(p));
    return it->second;
}

std::string vehicle_class_of(Mode m) {
    if (m == Mode::Driving || m == Mode::Carpool) return "passenger_car";
    if (m == Mode::FHV) return "for_hire";
    throw Error("BadInput", "mode " + to_string(m) + " is not tolled");
}

RevenueTable toll_revenue(const MarketDataset& ds, const Prediction& post_volumes,
                          const Scenario& scenario_post, const TollRateTable& rates) {
    // (population, vclass, period) -> daily tolled trips
    std::map<std::tuple<Population, std::string, Period>, double> trips;
    for (const auto& r : post_volumes.rows) {
        const Market& m = ds.markets[r.market];
        const Alternative& alt = ds.alternatives[r.alt];
        const MarketCell* cell = nullptr;
        for (const auto& c : m.cells)
            if (c.alt == r.alt) cell = &c;
        if (!cell) continue;
        ScenarioEffect eff = apply_scenario(scenario_post, ds, r.market, alt, cell->attrs);
        if (eff.toll_paid == 0) continue;
        trips[{m.segment.population, vehicle_class_of(alt.mode), m.segment.period}] += r.trips;
    }

    RevenueTable table;
    for (auto pop : {Population::NotLowIncome, Population::LowIncome, Population::Senior,
                     Population::Student})
        for (const std::string& vc : {std::string("passenger_car"), std::string("for_hire")})
            for (auto per : {Period::Peak, Period::Overnight}) {
                auto it = trips.find({pop, vc, per});
                double t = it == trips.end() ? 0.0 : it->second;
                RevenueCell cell;
                cell.population = pop;
                cell.vehicle_class = vc;
                cell.period = per;
                cell.trips_per_day = t;
                cell.rate = t > 0 ? rates.rate_for(vc, per) : 0.0;
                cell.annual_usd = t * cell.rate * rates.annualization_days;
                table.cells.push_back(cell);
                table.grand_total_usd += cell.annual_usd;
                table.total_by_population[pop] += cell.annual_usd;
            }
    return table;
}

} // namespace ipdl
