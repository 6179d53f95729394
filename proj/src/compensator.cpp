#include "ipdl/compensator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "ipdl/errors.hpp"
#include "ipdl/welfare.hpp"

namespace ipdl {

namespace {

// Shared evaluation state: pre-toll consumer surplus per scope market is
// fixed, so it is computed once.
struct Engine {
    const MarketDataset& ds;
    const ParameterSet& params;
    const CompensationScope& scope;
    const CompensatorOptions& opt;
    std::vector<int> scope_markets;
    std::vector<double> cs_pre; // aligned with scope_markets

    Engine(const MarketDataset& d, const ParameterSet& p, const CompensationScope& s,
           const CompensatorOptions& o)
        : ds(d), params(p), scope(s), opt(o) {
        if (s.markets.empty()) throw Error("BadInput", "compensation scope is empty");
        Scenario identity;
        for (int mi : s.markets) {
            scope_markets.push_back(mi);
            cs_pre.push_back(consumer_surplus(p.require(d.markets[mi].segment), d, mi,
                                              identity, o.solve));
        }
    }

    Scenario lever_scenario(double wait_reduction,
                            const std::map<Population, double>& fare_discount) const {
        Scenario sc = opt.toll_scenario;
        sc.transit_wait_delta += -wait_reduction;
        for (const auto& [pop, disc] : fare_discount)
            sc.transit_fare_delta[pop] -= disc;
        sc.scope_markets = scope.markets;
        return sc;
    }

    // CV $/day per scope market under toll + lever.
    std::vector<double> market_cv(const Scenario& sc) const {
        std::vector<double> out(scope_markets.size());
        for (size_t i = 0; i < scope_markets.size(); ++i) {
            int mi = scope_markets[i];
            const SegmentParams& p = params.require(ds.markets[mi].segment);
            if (p.cost == 0) throw Error("ZeroCostParameter", "cost coefficient is zero");
            double cs_post = consumer_surplus(p, ds, mi, sc, opt.solve);
            out[i] = -(cs_post - cs_pre[i]) / p.cost * ds.markets[mi].total_trips;
        }
        return out;
    }

    double aggregate(const std::vector<double>& cv) const {
        double t = 0;
        for (double v : cv) t += v;
        return t;
    }

    double aggregate_from(const std::map<std::pair<Population, int>, double>& g) const {
        double t = 0;
        for (const auto& [key, v] : g) t += v;
        return t;
    }

    std::map<std::pair<Population, int>, double>
    group_cv(const std::vector<double>& cv) const {
        std::map<std::pair<Population, int>, double> g;
        for (size_t i = 0; i < scope_markets.size(); ++i) {
            const Market& m = ds.markets[scope_markets[i]];
            g[{m.segment.population, m.origin}] += cv[i];
        }
        return g;
    }

    // Smallest lever x in [0, cap] with criterion(x) >= 0; criterion must
    // be monotone nondecreasing. Returns the solved lever.
    double bisect_lever(const std::function<double(double)>& criterion, double cap,
                        const char* what) const {
        double g0 = criterion(0);
        if (g0 >= 0) return 0;
        double lo = 0, hi = std::min(1.0, cap), ghi = criterion(hi);
        while (ghi < 0) {
            if (hi >= cap)
                throw Error("Unbracketable", std::string(what) +
                                                 ": lever cap reached, plateau CV = " +
                                                 std::to_string(ghi) + " $/day");
            lo = hi;
            hi = std::min(hi * 2, cap);
            ghi = criterion(hi);
        }
        for (int it = 0; it < opt.max_bisect; ++it) {
            double mid = 0.5 * (lo + hi);
            double gm = criterion(mid);
            if (gm >= 0 && gm < opt.tol_usd_per_day) return mid;
            if (gm >= 0)
                hi = mid;
            else
                lo = mid;
            if (hi - lo < 1e-12 * std::max(1.0, hi)) break;
        }
        return hi; // criterion(hi) >= 0 by construction
    }

    double transit_trips(const Scenario& sc, Population pop) const {
        Prediction pred = predict_volumes(ds, params, sc, opt.solve, opt.workers);
        double t = 0;
        for (const auto& r : pred.rows) {
            const Market& m = ds.markets[r.market];
            if (!scope.markets.count(r.market)) continue;
            if (m.segment.population != pop) continue;
            if (ds.alternatives[r.alt].mode != Mode::Transit) continue;
            t += r.trips;
        }
        return t;
    }

    double subsidy(const std::map<Population, double>& discounts,
                   const Scenario& demand_scenario) const {
        double total = 0;
        for (const auto& [pop, disc] : discounts) {
            if (disc <= 0) continue;
            total += disc * transit_trips(demand_scenario, pop) * opt.annualization_days;
        }
        return total;
    }
};

} // namespace

double cv_of_lever(const MarketDataset& ds, const ParameterSet& params,
                   const CompensationScope& scope, const CompensatorOptions& opt,
                   double wait_reduction, const std::map<Population, double>& fare_discount) {
    Engine e(ds, params, scope, opt);
    return e.aggregate(e.market_cv(e.lever_scenario(wait_reduction, fare_discount)));
}

CompensationResult solve_kaldor_hicks(const MarketDataset& ds, const ParameterSet& params,
                                      const CompensationScope& scope, LeverKind lever,
                                      const CompensatorOptions& opt) {
    Engine e(ds, params, scope, opt);
    CompensationResult res;

    double toll_cv = e.aggregate(e.market_cv(e.lever_scenario(0, {})));
    std::vector<Population> pops;
    {
        std::set<Population> seen;
        for (int mi : e.scope_markets) seen.insert(ds.markets[mi].segment.population);
        pops.assign(seen.begin(), seen.end());
    }

    if (toll_cv >= 0) {
        // no aggregate loss: zero lever
    } else if (lever == LeverKind::Wait) {
        res.wait_reduction_min = e.bisect_lever(
            [&](double w) { return e.aggregate(e.market_cv(e.lever_scenario(w, {}))); },
            opt.wait_cap_min, "wait reduction");
    } else if (opt.kh_fare_single) {
        double d = e.bisect_lever(
            [&](double x) {
                std::map<Population, double> disc;
                for (auto p : pops) disc[p] = x;
                return e.aggregate(e.market_cv(e.lever_scenario(0, disc)));
            },
            opt.fare_cap_usd, "uniform fare discount");
        for (auto p : pops) res.fare_discount[p] = d;
    } else {
        // one discount per population, offsetting that population's own
        // aggregate CV within the scope
        for (auto pop : pops) {
            auto pop_cv = [&](double x) {
                std::map<Population, double> disc;
                disc[pop] = x;
                auto cv = e.market_cv(e.lever_scenario(0, disc));
                double t = 0;
                for (size_t i = 0; i < e.scope_markets.size(); ++i)
                    if (ds.markets[e.scope_markets[i]].segment.population == pop) t += cv[i];
                return t;
            };
            res.fare_discount[pop] =
                e.bisect_lever(pop_cv, opt.fare_cap_usd,
                               ("fare discount for " + to_string(pop)).c_str());
        }
    }

    Scenario final_sc = e.lever_scenario(res.wait_reduction_min, res.fare_discount);
    auto cv = e.market_cv(final_sc);
    res.aggregate_cv_usd_per_day = e.aggregate(cv);
    res.residual_cv = e.group_cv(cv);
    if (!res.fare_discount.empty()) {
        Scenario demand_sc =
            opt.subsidy_fixed_demand ? e.lever_scenario(0, {}) : final_sc;
        res.annual_subsidy_usd = e.subsidy(res.fare_discount, demand_sc);
    }
    return res;
}

std::vector<CompensationResult> solve_pareto(const MarketDataset& ds,
                                             const ParameterSet& params,
                                             const CompensationScope& scope,
                                             const std::vector<double>& wait_levels,
                                             const CompensatorOptions& opt) {
    Engine e(ds, params, scope, opt);
    std::vector<CompensationResult> schedule;

    for (double w : wait_levels) {
        CompensationResult res;
        res.wait_reduction_min = w;

        auto group_cv_at = [&](const std::map<Population, double>& disc) {
            return e.group_cv(e.market_cv(e.lever_scenario(w, disc)));
        };

        auto groups0 = group_cv_at({});
        std::set<Population> pops;
        for (const auto& [key, v] : groups0) pops.insert(key.first);

        std::map<Population, double> discounts;
        for (auto pop : pops) discounts[pop] = 0;

        // residual loss per group after the wait lever; each group in loss
        // gets a discount sized by bisection, each population takes the
        // max over its groups
        for (const auto& [key, cv0] : groups0) {
            if (cv0 >= -opt.eps_usd_per_day) continue; // already within slack
            auto pop = key.first;
            auto grp_cv = [&](double x) {
                std::map<Population, double> disc;
                disc[pop] = x;
                auto g = group_cv_at(disc);
                return g.at(key);
            };
            double need;
            try {
                need = e.bisect_lever(grp_cv, opt.fare_cap_usd,
                                      ("pareto discount for " + to_string(pop)).c_str());
            } catch (const Error& err) {
                if (err.code() == "Unbracketable")
                    throw Error("InfeasibleDiscount",
                                "group (" + to_string(pop) + ", " +
                                    ds.zones[key.second].id +
                                    ") cannot be compensated at wait level " +
                                    std::to_string(w));
                throw;
            }
            discounts[pop] = std::max(discounts[pop], need);
        }

        // recheck under the combined lever; cross-group interactions can
        // leave a group short, so repair by re-solving its population
        for (int pass = 0; pass < 5; ++pass) {
            auto g = group_cv_at(discounts);
            std::pair<Population, int> worst{};
            double worst_cv = -opt.eps_usd_per_day;
            bool violated = false;
            for (const auto& [key, v] : g)
                if (v < worst_cv) {
                    worst_cv = v;
                    worst = key;
                    violated = true;
                }
            if (!violated) {
                res.residual_cv = g;
                res.aggregate_cv_usd_per_day = e.aggregate_from(g);
                break;
            }
            auto pop = worst.first;
            double base = discounts[pop];
            auto grp_cv = [&](double extra) {
                auto disc = discounts;
                disc[pop] = base + extra;
                return group_cv_at(disc).at(worst);
            };
            double extra = e.bisect_lever(grp_cv, opt.fare_cap_usd,
                                          "pareto repair discount");
            discounts[pop] = base + extra;
            if (pass == 4) {
                res.converged = false;
                auto gg = group_cv_at(discounts);
                res.residual_cv = gg;
                res.aggregate_cv_usd_per_day = e.aggregate_from(gg);
            }
        }

        res.fare_discount = discounts;
        Scenario final_sc = e.lever_scenario(w, discounts);
        Scenario demand_sc = opt.subsidy_fixed_demand ? e.lever_scenario(w, {}) : final_sc;
        res.annual_subsidy_usd = e.subsidy(discounts, demand_sc);
        schedule.push_back(std::move(res));
    }
    return schedule;
}

} // namespace ipdl
