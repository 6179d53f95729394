#ifndef IPDL_COMPENSATOR_HPP
#define IPDL_COMPENSATOR_HPP

#include <map>
#include <set>
#include <vector>

#include "ipdl/predictor.hpp"

namespace ipdl {

// Markets whose welfare is to be restored; wait/fare levers apply to the
// transit alternatives of these markets.
struct CompensationScope {
    std::set<int> markets;
};

enum class LeverKind { Wait, Fare };

struct CompensatorOptions {
    Scenario toll_scenario; // post-implementation scenario (pre is identity)
    SolveOptions solve;
    int workers = 1;
    double tol_usd_per_day = 0.5;  // bisection target on the criterion CV
    double eps_usd_per_day = 1.0;  // Pareto feasibility slack
    double wait_cap_min = 240;
    double fare_cap_usd = 200;
    bool kh_fare_single = false;       // one uniform discount (literal aggregate reading)
    bool subsidy_fixed_demand = false; // price subsidy at pre-compensation transit demand
    int annualization_days = 365;
    int max_bisect = 200;
};

struct CompensationResult {
    double wait_reduction_min = 0;
    std::map<Population, double> fare_discount;          // $/trip, >= 0
    double annual_subsidy_usd = 0;                       // fare levers only
    std::map<std::pair<Population, int>, double> residual_cv; // (population, origin) $/day
    double aggregate_cv_usd_per_day = 0; // over the scope, after compensation
    bool converged = true;
};

// Aggregate CV (relative to the pre-toll baseline) over the scope under
// toll + lever. wait_reduction in minutes >= 0; fare_discount $/trip >= 0.
double cv_of_lever(const MarketDataset& ds, const ParameterSet& params,
                   const CompensationScope& scope, const CompensatorOptions& opt,
                   double wait_reduction, const std::map<Population, double>& fare_discount);

CompensationResult solve_kaldor_hicks(const MarketDataset& ds, const ParameterSet& params,
                                      const CompensationScope& scope, LeverKind lever,
                                      const CompensatorOptions& opt);

// One result per wait level; fare discounts per population sized so every
// (population, origin zone) group ends >= -eps.
std::vector<CompensationResult> solve_pareto(const MarketDataset& ds,
                                             const ParameterSet& params,
                                             const CompensationScope& scope,
                                             const std::vector<double>& wait_levels,
                                             const CompensatorOptions& opt);

} // namespace ipdl

#endif
