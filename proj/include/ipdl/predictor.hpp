#ifndef IPDL_PREDICTOR_HPP
#define IPDL_PREDICTOR_HPP

#include <vector>

#include "ipdl/dataset.hpp"
#include "ipdl/params.hpp"

namespace ipdl {

enum class ForwardModel {
    IPDL,      // invert the inverse-demand system exactly
    PlainLogit // literal softmax over post utilities
};

struct SolveOptions {
    ForwardModel forward = ForwardModel::IPDL;
    double damping = 0.5;     // initial step; reduced automatically when unstable
    double tolerance = 1e-10; // max |delta ln s| between iterations
    int max_iterations = 10000;
};

struct ShareResult {
    std::vector<double> inside;
    double outside = 0;
    int iterations = 0;
    double residual = 0;
};

// Choice set for one market: alternative indices plus compact group ids
// within the set for both nesting dimensions.
struct ChoiceSet {
    std::vector<int> alts;
    std::vector<int> mode_g, dest_g;           // compact group id per position
    std::vector<std::vector<int>> mode_members; // positions per compact group
    std::vector<std::vector<int>> dest_members;
};

ChoiceSet make_choice_set(const NestingStructure& nesting, const std::vector<int>& alts);

// Pre-implementation systematic utility: attribute terms with NYC-origin
// interactions, mode constants (carpool reference) and destination constants.
double systematic_utility(const SegmentParams& p, bool origin_is_nyc, Mode mode, int dest_zone,
                          const AlternativeAttributes& a);

// Scenario application: returns adjusted attributes; `toll_paid` is the
// toll added to this cell (0 if not tolled); `clamps` counts attributes
// floored at zero.
struct ScenarioEffect {
    AlternativeAttributes attrs;
    double toll_paid = 0;
    int clamps = 0;
};
ScenarioEffect apply_scenario(const Scenario& sc, const MarketDataset& ds, int market_idx,
                              const Alternative& alt, const AlternativeAttributes& base);

// Post-implementation utility: systematic utility on
// scenario-adjusted attributes plus toll ASCs when active.
double post_utility(const SegmentParams& p, const MarketDataset& ds, int market_idx,
                    const Alternative& alt, const AlternativeAttributes& base,
                    const Scenario& sc, int* clamp_count = nullptr);

// Solves utilities -> shares. For ForwardModel::IPDL the returned shares
// satisfy the inverse system within `tolerance`; rho = 0 reduces to exact
// softmax with the outside alternative's utility pinned at 0.
ShareResult solve_shares(const ChoiceSet& cs, const std::vector<double>& V, double rho_mode,
                         double rho_dest, const SolveOptions& opt = {});

// Shares -> utilities (the explicit inverse demand). All shares must be
// strictly positive.
std::vector<double> inverse_utility(const ChoiceSet& cs, const std::vector<double>& inside,
                                    double outside, double rho_mode, double rho_dest);

struct PredictionRow {
    int market = -1;
    int alt = -1;
    double share = 0;
    double trips = 0;
};

struct Prediction {
    std::vector<PredictionRow> rows; // ordered by (market, alt)
    std::vector<double> outside_share; // per market
    std::vector<double> outside_trips;
    long total_iterations = 0;
    double max_residual = 0;
    long clamp_count = 0;

    double total_trips_by(const MarketDataset& ds, Mode mode) const;
};

// Full-dataset prediction. Every market must carry attributes for every
// alternative; a missing cell is an error, not an imputation.
Prediction predict_volumes(const MarketDataset& ds, const ParameterSet& params,
                           const Scenario& scenario, const SolveOptions& opt = {},
                           int workers = 1);

} // namespace ipdl

#endif
