#ifndef IPDL_ESTIMATOR_HPP
#define IPDL_ESTIMATOR_HPP

#include <Eigen/Dense>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "ipdl/dataset.hpp"
#include "ipdl/params.hpp"
#include "ipdl/predictor.hpp"

namespace ipdl {

enum class ModelClass { MNL, NL_mode, NL_dest, IPDL };
enum class Method { OLS, TSLS };
enum class EndogenousSet {
    Default, // cost, cost_nyc and both nesting columns
    CostOnly // cost, cost_nyc
};

std::string to_string(ModelClass m);
std::string to_string(Method m);
ModelClass parse_model_class(const std::string& s);
Method parse_method(const std::string& s);

// Linear regression layout of the inverse demand: one row per
// (market, inside alternative) with strictly positive share, response
// ln(s_jt / s_0t), regressors the utility attributes plus ASC dummies
// plus (per model class) the nesting variables ln(s_jt / group sum).
struct DesignMatrix {
    Segment segment;
    ModelClass model_class = ModelClass::IPDL;
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<std::string> col_names;
    std::vector<bool> endogenous;
    std::vector<std::pair<int, int>> row_ids; // (market index, cell index)
    int nest_mode_col = -1, nest_dest_col = -1;
    std::vector<int> dest_zone_of_col; // zone index for dest ASC columns, else -1
    int dropped_rows = 0;              // zero-share cells
    int dropped_markets = 0;           // markets with zero outside share
    double n_trips = 0;                // daily trips over retained markets

    int n_obs() const { return (int)X.rows(); }
};

DesignMatrix build_design(const MarketDataset& ds, const Segment& segment,
                          ModelClass model_class,
                          EndogenousSet endo = EndogenousSet::Default);

// Group-averaged travel times of the *other* alternatives in each nest:
// 3 time families (auto tt, transit ivt, non-auto tt) x 2 dimensions,
// zero off-family, plus the 6 NYC-origin interactions (12 columns). The
// interactions give the first stage the power to separate the base cost
// column from its NYC-interacted twin.
Eigen::MatrixXd build_instruments(const DesignMatrix& design, const MarketDataset& ds);

struct EstimationResult {
    Segment segment;
    ModelClass model_class = ModelClass::IPDL;
    Method method = Method::OLS;
    std::vector<std::string> names;
    Eigen::VectorXd estimates;
    Eigen::VectorXd std_errors;
    SegmentParams params;
    bool rho_in_range = true; // reported, never silently clipped
    double adj_r2 = 0;
    double mcfadden_r2 = std::numeric_limits<double>::quiet_NaN();
    int n_obs = 0;
    double n_trips = 0;
    int dropped_rows = 0, dropped_markets = 0;
    double ssr = 0, sst = 0;

    std::map<std::string, double> std_error_map() const;
};

// instruments may be null for OLS; required for TSLS.
EstimationResult fit(const DesignMatrix& design, const Eigen::MatrixXd* instruments,
                     Method method);

// Fills mcfadden_r2 (and returns adj/mcfadden) by re-solving shares at the
// fitted parameters; requires rho in range.
std::pair<double, double> fit_statistics(EstimationResult& result, const MarketDataset& ds,
                                         const SolveOptions& opt = {});

} // namespace ipdl

#endif
