#ifndef IPDL_CALIBRATOR_HPP
#define IPDL_CALIBRATOR_HPP

#include <array>
#include <set>
#include <string>
#include <vector>

#include "ipdl/predictor.hpp"

namespace ipdl {

// A calibration target: observed percentage change (in percentage points,
// e.g. -13.06) of trips on the given modes, from the given origin zones,
// into the CRZ.
struct RegionGroup {
    std::string name;
    std::set<int> origin_zones;
    std::set<Mode> modes = {Mode::Driving, Mode::FHV, Mode::Carpool};
    bool crz_dest_only = true;
    double observed_change_pct = 0;
};

struct CalibrationTargets {
    std::vector<RegionGroup> groups;
};

struct CalibrationOptions {
    std::array<double, 4> lower = {-5, -5, -5, -5}; // driving, fhv, carpool, crz
    std::array<double, 4> upper = {0, 0, 0, 0};
    std::vector<double> starts = {0.0, -0.25, -0.5}; // uniform per-parameter starts
    std::array<bool, 4> pinned = {false, false, false, false};
    std::array<double, 4> pinned_value = {0, 0, 0, 0};
    double ridge = 0; // lambda * ||asc||^2 regularization
    double fd_step = 1e-5;
    int max_iterations = 100;
    SolveOptions solve;
    int workers = 1;
};

struct CalibrationResult {
    std::array<double, 4> toll_ascs = {0, 0, 0, 0};
    double objective = 0; // sum of squared gaps, percentage points squared
    std::vector<double> predicted_changes_pct;
    int iterations = 0;
    bool converged = false;
    bool under_determined = false;
};

// Percentage change (in percentage points) of trip volume on the group's
// (origin, mode, CRZ-destination) slice, post vs pre.
double predicted_change(const MarketDataset& ds, const ParameterSet& params,
                        const Scenario& scenario_pre, const Scenario& scenario_post,
                        const RegionGroup& group, const SolveOptions& opt = {},
                        int workers = 1);

// Calibrates the four toll ASCs against the targets; scenario_template
// carries the toll schedule and other post-implementation changes
// (toll_asc_active is forced on during evaluation).
CalibrationResult calibrate(const MarketDataset& ds, const ParameterSet& params,
                            const CalibrationTargets& targets,
                            const Scenario& scenario_template,
                            const CalibrationOptions& opt = {});

} // namespace ipdl

#endif
