#include "ipdl/calibrator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "ipdl/errors.hpp"

namespace ipdl {

namespace {

double group_volume(const MarketDataset& ds, const Prediction& pred,
                    const RegionGroup& group) {
    double total = 0;
    bool any = false;
    for (const auto& r : pred.rows) {
        const Market& m = ds.markets[r.market];
        if (!group.origin_zones.empty() && !group.origin_zones.count(m.origin)) continue;
        const Alternative& alt = ds.alternatives[r.alt];
        if (!group.modes.count(alt.mode)) continue;
        if (group.crz_dest_only && !ds.zones[alt.dest].is_crz) continue;
        total += r.trips;
        any = true;
    }
    if (!any) throw Error("EmptyRegionGroup", "region group '" + group.name + "' matches no cells");
    return total;
}

} // namespace

double predicted_change(const MarketDataset& ds, const ParameterSet& params,
                        const Scenario& scenario_pre, const Scenario& scenario_post,
                        const RegionGroup& group, const SolveOptions& opt, int workers) {
    Prediction pre = predict_volumes(ds, params, scenario_pre, opt, workers);
    Prediction post = predict_volumes(ds, params, scenario_post, opt, workers);
    double vpre = group_volume(ds, pre, group);
    double vpost = group_volume(ds, post, group);
    if (vpre <= 0) throw Error("EmptyRegionGroup", "zero pre-scenario volume in '" + group.name + "'");
    return 100.0 * (vpost - vpre) / vpre;
}

CalibrationResult calibrate(const MarketDataset& ds, const ParameterSet& params,
                            const CalibrationTargets& targets,
                            const Scenario& scenario_template, const CalibrationOptions& opt) {
    if (targets.groups.empty()) throw Error("BadInput", "calibration requires >= 1 target");

    Scenario pre; // identity baseline
    Prediction pred_pre = predict_volumes(ds, params, pre, opt.solve, opt.workers);
    std::vector<double> vol_pre(targets.groups.size());
    for (size_t g = 0; g < targets.groups.size(); ++g)
        vol_pre[g] = group_volume(ds, pred_pre, targets.groups[g]);

    Scenario post = scenario_template;
    post.toll_asc_active = true;

    int n_free = 0;
    for (int i = 0; i < 4; ++i)
        if (!opt.pinned[i]) ++n_free;

    auto changes_at = [&](const std::array<double, 4>& asc) {
        ParameterSet p = params;
        p.set_toll_ascs(asc[0], asc[1], asc[2], asc[3]);
        Prediction pp = predict_volumes(ds, p, post, opt.solve, opt.workers);
        std::vector<double> out(targets.groups.size());
        for (size_t g = 0; g < targets.groups.size(); ++g)
            out[g] = 100.0 * (group_volume(ds, pp, targets.groups[g]) - vol_pre[g]) / vol_pre[g];
        return out;
    };

    const size_t n_res = targets.groups.size() + (opt.ridge > 0 ? 4 : 0);
    auto residuals_at = [&](const std::array<double, 4>& asc) {
        Eigen::VectorXd r(n_res);
        auto ch = changes_at(asc);
        for (size_t g = 0; g < targets.groups.size(); ++g)
            r(g) = targets.groups[g].observed_change_pct - ch[g];
        if (opt.ridge > 0)
            for (int i = 0; i < 4; ++i)
                r(targets.groups.size() + i) = std::sqrt(opt.ridge) * asc[i];
        return r;
    };

    auto clamp = [&](std::array<double, 4> a) {
        for (int i = 0; i < 4; ++i) {
            if (opt.pinned[i])
                a[i] = opt.pinned_value[i];
            else
                a[i] = std::clamp(a[i], opt.lower[i], opt.upper[i]);
        }
        return a;
    };

    CalibrationResult best;
    best.objective = std::numeric_limits<double>::infinity();
    best.under_determined = (int)targets.groups.size() < n_free && opt.ridge == 0;

    for (double start : opt.starts) {
        std::array<double, 4> x = clamp({start, start, start, start});
        Eigen::VectorXd r = residuals_at(x);
        double obj = r.squaredNorm();
        double mu = 1e-3;
        int iter = 0;
        bool converged = false;
        for (iter = 0; iter < opt.max_iterations; ++iter) {
            if (obj < 1e-14) {
                converged = true;
                break;
            }
            // central-difference Jacobian of residuals wrt free parameters
            std::vector<int> free;
            for (int i = 0; i < 4; ++i)
                if (!opt.pinned[i]) free.push_back(i);
            Eigen::MatrixXd J(n_res, free.size());
            for (size_t c = 0; c < free.size(); ++c) {
                auto xp = x, xm = x;
                xp[free[c]] += opt.fd_step;
                xm[free[c]] -= opt.fd_step;
                J.col(c) = (residuals_at(clamp(xp)) - residuals_at(clamp(xm))) /
                           (2 * opt.fd_step);
            }
            Eigen::VectorXd g = J.transpose() * r;
            if (g.norm() < 1e-12) {
                converged = true;
                break;
            }
            // Levenberg-Marquardt step (Gauss-Newton Hessian approximation)
            bool accepted = false;
            for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
                Eigen::MatrixXd H = J.transpose() * J;
                H.diagonal().array() += mu;
                Eigen::VectorXd delta = H.ldlt().solve(-g);
                auto xn = x;
                for (size_t c = 0; c < free.size(); ++c) xn[free[c]] += delta(c);
                xn = clamp(xn);
                Eigen::VectorXd rn = residuals_at(xn);
                double on = rn.squaredNorm();
                if (on < obj) {
                    x = xn;
                    r = rn;
                    obj = on;
                    mu = std::max(mu * 0.3, 1e-10);
                    accepted = true;
                } else {
                    mu *= 4;
                }
            }
            if (!accepted) break; // stalled
        }
        if (obj < best.objective) {
            best.toll_ascs = x;
            best.objective = obj;
            best.iterations = iter;
            best.converged = converged || obj < 1e-12;
        }
    }

    best.predicted_changes_pct = changes_at(best.toll_ascs);
    return best;
}

} // namespace ipdl
