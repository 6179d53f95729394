#include "ipdl/predictor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

#include "ipdl/errors.hpp"

namespace ipdl {

ChoiceSet make_choice_set(const NestingStructure& nesting, const std::vector<int>& alts) {
    ChoiceSet cs;
    cs.alts = alts;
    cs.mode_g.resize(alts.size());
    cs.dest_g.resize(alts.size());
    std::map<int, int> mode_ids, dest_ids;
    for (size_t i = 0; i < alts.size(); ++i) {
        int a = alts[i];
        auto [mi, mn] = mode_ids.try_emplace(nesting.mode_group[a], (int)mode_ids.size());
        auto [di, dn] = dest_ids.try_emplace(nesting.dest_group[a], (int)dest_ids.size());
        cs.mode_g[i] = mi->second;
        cs.dest_g[i] = di->second;
    }
    cs.mode_members.resize(mode_ids.size());
    cs.dest_members.resize(dest_ids.size());
    for (size_t i = 0; i < alts.size(); ++i) {
        cs.mode_members[cs.mode_g[i]].push_back((int)i);
        cs.dest_members[cs.dest_g[i]].push_back((int)i);
    }
    return cs;
}

double systematic_utility(const SegmentParams& p, bool origin_is_nyc, Mode mode, int dest_zone,
                          const AlternativeAttributes& a) {
    double nyc = origin_is_nyc ? 1.0 : 0.0;
    double v = p.dest_asc_of(dest_zone);
    switch (mode) {
    case Mode::Driving:
        v += (p.auto_tt + nyc * p.auto_tt_nyc) * a.tt + (p.cost + nyc * p.cost_nyc) * a.cost +
             p.asc_driving;
        break;
    case Mode::Transit:
        v += (p.at + nyc * p.at_nyc) * a.access + (p.et + nyc * p.et_nyc) * a.egress +
             (p.wt + nyc * p.wt_nyc) * a.wait + (p.ivt + nyc * p.ivt_nyc) * a.ivt +
             p.trans * a.transfers + (p.cost + nyc * p.cost_nyc) * a.cost + p.asc_transit;
        break;
    case Mode::FHV:
        v += (p.auto_tt + nyc * p.auto_tt_nyc) * a.tt + (p.cost + nyc * p.cost_nyc) * a.cost +
             p.asc_fhv;
        break;
    case Mode::Biking:
        v += (p.nonauto_tt + nyc * p.nonauto_tt_nyc) * a.tt + p.asc_biking;
        break;
    case Mode::Walking:
        v += (p.nonauto_tt + nyc * p.nonauto_tt_nyc) * a.tt + p.asc_walking;
        break;
    case Mode::Carpool:
        v += (p.auto_tt + nyc * p.auto_tt_nyc) * a.tt; // no cost term, no mode ASC
        break;
    }
    return v;
}

ScenarioEffect apply_scenario(const Scenario& sc, const MarketDataset& ds, int market_idx,
                              const Alternative& alt, const AlternativeAttributes& base) {
    ScenarioEffect out;
    const Market& m = ds.markets[market_idx];
    const AlternativeAttributes* src = &base;
    if (sc.attribute_overrides) {
        const auto* o = sc.attribute_overrides->find(m.segment, m.origin, alt.mode, alt.dest);
        if (o) src = o;
    }
    out.attrs = *src;
    AlternativeAttributes& a = out.attrs;

    // Toll charged on entering the CRZ: tolled modes destined to the CRZ
    // from outside it.
    bool origin_in_crz = ds.zones[m.origin].is_crz;
    if (a.toll_flag == 1 && a.crz_dest_flag == 1 && !origin_in_crz) {
        double toll = sc.toll_for(alt.mode, m.segment.period);
        if (toll != 0) {
            a.cost += toll;
            out.toll_paid = toll;
        }
    }

    if (is_auto_mode(alt.mode) && a.crz_dest_flag == 1 && sc.crz_auto_time_factor != 1.0)
        a.tt *= sc.crz_auto_time_factor;

    if (alt.mode == Mode::Transit && sc.in_scope(market_idx)) {
        if (sc.transit_wait_delta != 0) {
            double w = a.wait + sc.transit_wait_delta;
            if (w < 0) {
                w = 0;
                ++out.clamps;
            }
            a.wait = w;
        }
        auto it = sc.transit_fare_delta.find(m.segment.population);
        if (it != sc.transit_fare_delta.end() && it->second != 0) {
            double c = a.cost + it->second;
            if (c < 0) {
                c = 0;
                ++out.clamps;
            }
            a.cost = c;
        }
    }
    return out;
}

double post_utility(const SegmentParams& p, const MarketDataset& ds, int market_idx,
                    const Alternative& alt, const AlternativeAttributes& base,
                    const Scenario& sc, int* clamp_count) {
    const Market& m = ds.markets[market_idx];
    if (sc.is_identity())
        return systematic_utility(p, ds.zones[m.origin].is_nyc, alt.mode, alt.dest, base);

    ScenarioEffect eff = apply_scenario(sc, ds, market_idx, alt, base);
    if (clamp_count) *clamp_count += eff.clamps;
    double v = systematic_utility(p, ds.zones[m.origin].is_nyc, alt.mode, alt.dest, eff.attrs);
    if (sc.toll_asc_active) {
        if (eff.toll_paid != 0) {
            switch (alt.mode) {
            case Mode::Driving: v += p.toll_asc_driving; break;
            case Mode::FHV: v += p.toll_asc_fhv; break;
            case Mode::Carpool: v += p.toll_asc_carpool; break;
            default: break;
            }
        }
        if (eff.attrs.crz_dest_flag == 1) v += p.toll_asc_crz;
    }
    return v;
}

namespace {

ShareResult softmax_with_outside(const std::vector<double>& V) {
    // outside utility is 0; stabilize against max(V, 0)
    double vmax = 0;
    for (double v : V) vmax = std::max(vmax, v);
    double denom = std::exp(-vmax);
    std::vector<double> e(V.size());
    for (size_t j = 0; j < V.size(); ++j) {
        e[j] = std::exp(V[j] - vmax);
        denom += e[j];
    }
    ShareResult r;
    r.inside.resize(V.size());
    for (size_t j = 0; j < V.size(); ++j) r.inside[j] = e[j] / denom;
    r.outside = std::exp(-vmax) / denom;
    r.iterations = 1;
    r.residual = 0;
    return r;
}

} // namespace

ShareResult solve_shares(const ChoiceSet& cs, const std::vector<double>& V, double rho_mode,
                         double rho_dest, const SolveOptions& opt) {
    const size_t n = V.size();
    if (n != cs.alts.size())
        throw Error("BadInput", "utility vector does not match choice set size");
    for (double v : V)
        if (!std::isfinite(v)) throw Error("BadInput", "non-finite utility");

    if (opt.forward == ForwardModel::PlainLogit) return softmax_with_outside(V);

    if (!(rho_mode >= 0 && rho_mode < 1 && rho_dest >= 0 && rho_dest < 1 &&
          rho_mode + rho_dest < 1))
        throw Error("InvalidRho", "require rho_h in [0,1) and sum < 1");

    const double rsum = rho_mode + rho_dest;
    if (rsum == 0) return softmax_with_outside(V);

    // Damped fixed point on log shares:
    //   ln s_j <- (V_j + ln s_0 - rho_m ln S_mode(j) - rho_d ln S_dest(j)) / (1 - sum rho)
    // followed by renormalization. Step size is capped at (1 - sum rho),
    // which keeps the iteration stable for large rho, and halved further
    // if the residual grows.
    std::vector<double> x(n, std::log(1.0 / (double)(n + 1)));
    double x0 = std::log(1.0 / (double)(n + 1));
    std::vector<double> smode(cs.mode_members.size()), sdest(cs.dest_members.size());
    double damping = std::min(opt.damping, 1.0 - rsum);
    double prev_resid = std::numeric_limits<double>::infinity();
    int iter = 0;
    double resid = 0;
    for (iter = 1; iter <= opt.max_iterations; ++iter) {
        std::fill(smode.begin(), smode.end(), 0.0);
        std::fill(sdest.begin(), sdest.end(), 0.0);
        for (size_t j = 0; j < n; ++j) {
            double s = std::exp(x[j]);
            smode[cs.mode_g[j]] += s;
            sdest[cs.dest_g[j]] += s;
        }
        resid = 0;
        std::vector<double> target(n);
        for (size_t j = 0; j < n; ++j) {
            target[j] = (V[j] + x0 - rho_mode * std::log(smode[cs.mode_g[j]]) -
                         rho_dest * std::log(sdest[cs.dest_g[j]])) /
                        (1.0 - rsum);
            resid = std::max(resid, std::fabs(target[j] - x[j]));
        }
        if (resid < opt.tolerance) break;
        if (resid > prev_resid * 1.5 && damping > 1e-3) damping *= 0.5;
        prev_resid = resid;
        for (size_t j = 0; j < n; ++j) x[j] += damping * (target[j] - x[j]);
        // renormalize so inside + outside sum to one
        double total = std::exp(x0);
        for (size_t j = 0; j < n; ++j) total += std::exp(x[j]);
        double lt = std::log(total);
        for (size_t j = 0; j < n; ++j) x[j] -= lt;
        x0 -= lt;
    }
    if (resid >= opt.tolerance) throw non_convergence("solve_shares", resid);

    ShareResult r;
    r.inside.resize(n);
    double total = std::exp(x0);
    for (size_t j = 0; j < n; ++j) {
        r.inside[j] = std::exp(x[j]);
        total += r.inside[j];
    }
    for (size_t j = 0; j < n; ++j) r.inside[j] /= total;
    r.outside = std::exp(x0) / total;
    r.iterations = iter;
    r.residual = resid;
    return r;
}

std::vector<double> inverse_utility(const ChoiceSet& cs, const std::vector<double>& inside,
                                    double outside, double rho_mode, double rho_dest) {
    const size_t n = inside.size();
    if (n != cs.alts.size())
        throw Error("BadInput", "share vector does not match choice set size");
    if (outside <= 0) throw Error("ZeroShare", "outside share must be strictly positive");
    for (double s : inside)
        if (s <= 0) throw Error("ZeroShare", "inside shares must be strictly positive");

    std::vector<double> smode(cs.mode_members.size(), 0.0), sdest(cs.dest_members.size(), 0.0);
    for (size_t j = 0; j < n; ++j) {
        smode[cs.mode_g[j]] += inside[j];
        sdest[cs.dest_g[j]] += inside[j];
    }
    const double rsum = rho_mode + rho_dest;
    std::vector<double> V(n);
    double ls0 = std::log(outside);
    for (size_t j = 0; j < n; ++j)
        V[j] = (1.0 - rsum) * std::log(inside[j]) + rho_mode * std::log(smode[cs.mode_g[j]]) +
               rho_dest * std::log(sdest[cs.dest_g[j]]) - ls0;
    return V;
}

double Prediction::total_trips_by(const MarketDataset& ds, Mode mode) const {
    double t = 0;
    for (const auto& r : rows)
        if (ds.alternatives[r.alt].mode == mode) t += r.trips;
    return t;
}

Prediction predict_volumes(const MarketDataset& ds, const ParameterSet& params,
                           const Scenario& scenario, const SolveOptions& opt, int workers) {
    // Full coverage check up front; missing attributes are an error here.
    for (const auto& m : ds.markets)
        if (m.cells.size() != ds.alternatives.size())
            throw Error("MissingAttributes",
                        "market " + m.segment.key() + "@" + ds.zones[m.origin].id +
                            " lacks attributes for " +
                            std::to_string(ds.alternatives.size() - m.cells.size()) +
                            " alternatives");
    for (const auto& seg : ds.segments) params.require(seg); // fail fast

    const size_t M = ds.markets.size();
    struct PerMarket {
        std::vector<PredictionRow> rows;
        double outside_share = 0, outside_trips = 0;
        long iterations = 0;
        double residual = 0;
        long clamps = 0;
        std::string error;
    };
    std::vector<PerMarket> per(M);

    auto run_market = [&](size_t mi) {
        PerMarket& out = per[mi];
        const Market& m = ds.markets[mi];
        const SegmentParams& p = params.require(m.segment);
        std::vector<int> alts(m.cells.size());
        std::vector<double> V(m.cells.size());
        int clamps = 0;
        for (size_t c = 0; c < m.cells.size(); ++c) {
            alts[c] = m.cells[c].alt;
            V[c] = post_utility(p, ds, (int)mi, ds.alternatives[m.cells[c].alt],
                                m.cells[c].attrs, scenario, &clamps);
        }
        ChoiceSet cs = make_choice_set(ds.nesting, alts);
        ShareResult sr = solve_shares(cs, V, p.rho_mode, p.rho_dest, opt);
        out.rows.resize(alts.size());
        for (size_t c = 0; c < alts.size(); ++c) {
            out.rows[c] = {(int)mi, alts[c], sr.inside[c], sr.inside[c] * m.total_trips};
        }
        out.outside_share = sr.outside;
        out.outside_trips = sr.outside * m.total_trips;
        out.iterations = sr.iterations;
        out.residual = sr.residual;
        out.clamps = clamps;
    };

    if (workers <= 1) {
        for (size_t mi = 0; mi < M; ++mi) run_market(mi);
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (size_t mi = next.fetch_add(1); mi < M; mi = next.fetch_add(1)) {
                    try {
                        run_market(mi);
                    } catch (const std::exception& e) {
                        per[mi].error = e.what();
                    }
                }
            });
        for (auto& t : pool) t.join();
        for (const auto& pm : per)
            if (!pm.error.empty()) throw Error("PredictFailed", pm.error);
    }

    Prediction pred;
    pred.outside_share.resize(M);
    pred.outside_trips.resize(M);
    for (size_t mi = 0; mi < M; ++mi) {
        const auto& pm = per[mi];
        pred.rows.insert(pred.rows.end(), pm.rows.begin(), pm.rows.end());
        pred.outside_share[mi] = pm.outside_share;
        pred.outside_trips[mi] = pm.outside_trips;
        pred.total_iterations += pm.iterations;
        pred.max_residual = std::max(pred.max_residual, pm.residual);
        pred.clamp_count += pm.clamps;
    }
    return pred;
}

} // namespace ipdl
