// Pipeline driver: validate / synth / estimate / predict / calibrate /
// welfare / compensate / revenue / pipeline, configured by one JSON file
// with flat --set overrides. Artifacts are CSVs written atomically; each
// run also writes a run_manifest.json with timestamps and a config hash.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ipdl/calibrator.hpp"
#include "ipdl/compensator.hpp"
#include "ipdl/csv.hpp"
#include "ipdl/errors.hpp"
#include "ipdl/estimator.hpp"
#include "ipdl/synthgen.hpp"
#include "ipdl/welfare.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
using namespace ipdl;

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string iso_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Run {
    json cfg;
    fs::path out_dir;
    std::vector<std::string> warnings;
    std::vector<std::string> artifacts;

    void note(const std::string& w) { warnings.push_back(w); }

    std::string path_for(const std::string& name) {
        artifacts.push_back(name);
        return (out_dir / name).string();
    }
};

json get(const json& j, const std::string& key, json def) {
    return j.contains(key) ? j.at(key) : def;
}

// ---- config -> domain objects -------------------------------------------

MarketDataset load_data(const json& cfg) {
    const json& d = cfg.at("data");
    return load_dataset(d.at("zones"), d.at("markets"), d.at("attributes"),
                        d.at("shares"));
}

SolveOptions solve_options(const json& cfg) {
    SolveOptions o;
    json s = get(cfg, "solver", json::object());
    std::string fwd = get(s, "forward", "ipdl");
    if (fwd == "plain_logit")
        o.forward = ForwardModel::PlainLogit;
    else if (fwd != "ipdl")
        throw Error("BadConfig", "solver.forward must be ipdl or plain_logit");
    o.damping = get(s, "damping", o.damping);
    o.tolerance = get(s, "tolerance", o.tolerance);
    o.max_iterations = get(s, "max_iterations", o.max_iterations);
    return o;
}

int workers_of(const json& cfg) { return get(cfg, "workers", 1); }

// Owns the optional attribute-override table referenced by the scenario.
struct ScenarioHolder {
    Scenario scenario;
    AttributeTable overrides;
};

std::set<int> scope_markets_of(const json& block, const MarketDataset& ds) {
    std::set<int> out;
    std::set<int> zones;
    for (const auto& z : get(block, "scope_origin_zones", json::array()))
        zones.insert(ds.zone(z.get<std::string>()));
    std::set<Population> pops;
    for (const auto& p : get(block, "scope_populations", json::array()))
        pops.insert(parse_population(p.get<std::string>()));
    if (zones.empty() && pops.empty()) return out; // empty = all
    for (size_t i = 0; i < ds.markets.size(); ++i) {
        const Market& m = ds.markets[i];
        if (!zones.empty() && !zones.count(m.origin)) continue;
        if (!pops.empty() && !pops.count(m.segment.population)) continue;
        out.insert((int)i);
    }
    if (out.empty()) throw Error("BadConfig", "scenario scope matches no markets");
    return out;
}

ScenarioHolder scenario_of(const json& cfg, const MarketDataset& ds,
                           const std::string& block_name = "scenario") {
    ScenarioHolder h;
    json s = get(cfg, block_name, json::object());
    for (const auto& t : get(s, "tolls", json::array()))
        h.scenario.toll[{parse_mode(t.at("mode")), parse_period(t.at("period"))}] =
            t.at("amount").get<double>();
    h.scenario.crz_auto_time_factor = get(s, "crz_auto_time_factor", 1.0);
    h.scenario.transit_wait_delta = get(s, "transit_wait_delta", 0.0);
    for (const auto& [pop, delta] :
         get(s, "transit_fare_delta", json::object()).items())
        h.scenario.transit_fare_delta[parse_population(pop)] = delta.get<double>();
    h.scenario.toll_asc_active = get(s, "toll_asc_active", false);
    h.scenario.scope_markets = scope_markets_of(s, ds);
    if (s.contains("attribute_overrides")) {
        h.overrides = load_attribute_table(s.at("attribute_overrides"), ds);
        h.scenario.attribute_overrides = &h.overrides;
    }
    return h;
}

ParameterSet params_of(const json& cfg, const MarketDataset& ds) {
    if (!cfg.contains("parameters"))
        throw Error("BadConfig", "config key 'parameters' (CSV path) is required");
    return load_parameters(cfg.at("parameters"), ds);
}

// ---- commands -----------------------------------------------------------

void cmd_validate(Run& run) {
    MarketDataset ds = load_data(run.cfg);
    double total = 0, inside = 0, outside = 0;
    long cells = 0, positive = 0;
    for (const auto& m : ds.markets) {
        total += m.total_trips;
        outside += m.outside_trips;
        cells += (long)m.cells.size();
        for (const auto& c : m.cells) {
            inside += c.trips;
            if (c.trips > 0) ++positive;
        }
    }
    csv::Writer w({"metric", "value"});
    w.add_row({"zones", std::to_string(ds.zones.size())});
    w.add_row({"alternatives", std::to_string(ds.alternatives.size())});
    w.add_row({"markets", std::to_string(ds.markets.size())});
    w.add_row({"segments", std::to_string(ds.segments.size())});
    w.add_row({"cells", std::to_string(cells)});
    w.add_row({"positive_cells", std::to_string(positive)});
    w.add_row({"total_trips", csv::fmt(total)});
    w.add_row({"inside_trips", csv::fmt(inside)});
    w.add_row({"outside_trips", csv::fmt(outside)});
    w.write(run.path_for("validate_summary.csv"));
}

void cmd_synth(Run& run) {
    json s = get(run.cfg, "synth", json::object());
    GenerationSpec spec;
    spec.seed = get(run.cfg, "seed", 1);
    spec.n_origin_zones = get(s, "n_origin_zones", spec.n_origin_zones);
    spec.n_dest_zones = get(s, "n_dest_zones", spec.n_dest_zones);
    spec.total_trips = get(s, "total_trips", spec.total_trips);
    spec.noise_sd = get(s, "noise_sd", spec.noise_sd);
    spec.endogeneity_strength = get(s, "endogeneity_strength", spec.endogeneity_strength);
    spec.round_trips = get(s, "round_trips", spec.round_trips);
    for (const auto& seg : get(s, "segments", json::array())) {
        Segment sg;
        sg.population = parse_population(seg.at("population"));
        sg.purpose = parse_purpose(seg.at("purpose"));
        sg.period = parse_period(seg.at("period"));
        spec.segments.push_back(sg);
    }
    spec.solve = solve_options(run.cfg);
    GenerationResult gen = generate(spec);
    save_dataset(gen.dataset, run.path_for("synth_zones.csv"),
                 run.path_for("synth_markets.csv"),
                 run.path_for("synth_attributes.csv"),
                 run.path_for("synth_shares.csv"));
    save_parameters(gen.truth, gen.dataset, nullptr,
                    run.path_for("synth_truth_parameters.csv"));
}

struct EstimateOutput {
    ParameterSet params;
    std::map<Segment, std::map<std::string, double>> std_errors;
    std::vector<EstimationResult> fits;
};

EstimateOutput run_estimation(Run& run, const MarketDataset& ds) {
    json e = get(run.cfg, "estimation", json::object());
    ModelClass mc = parse_model_class(get(run.cfg, "model_class", "IPDL"));
    Method method = parse_method(get(e, "method", "OLS"));
    EndogenousSet endo = get(e, "endogenous", std::string("default")) == "cost_only"
                             ? EndogenousSet::CostOnly
                             : EndogenousSet::Default;
    SolveOptions solve = solve_options(run.cfg);

    EstimateOutput out;
    for (const Segment& seg : ds.segments) {
        DesignMatrix d = build_design(ds, seg, mc, endo);
        Eigen::MatrixXd Z;
        EstimationResult r;
        if (method == Method::TSLS) {
            Z = build_instruments(d, ds);
            r = fit(d, &Z, method);
        } else {
            r = fit(d, nullptr, method);
        }
        try {
            fit_statistics(r, ds, solve);
        } catch (const Error& err) {
            run.note("fit statistics unavailable for " + seg.key() + ": " + err.what());
        }
        if (!r.rho_in_range)
            run.note("estimated rho outside [0,1) for segment " + seg.key());
        if (d.dropped_markets > 0)
            run.note(seg.key() + ": dropped " + std::to_string(d.dropped_markets) +
                     " market(s) with zero outside share");
        out.params.by_segment[seg] = r.params;
        out.std_errors[seg] = r.std_error_map();
        out.fits.push_back(std::move(r));
    }
    return out;
}

void write_fit_table(Run& run, const EstimateOutput& est, const std::string& name) {
    csv::Writer w({"segment_population", "segment_purpose", "segment_period",
                   "model_class", "method", "n_obs", "n_trips", "dropped_rows",
                   "dropped_markets", "adj_r2", "mcfadden_r2", "rho_mode", "rho_dest",
                   "rho_in_range"});
    for (const auto& r : est.fits)
        w.add_row({to_string(r.segment.population), to_string(r.segment.purpose),
                   to_string(r.segment.period), to_string(r.model_class),
                   to_string(r.method), std::to_string(r.n_obs), csv::fmt(r.n_trips),
                   std::to_string(r.dropped_rows), std::to_string(r.dropped_markets),
                   csv::fmt(r.adj_r2), csv::fmt(r.mcfadden_r2),
                   csv::fmt(r.params.rho_mode), csv::fmt(r.params.rho_dest),
                   r.rho_in_range ? "1" : "0"});
    w.write(run.path_for(name));
}

void cmd_estimate(Run& run) {
    MarketDataset ds = load_data(run.cfg);
    EstimateOutput est = run_estimation(run, ds);
    save_parameters(est.params, ds, &est.std_errors,
                    run.path_for("estimate_parameters.csv"));
    write_fit_table(run, est, "estimate_fit.csv");
}

void write_prediction(Run& run, const MarketDataset& ds, const Prediction& pred,
                      const std::string& prefix) {
    csv::Writer w({"segment_population", "segment_purpose", "segment_period",
                   "origin_zone", "mode", "dest_zone", "share", "trips"});
    for (const auto& r : pred.rows) {
        const Market& m = ds.markets[r.market];
        const Alternative& a = ds.alternatives[r.alt];
        w.add_row({to_string(m.segment.population), to_string(m.segment.purpose),
                   to_string(m.segment.period), ds.zones[m.origin].id,
                   to_string(a.mode), ds.zones[a.dest].id, csv::fmt(r.share),
                   csv::fmt(r.trips)});
    }
    w.write(run.path_for(prefix + "_volumes.csv"));

    csv::Writer s({"segment_population", "segment_purpose", "segment_period",
                   "origin_zone", "outside_share", "outside_trips"});
    for (size_t mi = 0; mi < ds.markets.size(); ++mi) {
        const Market& m = ds.markets[mi];
        s.add_row({to_string(m.segment.population), to_string(m.segment.purpose),
                   to_string(m.segment.period), ds.zones[m.origin].id,
                   csv::fmt(pred.outside_share[mi]), csv::fmt(pred.outside_trips[mi])});
    }
    s.write(run.path_for(prefix + "_markets.csv"));
}

void cmd_predict(Run& run) {
    MarketDataset ds = load_data(run.cfg);
    ParameterSet params = params_of(run.cfg, ds);
    ScenarioHolder sc = scenario_of(run.cfg, ds);
    Prediction pred = predict_volumes(ds, params, sc.scenario, solve_options(run.cfg),
                                      workers_of(run.cfg));
    if (pred.clamp_count > 0)
        run.note("scenario clamped " + std::to_string(pred.clamp_count) +
                 " attribute value(s) at zero");
    write_prediction(run, ds, pred, "predict");
}

CalibrationTargets targets_of(const json& cfg, const MarketDataset& ds) {
    CalibrationTargets t;
    json cal = get(cfg, "calibration", json::object());
    for (const auto& g : get(cal, "targets", json::array())) {
        RegionGroup rg;
        rg.name = g.at("name");
        for (const auto& z : g.at("origin_zones"))
            rg.origin_zones.insert(ds.zone(z.get<std::string>()));
        rg.observed_change_pct = g.at("observed_change_pct");
        if (g.contains("modes")) {
            rg.modes.clear();
            for (const auto& m : g.at("modes")) rg.modes.insert(parse_mode(m));
        }
        t.groups.push_back(std::move(rg));
    }
    if (t.groups.empty()) throw Error("BadConfig", "calibration.targets is empty");
    return t;
}

CalibrationResult run_calibration(Run& run, const MarketDataset& ds,
                                  ParameterSet& params) {
    CalibrationTargets targets = targets_of(run.cfg, ds);
    ScenarioHolder sc = scenario_of(run.cfg, ds);
    CalibrationOptions opt;
    json cal = get(run.cfg, "calibration", json::object());
    opt.ridge = get(cal, "ridge", opt.ridge);
    if (cal.contains("starts")) {
        opt.starts.clear();
        for (const auto& s : cal.at("starts")) opt.starts.push_back(s.get<double>());
    }
    opt.solve = solve_options(run.cfg);
    opt.workers = workers_of(run.cfg);
    CalibrationResult res = calibrate(ds, params, targets, sc.scenario, opt);
    if (res.under_determined)
        run.note("calibration is under-determined: fewer targets than free ASCs");
    if (!res.converged) run.note("calibration did not reach the convergence tolerance");
    params.set_toll_ascs(res.toll_ascs[0], res.toll_ascs[1], res.toll_ascs[2],
                         res.toll_ascs[3]);

    csv::Writer w({"parameter", "value"});
    w.add_row({"toll_asc_driving", csv::fmt(res.toll_ascs[0])});
    w.add_row({"toll_asc_fhv", csv::fmt(res.toll_ascs[1])});
    w.add_row({"toll_asc_carpool", csv::fmt(res.toll_ascs[2])});
    w.add_row({"toll_asc_crz", csv::fmt(res.toll_ascs[3])});
    w.add_row({"objective", csv::fmt(res.objective)});
    w.add_row({"iterations", std::to_string(res.iterations)});
    w.add_row({"converged", res.converged ? "1" : "0"});
    w.add_row({"under_determined", res.under_determined ? "1" : "0"});
    w.write(run.path_for("calibrate_ascs.csv"));

    csv::Writer tw({"target", "observed_change_pct", "predicted_change_pct"});
    for (size_t g = 0; g < targets.groups.size(); ++g)
        tw.add_row({targets.groups[g].name,
                    csv::fmt(targets.groups[g].observed_change_pct),
                    csv::fmt(res.predicted_changes_pct[g])});
    tw.write(run.path_for("calibrate_targets.csv"));
    return res;
}

void cmd_calibrate(Run& run) {
    MarketDataset ds = load_data(run.cfg);
    ParameterSet params = params_of(run.cfg, ds);
    run_calibration(run, ds, params);
    save_parameters(params, ds, nullptr, run.path_for("calibrate_parameters.csv"));
}

void run_welfare(Run& run, const MarketDataset& ds, const ParameterSet& params) {
    ScenarioHolder post = scenario_of(run.cfg, ds);
    Scenario pre; // identity baseline
    SolveOptions solve = solve_options(run.cfg);
    WelfareReport rep =
        welfare_report(ds, params, pre, post.scenario, solve, workers_of(run.cfg));
    int days = get(get(run.cfg, "welfare", json::object()), "annualization_days", 365);

    csv::Writer w({"segment_population", "segment_purpose", "segment_period",
                   "origin_zone", "cs_pre", "cs_post", "cv_usd_per_trip",
                   "cv_usd_per_day"});
    for (const auto& mw : rep.per_market) {
        const Market& m = ds.markets[mw.market];
        w.add_row({to_string(m.segment.population), to_string(m.segment.purpose),
                   to_string(m.segment.period), ds.zones[m.origin].id,
                   csv::fmt(mw.cs_pre), csv::fmt(mw.cs_post), csv::fmt(mw.cv_per_trip),
                   csv::fmt(mw.cv_per_day)});
    }
    w.write(run.path_for("welfare_markets.csv"));

    csv::Writer p({"population", "cv_usd_per_day", "cv_usd_per_year"});
    for (const auto& [pop, cv] : rep.cv_by_population(ds))
        p.add_row({to_string(pop), csv::fmt(cv), csv::fmt(cv * days)});
    p.write(run.path_for("welfare_population.csv"));

    csv::Writer rg({"region", "cv_usd_per_day", "cv_usd_per_year"});
    for (const auto& [tag, cv] : rep.cv_by_region(ds))
        rg.add_row({to_string(tag), csv::fmt(cv), csv::fmt(cv * days)});
    rg.write(run.path_for("welfare_region.csv"));

    csv::Writer t({"metric", "value"});
    t.add_row({"total_cv_usd_per_day", csv::fmt(rep.total_cv_per_day())});
    t.add_row({"total_cv_usd_per_year", csv::fmt(rep.total_cv_per_day() * days)});
    t.write(run.path_for("welfare_totals.csv"));

    csv::Writer v({"segment_population", "segment_purpose", "segment_period",
                   "component", "nyc", "vot_usd_per_hour"});
    const std::pair<TimeComponent, const char*> comps[] = {
        {TimeComponent::AutoTT, "auto_tt"},
        {TimeComponent::TransitIVT, "transit_ivt"},
        {TimeComponent::TransitWT, "transit_wt"},
        {TimeComponent::NonAutoTT, "nonauto_tt"}};
    for (const Segment& seg : ds.segments) {
        const SegmentParams& sp = params.require(seg);
        for (const auto& [comp, name] : comps)
            for (int nyc = 0; nyc <= 1; ++nyc)
                v.add_row({to_string(seg.population), to_string(seg.purpose),
                           to_string(seg.period), name, std::to_string(nyc),
                           csv::fmt(value_of_time(sp, comp, nyc != 0))});
    }
    v.write(run.path_for("welfare_vot.csv"));
}

void cmd_welfare(Run& run) {
    MarketDataset ds = load_data(run.cfg);
    ParameterSet params = params_of(run.cfg, ds);
    run_welfare(run, ds, params);
}

TollRateTable rates_of(const json& cfg) {
    TollRateTable t;
    json rev = get(cfg, "revenue", json::object());
    for (const auto& r : get(rev, "rates", json::array()))
        t.rates[{r.at("vehicle_class"), parse_period(r.at("period"))}] =
            r.at("rate").get<double>();
    if (t.rates.empty()) throw Error("BadConfig", "revenue.rates is empty");
    t.annualization_days = get(rev, "annualization_days", 365);
    return t;
}

void run_revenue(Run& run, const MarketDataset& ds, const ParameterSet& params) {
    ScenarioHolder post = scenario_of(run.cfg, ds);
    Prediction pred = predict_volumes(ds, params, post.scenario, solve_options(run.cfg),
                                      workers_of(run.cfg));
    RevenueTable table = toll_revenue(ds, pred, post.scenario, rates_of(run.cfg));

    csv::Writer w({"population", "vehicle_class", "period", "trips_per_day",
                   "rate_usd", "annual_usd"});
    for (const auto& c : table.cells)
        w.add_row({to_string(c.population), c.vehicle_class, to_string(c.period),
                   csv::fmt(c.trips_per_day), csv::fmt(c.rate),
                   csv::fmt(c.annual_usd)});
    w.write(run.path_for("revenue_cells.csv"));

    csv::Writer t({"population", "annual_usd"});
    for (const auto& [pop, usd] : table.total_by_population)
        t.add_row({to_string(pop), csv::fmt(usd)});
    t.add_row({"Total", csv::fmt(table.grand_total_usd)});
    t.write(run.path_for("revenue_totals.csv"));
}

void cmd_revenue(Run& run) {
    MarketDataset ds = load_data(run.cfg);
    ParameterSet params = params_of(run.cfg, ds);
    run_revenue(run, ds, params);
}

void run_compensation(Run& run, const MarketDataset& ds, const ParameterSet& params) {
    json c = get(run.cfg, "compensation", json::object());
    ScenarioHolder toll = scenario_of(run.cfg, ds);

    CompensationScope scope;
    std::set<int> scoped = scope_markets_of(c, ds);
    if (scoped.empty())
        for (size_t i = 0; i < ds.markets.size(); ++i) scope.markets.insert((int)i);
    else
        scope.markets = scoped;

    CompensatorOptions opt;
    opt.toll_scenario = toll.scenario;
    opt.solve = solve_options(run.cfg);
    opt.workers = workers_of(run.cfg);
    opt.tol_usd_per_day = get(c, "tol_usd_per_day", opt.tol_usd_per_day);
    opt.eps_usd_per_day = get(c, "eps_usd_per_day", opt.eps_usd_per_day);
    opt.kh_fare_single = get(c, "kh_fare_single", opt.kh_fare_single);
    opt.subsidy_fixed_demand = get(c, "subsidy_fixed_demand", opt.subsidy_fixed_demand);
    opt.annualization_days = get(c, "annualization_days", opt.annualization_days);

    std::string criterion = get(c, "criterion", "kaldor_hicks");
    csv::Writer w({"wait_reduction_min", "population", "discount_usd_per_trip",
                   "subsidy_musd_per_year", "worst_residual_group",
                   "worst_residual_cv_usd_per_day", "aggregate_cv_usd_per_day",
                   "converged"});

    auto emit = [&](const CompensationResult& r) {
        std::string worst_name = "none";
        double worst_cv = 0;
        for (const auto& [key, cv] : r.residual_cv)
            if (worst_name == "none" || cv < worst_cv) {
                worst_name = to_string(key.first) + "/" + ds.zones[key.second].id;
                worst_cv = cv;
            }
        if (r.fare_discount.empty()) {
            w.add_row({csv::fmt(r.wait_reduction_min), "All", csv::fmt(0),
                       csv::fmt(0), worst_name, csv::fmt(worst_cv),
                       csv::fmt(r.aggregate_cv_usd_per_day), r.converged ? "1" : "0"});
        } else {
            for (const auto& [pop, disc] : r.fare_discount)
                w.add_row({csv::fmt(r.wait_reduction_min), to_string(pop),
                           csv::fmt(disc), csv::fmt(r.annual_subsidy_usd / 1e6),
                           worst_name, csv::fmt(worst_cv),
                           csv::fmt(r.aggregate_cv_usd_per_day),
                           r.converged ? "1" : "0"});
        }
    };

    if (criterion == "kaldor_hicks") {
        LeverKind lever =
            get(c, "lever", std::string("wait")) == "fare" ? LeverKind::Fare
                                                           : LeverKind::Wait;
        emit(solve_kaldor_hicks(ds, params, scope, lever, opt));
    } else if (criterion == "pareto") {
        std::vector<double> levels;
        for (const auto& l : get(c, "wait_levels", json::array({0.0})))
            levels.push_back(l.get<double>());
        for (const auto& r : solve_pareto(ds, params, scope, levels, opt)) emit(r);
    } else {
        throw Error("BadConfig", "compensation.criterion must be kaldor_hicks or pareto");
    }
    w.write(run.path_for("compensate_schedule.csv"));
}

void cmd_compensate(Run& run) {
    MarketDataset ds = load_data(run.cfg);
    ParameterSet params = params_of(run.cfg, ds);
    run_compensation(run, ds, params);
}

void cmd_pipeline(Run& run) {
    MarketDataset ds = load_data(run.cfg);
    EstimateOutput est = run_estimation(run, ds);
    save_parameters(est.params, ds, &est.std_errors,
                    run.path_for("estimate_parameters.csv"));
    write_fit_table(run, est, "estimate_fit.csv");
    run_calibration(run, ds, est.params);
    save_parameters(est.params, ds, nullptr, run.path_for("calibrate_parameters.csv"));
    run_welfare(run, ds, est.params);
    run_compensation(run, ds, est.params);
    if (run.cfg.contains("revenue")) run_revenue(run, ds, est.params);
}

// ---- driver -------------------------------------------------------------

void apply_override(json& cfg, const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
        throw Error("BadConfig", "--set expects key=value, got: " + kv);
    std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    json* node = &cfg;
    size_t pos = 0;
    while (true) {
        size_t dot = key.find('.', pos);
        std::string part = key.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (dot == std::string::npos) {
            json parsed = json::parse(val, nullptr, false);
            (*node)[part] = parsed.is_discarded() ? json(val) : parsed;
            break;
        }
        node = &(*node)[part];
        pos = dot + 1;
    }
}

int dispatch(const std::string& command, Run& run) {
    if (command == "validate") cmd_validate(run);
    else if (command == "synth") cmd_synth(run);
    else if (command == "estimate") cmd_estimate(run);
    else if (command == "predict") cmd_predict(run);
    else if (command == "calibrate") cmd_calibrate(run);
    else if (command == "welfare") cmd_welfare(run);
    else if (command == "compensate") cmd_compensate(run);
    else if (command == "revenue") cmd_revenue(run);
    else if (command == "pipeline") cmd_pipeline(run);
    else throw Error("BadConfig", "unknown command: " + command);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"market-level mode-destination choice pipeline"};
    std::string command, config_path;
    std::vector<std::string> overrides;
    app.add_option("command", command,
                   "validate|synth|estimate|predict|calibrate|welfare|compensate|"
                   "revenue|pipeline")
        ->required();
    app.add_option("-c,--config", config_path, "JSON config file")->required();
    app.add_option("--set", overrides, "override config keys (dotted path, key=value)");
    CLI11_PARSE(app, argc, argv);

    Run run;
    std::string started = iso_now();
    auto t0 = std::chrono::steady_clock::now();
    try {
        std::ifstream f(config_path);
        if (!f) throw Error("BadConfig", "cannot open config: " + config_path);
        try {
            run.cfg = json::parse(f);
        } catch (const json::exception& e) {
            throw Error("BadConfig", std::string("config parse failure: ") + e.what());
        }
        for (const auto& kv : overrides) apply_override(run.cfg, kv);

        run.out_dir = run.cfg.value("output_dir", std::string("out"));
        fs::create_directories(run.out_dir);
        dispatch(command, run);

        char buf[32];
        std::snprintf(buf, sizeof buf, "%016llx",
                      (unsigned long long)fnv1a(run.cfg.dump()));
        json manifest = {
            {"command", command},
            {"config_hash", std::string(buf)},
            {"started", started},
            {"finished", iso_now()},
            {"wall_ms", std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - t0)
                            .count()},
            {"workers", workers_of(run.cfg)},
            {"artifacts", run.artifacts},
            {"warnings", run.warnings},
        };
        std::ofstream mf(run.out_dir / "run_manifest.json");
        mf << manifest.dump(2) << "\n";
        for (const auto& w : run.warnings) std::cerr << "warning: " << w << "\n";
        std::cout << command << ": ok (" << run.artifacts.size() << " artifact(s) in "
                  << run.out_dir.string() << ")\n";
        return 0;
    } catch (const std::exception& e) {
        int code = 1;
        std::string err_code = "Error";
        if (auto* de = dynamic_cast<const DataError*>(&e)) {
            code = 2;
            err_code = de->code();
        } else if (auto* ne = dynamic_cast<const NumericalError*>(&e)) {
            code = 3;
            err_code = ne->code();
        } else if (auto* ie = dynamic_cast<const Error*>(&e)) {
            err_code = ie->code();
        }
        json rec = {{"error", err_code}, {"message", e.what()}, {"command", command}};
        std::cerr << rec.dump() << "\n";
        return code;
    }
}
