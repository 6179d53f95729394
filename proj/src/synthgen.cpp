#include "ipdl/synthgen.hpp"

#include <cmath>
#include <random>

#include "ipdl/errors.hpp"

namespace ipdl {

namespace {

double draw(std::mt19937_64& rng, const Range& r) {
    return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

void check_range(const Range& r, const char* name) {
    if (r.lo < 0 || r.hi < r.lo)
        throw Error("BadInput", std::string("invalid range for ") + name);
}

// in-vehicle time per unit of latent distance
double speed_factor(Mode m) {
    switch (m) {
    case Mode::Driving: return 1.0;
    case Mode::Carpool: return 1.05;
    case Mode::FHV: return 0.95;
    case Mode::Transit: return 1.4;
    case Mode::Biking: return 1.8;
    case Mode::Walking: return 3.0;
    }
    return 1.0;
}

} // namespace

ParameterSet default_truth(const std::vector<Segment>& segments, int n_zones) {
    ParameterSet ps;
    int k = 0;
    for (const Segment& s : segments) {
        SegmentParams p;
        p.auto_tt = -0.045 - 0.005 * k;
        p.at = -0.04;
        p.et = -0.035;
        p.wt = -0.06;
        p.ivt = -0.03;
        p.trans = -0.2;
        p.nonauto_tt = -0.07;
        p.cost = -0.15 - 0.02 * k;
        p.auto_tt_nyc = -0.012;
        p.at_nyc = -0.02;
        p.et_nyc = -0.015;
        p.wt_nyc = -0.018;
        p.ivt_nyc = -0.011;
        p.nonauto_tt_nyc = -0.014;
        p.cost_nyc = -0.03;
        p.asc_driving = 0.4;
        p.asc_transit = 0.2;
        p.asc_fhv = -0.3;
        p.asc_biking = -0.8;
        p.asc_walking = -0.6;
        p.dest_asc.assign(n_zones, 0.0);
        for (int z = 0; z < n_zones; ++z) p.dest_asc[z] = 0.15 * (z % 3) - 0.1;
        p.rho_mode = 0.3;
        p.rho_dest = 0.2;
        ps.by_segment[s] = p;
        ++k;
    }
    return ps;
}

GenerationResult generate(const GenerationSpec& spec) {
    if (spec.n_origin_zones < 1 || spec.n_dest_zones < 1)
        throw Error("BadInput", "need at least one origin and one destination zone");
    if (spec.total_trips <= 0) throw Error("BadInput", "total_trips must be > 0");
    check_range(spec.dist, "dist");
    check_range(spec.access, "access");
    check_range(spec.egress, "egress");
    check_range(spec.wait, "wait");
    check_range(spec.fare, "fare");
    if (spec.noise_sd < 0 || spec.xi_sd < 0)
        throw Error("BadInput", "noise scales must be >= 0");

    std::vector<Segment> segments = spec.segments;
    if (segments.empty()) {
        segments.push_back({Population::NotLowIncome, Purpose::Commute, Period::Peak});
        segments.push_back({Population::LowIncome, Purpose::Commute, Period::Peak});
    }

    GenerationResult out;
    MarketDataset& ds = out.dataset;

    // zones: origins first, then destinations; first destination is the CRZ
    for (int i = 0; i < spec.n_origin_zones; ++i) {
        Zone z;
        z.id = "O" + std::to_string(i + 1);
        z.is_nyc = (i % 2 == 0);
        z.region = z.is_nyc ? RegionTag::NYC_Other : RegionTag::NYS_Other;
        ds.zone_index[z.id] = (int)ds.zones.size();
        ds.zones.push_back(z);
    }
    std::vector<int> dest_zone_idx;
    for (int i = 0; i < spec.n_dest_zones; ++i) {
        Zone z;
        z.id = "D" + std::to_string(i + 1);
        if (i == 0) {
            z.is_crz = true;
            z.is_nyc = true;
            z.region = RegionTag::CRZ;
        } else {
            z.is_nyc = (i % 2 == 1);
            z.region = z.is_nyc ? RegionTag::NYC_Other : RegionTag::NYS_Other;
        }
        dest_zone_idx.push_back((int)ds.zones.size());
        ds.zone_index[z.id] = (int)ds.zones.size();
        ds.zones.push_back(z);
    }

    constexpr Mode kModes[] = {Mode::Driving, Mode::Transit, Mode::FHV,
                               Mode::Biking,  Mode::Walking, Mode::Carpool};
    for (int d : dest_zone_idx)
        for (Mode m : kModes) {
            ds.alt_index[{(int)m, d}] = (int)ds.alternatives.size();
            ds.alternatives.push_back({m, d});
        }
    ds.nesting = build_nesting(ds.alternatives, (int)ds.zones.size());

    out.truth = spec.truth.by_segment.empty()
                    ? default_truth(segments, (int)ds.zones.size())
                    : spec.truth;
    for (const Segment& s : segments) {
        const SegmentParams& p = out.truth.require(s);
        if (!p.rho_valid())
            throw Error("InvalidRho", "ground-truth rho outside [0,1) or sum >= 1");
    }
    ds.segments = segments;

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // latent distances with shared origin/destination components so travel
    // times correlate across alternatives in the same nest
    double half_lo = spec.dist.lo / 2, half_hi = spec.dist.hi / 2;
    std::vector<double> orig_comp(spec.n_origin_zones), dest_comp(spec.n_dest_zones);
    for (auto& v : orig_comp) v = draw(rng, {half_lo, half_hi});
    for (auto& v : dest_comp) v = draw(rng, {half_lo, half_hi});

    for (const Segment& seg : segments) {
        const SegmentParams& p = out.truth.require(seg);
        for (int o = 0; o < spec.n_origin_zones; ++o) {
            Market m;
            m.segment = seg;
            m.origin = o;
            m.total_trips = spec.total_trips;

            std::vector<int> alts;
            std::vector<double> xi_of;
            bool origin_nyc = ds.zones[o].is_nyc;
            std::uniform_int_distribution<int> transfers_dist(0, 2);
            for (int di = 0; di < spec.n_dest_zones; ++di) {
                int dz = dest_zone_idx[di];
                double d = orig_comp[o] + dest_comp[di] +
                           draw(rng, {0, (spec.dist.hi - spec.dist.lo) / 10});
                for (Mode mode : kModes) {
                    AlternativeAttributes a;
                    double jitter = 1.0 + draw(rng, {-0.3, 0.3});
                    double tt = d * speed_factor(mode) * jitter;
                    double xi = 0;
                    if (spec.endogeneity_strength != 0) xi = spec.xi_sd * gauss(rng);

                    if (mode == Mode::Transit) {
                        a.ivt = tt;
                        a.access = draw(rng, spec.access);
                        a.egress = draw(rng, spec.egress);
                        a.wait = draw(rng, spec.wait);
                        a.transfers = (double)transfers_dist(rng);
                        a.cost = draw(rng, spec.fare);
                    } else {
                        a.tt = tt;
                    }
                    a.toll_flag = is_auto_mode(mode) ? 1 : 0;
                    a.crz_dest_flag = ds.zones[dz].is_crz ? 1 : 0;

                    MarketCell cell;
                    cell.alt = ds.alternative(mode, dz);
                    cell.attrs = a;
                    m.cells.push_back(cell);
                    alts.push_back(cell.alt);
                    xi_of.push_back(xi);
                }
            }

            // Auto costs carry a congestion component driven by the *other*
            // auto alternatives' times to the same destination, so the
            // group-mean time instruments have first-stage power beyond the
            // alternative's own travel time. The disturbance xi enters both
            // the cost and the utility when endogeneity is on.
            for (int di = 0; di < spec.n_dest_zones; ++di) {
                double auto_tt_sum = 0;
                int auto_n = 0;
                for (int k = 0; k < kNumModes; ++k) {
                    const auto& a = m.cells[di * kNumModes + k].attrs;
                    if (a.toll_flag == 1) {
                        auto_tt_sum += a.tt;
                        ++auto_n;
                    }
                }
                for (int k = 0; k < kNumModes; ++k) {
                    MarketCell& cell = m.cells[di * kNumModes + k];
                    AlternativeAttributes& a = cell.attrs;
                    Mode mode = ds.alternatives[cell.alt].mode;
                    double xi = xi_of[di * kNumModes + k];
                    double leave_out =
                        auto_n > 1 ? (auto_tt_sum - a.tt) / (auto_n - 1) : 0.0;
                    if (mode == Mode::Driving)
                        a.cost = std::max(0.0, 0.5 + 0.3 * spec.auto_cost_per_min * a.tt +
                                                   2.0 * spec.auto_cost_per_min * leave_out +
                                                   spec.endogeneity_strength * xi);
                    else if (mode == Mode::FHV)
                        a.cost = std::max(0.0, spec.fhv_base +
                                                   0.3 * spec.fhv_cost_per_min * a.tt +
                                                   1.5 * spec.fhv_cost_per_min * leave_out +
                                                   spec.endogeneity_strength * xi);
                    // carpool / biking / walking: no out-of-pocket cost
                }
            }

            std::vector<double> V;
            for (size_t c = 0; c < m.cells.size(); ++c) {
                const MarketCell& cell = m.cells[c];
                V.push_back(systematic_utility(p, origin_nyc,
                                               ds.alternatives[cell.alt].mode,
                                               ds.alternatives[cell.alt].dest,
                                               cell.attrs) +
                            xi_of[c]);
            }

            ChoiceSet cs = make_choice_set(ds.nesting, alts);
            ShareResult sr = solve_shares(cs, V, p.rho_mode, p.rho_dest, spec.solve);

            std::vector<double> share = sr.inside;
            if (spec.noise_sd > 0) {
                // perturb log-odds vs the outside option, then renormalize
                std::vector<double> y(share.size());
                double denom = 1.0;
                for (size_t i = 0; i < share.size(); ++i) {
                    y[i] = std::log(share[i] / sr.outside) + spec.noise_sd * gauss(rng);
                    denom += std::exp(y[i]);
                }
                for (size_t i = 0; i < share.size(); ++i)
                    share[i] = std::exp(y[i]) / denom;
            }

            double inside_total = 0;
            for (size_t i = 0; i < m.cells.size(); ++i) {
                double t = share[i] * spec.total_trips;
                if (spec.round_trips) t = std::round(t);
                m.cells[i].trips = t;
                inside_total += t;
            }
            m.outside_trips = spec.total_trips - inside_total;
            if (m.outside_trips <= 0)
                throw Error("InconsistentTotals",
                            "generated outside share is non-positive; lower utilities "
                            "or raise total_trips");

            ds.market_index[{seg.key(), ds.zones[o].id}] = (int)ds.markets.size();
            ds.markets.push_back(std::move(m));
        }
    }
    return out;
}

} // namespace ipdl
