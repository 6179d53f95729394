#include "ipdl/estimator.hpp"

#include <cmath>
#include <set>

#include "ipdl/errors.hpp"

namespace ipdl {

std::string to_string(ModelClass m) {
    switch (m) {
    case ModelClass::MNL: return "MNL";
    case ModelClass::NL_mode: return "NL_mode";
    case ModelClass::NL_dest: return "NL_dest";
    case ModelClass::IPDL: return "IPDL";
    }
    return "?";
}

std::string to_string(Method m) { return m == Method::OLS ? "OLS" : "TSLS"; }

ModelClass parse_model_class(const std::string& s) {
    if (s == "MNL") return ModelClass::MNL;
    if (s == "NL_mode") return ModelClass::NL_mode;
    if (s == "NL_dest") return ModelClass::NL_dest;
    if (s == "IPDL") return ModelClass::IPDL;
    throw Error("UnknownEnum", "model_class '" + s + "'");
}

Method parse_method(const std::string& s) {
    if (s == "OLS") return Method::OLS;
    if (s == "TSLS" || s == "2SLS") return Method::TSLS;
    throw Error("UnknownEnum", "method '" + s + "'");
}

namespace {

std::vector<int> dest_zones_sorted(const MarketDataset& ds) {
    std::set<int> dests;
    for (const auto& a : ds.alternatives) dests.insert(a.dest);
    return {dests.begin(), dests.end()};
}

// Attribute regressor values in the fixed pre-nesting column order.
void fill_attr_columns(const MarketDataset& ds, const Market& m, const MarketCell& c,
                       double* row /* length 20 + n_dest */, const std::vector<int>& dests) {
    const Alternative& alt = ds.alternatives[c.alt];
    const AlternativeAttributes& a = c.attrs;
    double nyc = ds.zones[m.origin].is_nyc ? 1.0 : 0.0;
    double auto_tt = is_auto_mode(alt.mode) ? a.tt : 0.0;
    double nonauto_tt = is_nonauto_mode(alt.mode) ? a.tt : 0.0;
    bool tr = alt.mode == Mode::Transit;
    // carpool has no cost term; bike/walk have none either
    double cost = (alt.mode == Mode::Driving || alt.mode == Mode::Transit ||
                   alt.mode == Mode::FHV)
                      ? a.cost
                      : 0.0;
    int k = 0;
    row[k++] = auto_tt;
    row[k++] = auto_tt * nyc;
    row[k++] = tr ? a.access : 0.0;
    row[k++] = tr ? a.access * nyc : 0.0;
    row[k++] = tr ? a.egress : 0.0;
    row[k++] = tr ? a.egress * nyc : 0.0;
    row[k++] = tr ? a.wait : 0.0;
    row[k++] = tr ? a.wait * nyc : 0.0;
    row[k++] = tr ? a.ivt : 0.0;
    row[k++] = tr ? a.ivt * nyc : 0.0;
    row[k++] = tr ? a.transfers : 0.0;
    row[k++] = nonauto_tt;
    row[k++] = nonauto_tt * nyc;
    row[k++] = cost;
    row[k++] = cost * nyc;
    row[k++] = alt.mode == Mode::Driving ? 1.0 : 0.0;
    row[k++] = alt.mode == Mode::Transit ? 1.0 : 0.0;
    row[k++] = alt.mode == Mode::FHV ? 1.0 : 0.0;
    row[k++] = alt.mode == Mode::Biking ? 1.0 : 0.0;
    row[k++] = alt.mode == Mode::Walking ? 1.0 : 0.0;
    for (int d : dests) row[k++] = alt.dest == d ? 1.0 : 0.0;
}

const char* kAttrColNames[20] = {
    "auto_tt", "auto_tt_nyc", "at", "at_nyc", "et", "et_nyc", "wt", "wt_nyc", "ivt",
    "ivt_nyc", "trans", "nonauto_tt", "nonauto_tt_nyc", "cost", "cost_nyc", "asc_driving",
    "asc_transit", "asc_fhv", "asc_biking", "asc_walking"};

} // namespace

DesignMatrix build_design(const MarketDataset& ds, const Segment& segment,
                          ModelClass model_class, EndogenousSet endo) {
    DesignMatrix d;
    d.segment = segment;
    d.model_class = model_class;

    auto dests = dest_zones_sorted(ds);
    const int n_attr = 20 + (int)dests.size();
    bool with_mode = model_class == ModelClass::IPDL || model_class == ModelClass::NL_mode;
    bool with_dest = model_class == ModelClass::IPDL || model_class == ModelClass::NL_dest;
    const int n_cols = n_attr + (with_mode ? 1 : 0) + (with_dest ? 1 : 0);

    for (int k = 0; k < 20; ++k) d.col_names.push_back(kAttrColNames[k]);
    d.dest_zone_of_col.assign(20, -1);
    for (int z : dests) {
        d.col_names.push_back("dest_asc:" + ds.zones[z].id);
        d.dest_zone_of_col.push_back(z);
    }
    if (with_mode) {
        d.nest_mode_col = (int)d.col_names.size();
        d.col_names.push_back("rho_mode");
        d.dest_zone_of_col.push_back(-1);
    }
    if (with_dest) {
        d.nest_dest_col = (int)d.col_names.size();
        d.col_names.push_back("rho_dest");
        d.dest_zone_of_col.push_back(-1);
    }

    d.endogenous.assign(n_cols, false);
    d.endogenous[13] = d.endogenous[14] = true; // cost, cost_nyc
    if (endo == EndogenousSet::Default) {
        if (d.nest_mode_col >= 0) d.endogenous[d.nest_mode_col] = true;
        if (d.nest_dest_col >= 0) d.endogenous[d.nest_dest_col] = true;
    }

    // First pass: count usable rows.
    std::vector<std::pair<int, int>> rows;
    for (size_t mi = 0; mi < ds.markets.size(); ++mi) {
        const Market& m = ds.markets[mi];
        if (m.segment != segment) continue;
        if (m.outside_trips <= 0) {
            ++d.dropped_markets;
            continue;
        }
        d.n_trips += m.total_trips;
        for (size_t ci = 0; ci < m.cells.size(); ++ci) {
            if (m.cells[ci].trips > 0)
                rows.emplace_back((int)mi, (int)ci);
            else
                ++d.dropped_rows;
        }
    }

    d.X.resize((Eigen::Index)rows.size(), n_cols);
    d.y.resize((Eigen::Index)rows.size());
    d.row_ids = rows;

    std::vector<double> buf(n_attr);
    int last_market = -1;
    std::vector<double> gm, gd; // trip sums per global nesting group
    for (size_t r = 0; r < rows.size(); ++r) {
        auto [mi, ci] = rows[r];
        const Market& m = ds.markets[mi];
        const MarketCell& c = m.cells[ci];
        if (mi != last_market) {
            gm.assign(ds.nesting.n_mode_groups, 0.0);
            gd.assign(ds.nesting.n_dest_groups, 0.0);
            for (const auto& cc : m.cells) {
                gm[ds.nesting.mode_group[cc.alt]] += cc.trips;
                gd[ds.nesting.dest_group[cc.alt]] += cc.trips;
            }
            last_market = mi;
        }
        d.y(r) = std::log(c.trips / m.outside_trips);
        fill_attr_columns(ds, m, c, buf.data(), dests);
        for (int k = 0; k < n_attr; ++k) d.X(r, k) = buf[k];
        if (with_mode)
            d.X(r, d.nest_mode_col) = std::log(c.trips / gm[ds.nesting.mode_group[c.alt]]);
        if (with_dest)
            d.X(r, d.nest_dest_col) = std::log(c.trips / gd[ds.nesting.dest_group[c.alt]]);
    }
    return d;
}

Eigen::MatrixXd build_instruments(const DesignMatrix& design, const MarketDataset& ds) {
    // family value per cell: auto tt / transit ivt / non-auto tt, zero off-family
    auto family_value = [&](const MarketCell& c, int fam) -> double {
        Mode mode = ds.alternatives[c.alt].mode;
        switch (fam) {
        case 0: return is_auto_mode(mode) ? c.attrs.tt : 0.0;
        case 1: return mode == Mode::Transit ? c.attrs.ivt : 0.0;
        default: return is_nonauto_mode(mode) ? c.attrs.tt : 0.0;
        }
    };

    Eigen::MatrixXd Z(design.X.rows(), 12);
    int last_market = -1;
    // per family x dimension: group count and sum
    std::vector<std::vector<double>> sum_m(3), sum_d(3);
    std::vector<double> cnt_m, cnt_d;
    for (Eigen::Index r = 0; r < design.X.rows(); ++r) {
        auto [mi, ci] = design.row_ids[r];
        const Market& m = ds.markets[mi];
        if (mi != last_market) {
            cnt_m.assign(ds.nesting.n_mode_groups, 0.0);
            cnt_d.assign(ds.nesting.n_dest_groups, 0.0);
            for (int f = 0; f < 3; ++f) {
                sum_m[f].assign(ds.nesting.n_mode_groups, 0.0);
                sum_d[f].assign(ds.nesting.n_dest_groups, 0.0);
            }
            for (const auto& cc : m.cells) {
                int gm = ds.nesting.mode_group[cc.alt];
                int gd = ds.nesting.dest_group[cc.alt];
                cnt_m[gm] += 1;
                cnt_d[gd] += 1;
                for (int f = 0; f < 3; ++f) {
                    double v = family_value(cc, f);
                    sum_m[f][gm] += v;
                    sum_d[f][gd] += v;
                }
            }
            last_market = mi;
        }
        const MarketCell& c = m.cells[ci];
        Mode mode = ds.alternatives[c.alt].mode;
        int gm = ds.nesting.mode_group[c.alt];
        int gd = ds.nesting.dest_group[c.alt];
        for (int f = 0; f < 3; ++f) {
            // the column is zero off-family so each family's leave-out mean
            // only moves the rows whose own attributes it can shift
            bool in_family = (f == 0 && is_auto_mode(mode)) ||
                             (f == 1 && mode == Mode::Transit) ||
                             (f == 2 && is_nonauto_mode(mode));
            double own = family_value(c, f);
            double zm = 0.0, zd = 0.0;
            if (in_family) {
                zm = cnt_m[gm] > 1 ? (sum_m[f][gm] - own) / (cnt_m[gm] - 1) : 0.0;
                zd = cnt_d[gd] > 1 ? (sum_d[f][gd] - own) / (cnt_d[gd] - 1) : 0.0;
            }
            Z(r, f * 2) = zm;
            Z(r, f * 2 + 1) = zd;
            // NYC-origin interactions, mirroring the NYC-interacted attribute
            // columns they instrument
            double nyc = ds.zones[m.origin].is_nyc ? 1.0 : 0.0;
            Z(r, 6 + f * 2) = zm * nyc;
            Z(r, 6 + f * 2 + 1) = zd * nyc;
        }
    }
    return Z;
}

namespace {

void unpack_params(const DesignMatrix& d, const Eigen::VectorXd& beta, SegmentParams& p,
                   int n_zones) {
    p.auto_tt = beta(0);
    p.auto_tt_nyc = beta(1);
    p.at = beta(2);
    p.at_nyc = beta(3);
    p.et = beta(4);
    p.et_nyc = beta(5);
    p.wt = beta(6);
    p.wt_nyc = beta(7);
    p.ivt = beta(8);
    p.ivt_nyc = beta(9);
    p.trans = beta(10);
    p.nonauto_tt = beta(11);
    p.nonauto_tt_nyc = beta(12);
    p.cost = beta(13);
    p.cost_nyc = beta(14);
    p.asc_driving = beta(15);
    p.asc_transit = beta(16);
    p.asc_fhv = beta(17);
    p.asc_biking = beta(18);
    p.asc_walking = beta(19);
    p.dest_asc.assign(n_zones, 0.0);
    for (size_t k = 20; k < d.col_names.size(); ++k)
        if (d.dest_zone_of_col[k] >= 0) p.dest_asc[d.dest_zone_of_col[k]] = beta((int)k);
    p.rho_mode = d.nest_mode_col >= 0 ? beta(d.nest_mode_col) : 0.0;
    p.rho_dest = d.nest_dest_col >= 0 ? beta(d.nest_dest_col) : 0.0;
}

[[noreturn]] void rank_deficient(const DesignMatrix& d, const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr) {
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = qr.rank(); i < perm.size(); ++i) {
        if (!cols.empty()) cols += ", ";
        cols += d.col_names[perm(i)];
    }
    throw Error("RankDeficient", "collinear columns: " + cols);
}

} // namespace

EstimationResult fit(const DesignMatrix& d, const Eigen::MatrixXd* instruments,
                     Method method) {
    const int n = (int)d.X.rows();
    const int k = (int)d.X.cols();
    if (n < k) throw Error("UnderIdentified", "fewer rows than columns");

    std::vector<int> endo_cols, exog_cols;
    for (int c = 0; c < k; ++c) (d.endogenous[c] ? endo_cols : exog_cols).push_back(c);

    Eigen::MatrixXd Xs = d.X; // second-stage regressor matrix
    if (method == Method::TSLS) {
        if (!instruments) throw Error("UnderIdentified", "TSLS requires instruments");
        if (instruments->cols() < (Eigen::Index)endo_cols.size())
            throw Error("UnderIdentified",
                        "instrument count " + std::to_string(instruments->cols()) +
                            " < endogenous column count " + std::to_string(endo_cols.size()));
        Eigen::MatrixXd Z(n, (Eigen::Index)exog_cols.size() + instruments->cols());
        for (size_t i = 0; i < exog_cols.size(); ++i) Z.col(i) = d.X.col(exog_cols[i]);
        Z.rightCols(instruments->cols()) = *instruments;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> zqr(Z);
        for (int c : endo_cols) Xs.col(c) = Z * zqr.solve(d.X.col(c));
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xs);
    qr.setThreshold(1e-10);
    if (qr.rank() < k) rank_deficient(d, qr);
    Eigen::VectorXd beta = qr.solve(d.y);

    EstimationResult res;
    res.segment = d.segment;
    res.model_class = d.model_class;
    res.method = method;
    res.names = d.col_names;
    res.estimates = beta;
    res.n_obs = n;
    res.n_trips = d.n_trips;
    res.dropped_rows = d.dropped_rows;
    res.dropped_markets = d.dropped_markets;

    // residuals against the original regressors
    Eigen::VectorXd resid = d.y - d.X * beta;
    res.ssr = resid.squaredNorm();
    double ymean = d.y.mean();
    res.sst = (d.y.array() - ymean).square().sum();
    double sigma2 = n > k ? res.ssr / (n - k) : 0.0;
    Eigen::MatrixXd xtx_inv =
        (Xs.transpose() * Xs).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    res.std_errors.resize(k);
    for (int c = 0; c < k; ++c)
        res.std_errors(c) = std::sqrt(std::max(0.0, sigma2 * xtx_inv(c, c)));

    double r2 = res.sst > 0 ? 1.0 - res.ssr / res.sst : 1.0;
    res.adj_r2 = n > k ? 1.0 - (1.0 - r2) * (n - 1) / (double)(n - k) : r2;

    // rho estimates are reported as-is; validity is a flag
    SegmentParams p;
    // number of zones: recover from the widest dest column index
    int n_zones = 0;
    for (int z : d.dest_zone_of_col) n_zones = std::max(n_zones, z + 1);
    unpack_params(d, beta, p, n_zones);
    res.params = p;
    res.rho_in_range = p.rho_valid();
    return res;
}

std::map<std::string, double> EstimationResult::std_error_map() const {
    std::map<std::string, double> out;
    for (size_t i = 0; i < names.size(); ++i) out[names[i]] = std_errors((Eigen::Index)i);
    return out;
}

std::pair<double, double> fit_statistics(EstimationResult& result, const MarketDataset& ds,
                                         const SolveOptions& opt) {
    if (!result.rho_in_range)
        throw Error("InvalidRho", "fitted rho outside [0,1); McFadden R2 not computable");
    const SegmentParams& p = result.params;
    double ll = 0, ll0 = 0;
    for (size_t mi = 0; mi < ds.markets.size(); ++mi) {
        const Market& m = ds.markets[mi];
        if (m.segment != result.segment) continue;
        std::vector<int> alts(m.cells.size());
        std::vector<double> V(m.cells.size());
        for (size_t c = 0; c < m.cells.size(); ++c) {
            alts[c] = m.cells[c].alt;
            V[c] = systematic_utility(p, ds.zones[m.origin].is_nyc,
                                      ds.alternatives[m.cells[c].alt].mode,
                                      ds.alternatives[m.cells[c].alt].dest, m.cells[c].attrs);
        }
        ChoiceSet cs = make_choice_set(ds.nesting, alts);
        ShareResult sr = solve_shares(cs, V, p.rho_mode, p.rho_dest, opt);
        double uniform = 1.0 / (double)(m.cells.size() + 1);
        for (size_t c = 0; c < m.cells.size(); ++c)
            if (m.cells[c].trips > 0) {
                ll += m.cells[c].trips * std::log(sr.inside[c]);
                ll0 += m.cells[c].trips * std::log(uniform);
            }
        if (m.outside_trips > 0) {
            ll += m.outside_trips * std::log(sr.outside);
            ll0 += m.outside_trips * std::log(uniform);
        }
    }
    result.mcfadden_r2 = ll0 != 0 ? 1.0 - ll / ll0 : 0.0;
    return {result.adj_r2, result.mcfadden_r2};
}

} // namespace ipdl
