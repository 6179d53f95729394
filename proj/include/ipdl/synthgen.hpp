#ifndef IPDL_SYNTHGEN_HPP
#define IPDL_SYNTHGEN_HPP

#include <cstdint>
#include <vector>

#include "ipdl/params.hpp"
#include "ipdl/predictor.hpp"

namespace ipdl {

struct Range {
    double lo = 0, hi = 1;
};

// Recipe for a desk-scale synthetic dataset with known taste parameters.
// Travel times share a latent origin-destination distance so that times
// within a nest are correlated (instrument relevance); endogeneity_strength
// mixes a per-cell disturbance into both utility and auto costs.
struct GenerationSpec {
    std::uint64_t seed = 1;
    int n_origin_zones = 5;
    int n_dest_zones = 4;
    std::vector<Segment> segments;  // empty -> two default segments
    ParameterSet truth;             // empty -> default_truth()
    double total_trips = 1e6;       // per market

    Range dist{5, 35};              // latent distance, minutes at driving speed
    Range access{2, 10}, egress{2, 10}, wait{2, 15};
    Range fare{2.5, 3.5};
    double auto_cost_per_min = 0.3;
    double fhv_base = 2.5, fhv_cost_per_min = 0.5;

    double noise_sd = 0;            // Gaussian noise on log-odds
    double endogeneity_strength = 0;
    double xi_sd = 0.5;             // disturbance scale when endogeneity on
    bool round_trips = true;
    SolveOptions solve;
};

struct GenerationResult {
    MarketDataset dataset;
    ParameterSet truth;
};

// Plausible ground-truth parameters for the given segments; n_zones sizes
// the destination ASC vector.
ParameterSet default_truth(const std::vector<Segment>& segments, int n_zones);

GenerationResult generate(const GenerationSpec& spec);

} // namespace ipdl

#endif
