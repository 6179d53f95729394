#ifndef IPDL_DATASET_HPP
#define IPDL_DATASET_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ipdl/types.hpp"

namespace ipdl {

// Two-dimensional grouping over inside alternatives. The outside
// alternative is a singleton group in every dimension and is handled
// implicitly by the solvers.
struct NestingStructure {
    std::vector<int> mode_group; // per alternative index
    std::vector<int> dest_group;
    int n_mode_groups = 0;
    int n_dest_groups = 0;
    std::vector<std::vector<int>> mode_members; // group id -> alternative indices
    std::vector<std::vector<int>> dest_members;
};

// One (alternative, market) cell. trips < 0 means "no share observation"
// (the alternative exists with attributes but was not chosen at all and
// no share row was provided); loaders normalize this to 0.
struct MarketCell {
    int alt = -1;
    AlternativeAttributes attrs;
    double trips = 0;
};

struct Market {
    Segment segment;
    int origin = -1; // zone index
    double total_trips = 0;
    double outside_trips = 0;
    std::vector<MarketCell> cells; // sorted by alt index
};

struct MarketDataset {
    std::vector<Zone> zones;
    std::map<std::string, int> zone_index;
    std::vector<Alternative> alternatives;
    std::map<std::pair<int, int>, int> alt_index; // ((int)mode, dest zone) -> index
    std::vector<Market> markets;
    std::map<std::pair<std::string, std::string>, int> market_index; // (segment key, origin id)
    std::vector<Segment> segments; // distinct, sorted
    NestingStructure nesting;

    int zone(const std::string& id) const;
    int alternative(Mode m, int dest) const; // -1 if absent
    const Market* find_market(const Segment& s, int origin) const;
    std::optional<int> crz_zone() const; // first zone with is_crz
};

MarketDataset load_dataset(const std::string& zones_path, const std::string& markets_path,
                           const std::string& attributes_path, const std::string& shares_path);

// Writes the four CSVs back out (schemas identical to the loader's).
void save_dataset(const MarketDataset& ds, const std::string& zones_path,
                  const std::string& markets_path, const std::string& attributes_path,
                  const std::string& shares_path);

NestingStructure build_nesting(const std::vector<Alternative>& alternatives, int n_zones);

// Attribute replacement table keyed by (segment key, origin zone, mode, dest zone),
// e.g. a 2023-vs-2025 transit service table. Same schema as attributes.csv.
struct AttributeTable {
    std::map<std::tuple<std::string, int, int, int>, AlternativeAttributes> entries;
    const AlternativeAttributes* find(const Segment& seg, int origin, Mode m, int dest) const;
};

AttributeTable load_attribute_table(const std::string& path, const MarketDataset& ds);

} // namespace ipdl

#endif
