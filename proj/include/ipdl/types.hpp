#ifndef IPDL_TYPES_HPP
#define IPDL_TYPES_HPP

#include <compare>
#include <string>
#include <vector>

namespace ipdl {

enum class RegionTag { CRZ, UpperManhattan, NYC_Other, NYS_Other, NJ };
enum class Mode { Driving, Transit, FHV, Biking, Walking, Carpool };
enum class Population { NotLowIncome, LowIncome, Senior, Student };
enum class Purpose { Commute, NonCommute };
enum class Period { Peak, Overnight };

constexpr int kNumModes = 6;
constexpr int kNumPopulations = 4;

std::string to_string(RegionTag t);
std::string to_string(Mode m);
std::string to_string(Population p);
std::string to_string(Purpose p);
std::string to_string(Period p);

// Parsers throw ipdl::Error("UnknownEnum", ...) on unrecognized strings.
RegionTag parse_region_tag(const std::string& s);
Mode parse_mode(const std::string& s);
Population parse_population(const std::string& s);
Purpose parse_purpose(const std::string& s);
Period parse_period(const std::string& s);

inline bool is_auto_mode(Mode m) {
    return m == Mode::Driving || m == Mode::FHV || m == Mode::Carpool;
}
inline bool is_nonauto_mode(Mode m) { return m == Mode::Biking || m == Mode::Walking; }

struct Zone {
    std::string id;
    RegionTag region = RegionTag::NYS_Other;
    bool is_nyc = false;
    bool is_crz = false;
};

struct Segment {
    Population population = Population::NotLowIncome;
    Purpose purpose = Purpose::Commute;
    Period period = Period::Peak;

    auto operator<=>(const Segment&) const = default;
    std::string key() const;
};

// All 16 population x purpose x period combinations.
std::vector<Segment> all_segments();

// Inside alternative: one (mode, destination zone) pair. The outside
// alternative is implicit and never appears in this set.
struct Alternative {
    Mode mode = Mode::Driving;
    int dest = -1; // index into MarketDataset::zones

    auto operator<=>(const Alternative&) const = default;
};

struct AlternativeAttributes {
    double tt = 0;        // minutes; auto or non-auto in-vehicle time
    double cost = 0;      // dollars
    double access = 0;    // transit only, minutes
    double egress = 0;    // transit only, minutes
    double wait = 0;      // transit only, minutes
    double ivt = 0;       // transit only, minutes
    double transfers = 0; // transit only, count
    int toll_flag = 0;
    int crz_dest_flag = 0;
};

} // namespace ipdl

#endif
