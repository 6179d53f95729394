#include "ipdl/types.hpp"

#include "ipdl/errors.hpp"

namespace ipdl {

std::string to_string(RegionTag t) {
    switch (t) {
    case RegionTag::CRZ: return "CRZ";
    case RegionTag::UpperManhattan: return "UpperManhattan";
    case RegionTag::NYC_Other: return "NYC_Other";
    case RegionTag::NYS_Other: return "NYS_Other";
    case RegionTag::NJ: return "NJ";
    }
    return "?";
}

std::string to_string(Mode m) {
    switch (m) {
    case Mode::Driving: return "driving";
    case Mode::Transit: return "transit";
    case Mode::FHV: return "fhv";
    case Mode::Biking: return "biking";
    case Mode::Walking: return "walking";
    case Mode::Carpool: return "carpool";
    }
    return "?";
}

std::string to_string(Population p) {
    switch (p) {
    case Population::NotLowIncome: return "NotLowIncome";
    case Population::LowIncome: return "LowIncome";
    case Population::Senior: return "Senior";
    case Population::Student: return "Student";
    }
    return "?";
}

std::string to_string(Purpose p) {
    return p == Purpose::Commute ? "Commute" : "NonCommute";
}

std::string to_string(Period p) { return p == Period::Peak ? "Peak" : "Overnight"; }

namespace {
[[noreturn]] void unknown(const char* kind, const std::string& s) {
    throw Error("UnknownEnum", std::string(kind) + " value '" + s + "'");
}
} // namespace

RegionTag parse_region_tag(const std::string& s) {
    if (s == "CRZ") return RegionTag::CRZ;
    if (s == "UpperManhattan") return RegionTag::UpperManhattan;
    if (s == "NYC_Other") return RegionTag::NYC_Other;
    if (s == "NYS_Other") return RegionTag::NYS_Other;
    if (s == "NJ") return RegionTag::NJ;
    unknown("region_tag", s);
}

Mode parse_mode(const std::string& s) {
    if (s == "driving") return Mode::Driving;
    if (s == "transit") return Mode::Transit;
    if (s == "fhv") return Mode::FHV;
    if (s == "biking") return Mode::Biking;
    if (s == "walking") return Mode::Walking;
    if (s == "carpool") return Mode::Carpool;
    unknown("mode", s);
}

Population parse_population(const std::string& s) {
    if (s == "NotLowIncome") return Population::NotLowIncome;
    if (s == "LowIncome") return Population::LowIncome;
    if (s == "Senior") return Population::Senior;
    if (s == "Student") return Population::Student;
    unknown("population", s);
}

Purpose parse_purpose(const std::string& s) {
    if (s == "Commute") return Purpose::Commute;
    if (s == "NonCommute") return Purpose::NonCommute;
    unknown("purpose", s);
}

Period parse_period(const std::string& s) {
    if (s == "Peak") return Period::Peak;
    if (s == "Overnight") return Period::Overnight;
    unknown("period", s);
}

std::string Segment::key() const {
    return to_string(population) + "/" + to_string(purpose) + "/" + to_string(period);
}

std::vector<Segment> all_segments() {
    std::vector<Segment> out;
    for (auto pop : {Population::NotLowIncome, Population::LowIncome, Population::Senior,
                     Population::Student})
        for (auto pur : {Purpose::Commute, Purpose::NonCommute})
            for (auto per : {Period::Peak, Period::Overnight})
                out.push_back({pop, pur, per});
    return out;
}

} // namespace ipdl
