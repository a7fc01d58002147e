#pragma once

// Trip and policy tables: CSV ingestion with eager validation, serialization,
// and the vehicle-level train/test split.

#include "telanom/common.hpp"
#include "telanom/csv.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace telanom {

// Seconds since 1970-01-01 00:00:00 on a naive (timezone-free) clock.
using Timestamp = std::int64_t;

struct TripRecord {
    std::string vin;
    std::int64_t trip_id = 0;
    Timestamp departure = 0;
    Timestamp arrival = 0;
    double distance_km = 0.0;
    double max_speed_kmh = 0.0;

    friend bool operator==(const TripRecord&, const TripRecord&) = default;
};

struct PolicyRecord {
    std::string vin;
    double annual_distance = 0.0;
    std::optional<double> commute_distance;  // nullopt == MISSING
    long long conv_count_3_yrs_minor = 0;
    std::string gender;
    std::string marital_status;
    std::string pmt_plan;
    double veh_age = 0.0;
    std::string veh_use;
    double years_claim_free = 0.0;
    double years_licensed = 0.0;
    int claim_ind = 0;

    friend bool operator==(const PolicyRecord&, const PolicyRecord&) = default;
};

struct PortfolioSplit {
    std::set<std::string> train_vins;
    std::set<std::string> test_vins;
    std::uint64_t seed = 0;
};

inline constexpr const char* kTripHeader = "vin,trip_id,departure,arrival,distance,max_speed";
inline constexpr const char* kPolicyHeader =
    "vin,annual_distance,commute_distance,conv_count_3_yrs_minor,gender,marital_status,"
    "pmt_plan,veh_age,veh_use,years_claim_free,years_licensed,claim_ind";

// "yyyy-mm-dd HH:MM:SS" -> seconds since epoch. nullopt on any malformation.
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
    if (s.size() != 19 || s[4] != '-' || s[7] != '-' || s[10] != ' ' || s[13] != ':' ||
        s[16] != ':')
        return std::nullopt;
    auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (s[i] < '0' || s[i] > '9') return std::nullopt;
            v = v * 10 + (s[i] - '0');
        }
        return v;
    };
    const auto y = num(0, 4), mo = num(5, 2), d = num(8, 2), h = num(11, 2), mi = num(14, 2),
               se = num(17, 2);
    if (!y || !mo || !d || !h || !mi || !se) return std::nullopt;
    using namespace std::chrono;
    const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)},
                             day{static_cast<unsigned>(*d)}};
    if (!ymd.ok() || *h > 23 || *mi > 59 || *se > 59) return std::nullopt;
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<Timestamp>(days) * 86400 + *h * 3600 + *mi * 60 + *se;
}

inline std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const auto days = static_cast<int>(std::floor(static_cast<double>(t) / 86400.0));
    const Timestamp secs = t - static_cast<Timestamp>(days) * 86400;
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(secs / 3600), static_cast<int>((secs % 3600) / 60),
                  static_cast<int>(secs % 60));
    return buf;
}

namespace detail {

inline void validate_trips(std::vector<TripRecord>& trips) {
    std::ostringstream bad;
    std::size_t n_bad = 0;
    auto flag = [&](const TripRecord& t, const char* why) {
        if (n_bad < 20) bad << " (" << t.vin << ", " << t.trip_id << ": " << why << ")";
        ++n_bad;
    };
    for (const auto& t : trips) {
        if (t.arrival < t.departure) flag(t, "arrival before departure");
        if (t.trip_id < 1) flag(t, "trip_id < 1");
        if (t.distance_km < 0) flag(t, "negative distance");
        if (t.max_speed_kmh < 0) flag(t, "negative max speed");
    }
    std::sort(trips.begin(), trips.end(), [](const TripRecord& a, const TripRecord& b) {
        return std::tie(a.vin, a.trip_id) < std::tie(b.vin, b.trip_id);
    });
    for (std::size_t i = 1; i < trips.size(); ++i)
        if (trips[i].vin == trips[i - 1].vin && trips[i].trip_id == trips[i - 1].trip_id)
            flag(trips[i], "duplicate trip_id");
    if (n_bad > 0)
        throw ValidationError(std::to_string(n_bad) + " invalid trip record(s):" + bad.str());
}

}  // namespace detail

inline std::vector<TripRecord> parse_trip_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing header", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTripHeader) throw ParseError("unexpected header '" + line + "'", 1);

    std::vector<TripRecord> trips;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = csv::split(line);
        if (f.size() != 6)
            throw ParseError("expected 6 fields, got " + std::to_string(f.size()), lineno);
        TripRecord t;
        t.vin = std::string(f[0]);
        if (t.vin.empty()) throw ParseError("empty vin", lineno);
        const auto id = csv::to_int(f[1]);
        const auto dep = parse_timestamp(f[2]);
        const auto arr = parse_timestamp(f[3]);
        const auto dist = csv::to_double(f[4]);
        const auto speed = csv::to_double(f[5]);
        if (!id) throw ParseError("bad trip_id '" + std::string(f[1]) + "'", lineno);
        if (!dep) throw ParseError("bad departure '" + std::string(f[2]) + "'", lineno);
        if (!arr) throw ParseError("bad arrival '" + std::string(f[3]) + "'", lineno);
        if (!dist) throw ParseError("bad distance '" + std::string(f[4]) + "'", lineno);
        if (!speed) throw ParseError("bad max_speed '" + std::string(f[5]) + "'", lineno);
        t.trip_id = *id;
        t.departure = *dep;
        t.arrival = *arr;
        t.distance_km = *dist;
        t.max_speed_kmh = *speed;
        trips.push_back(std::move(t));
    }
    detail::validate_trips(trips);
    return trips;
}

inline std::vector<TripRecord> parse_trip_csv(const std::string& path) {
    auto in = csv::open_in(path);
    return parse_trip_csv(in);
}

inline void write_trip_csv(std::ostream& out, const std::vector<TripRecord>& trips) {
    out << kTripHeader << '\n';
    for (const auto& t : trips)
        out << t.vin << ',' << t.trip_id << ',' << format_timestamp(t.departure) << ','
            << format_timestamp(t.arrival) << ',' << csv::fmt(t.distance_km) << ','
            << csv::fmt(t.max_speed_kmh) << '\n';
}

inline void write_trip_csv(const std::string& path, const std::vector<TripRecord>& trips) {
    auto out = csv::open_out(path);
    write_trip_csv(out, trips);
}

inline std::vector<PolicyRecord> parse_policy_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing header", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kPolicyHeader) throw ParseError("unexpected header '" + line + "'", 1);

    std::vector<PolicyRecord> out;
    std::set<std::string> seen;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = csv::split(line);
        if (f.size() != 12)
            throw ParseError("expected 12 fields, got " + std::to_string(f.size()), lineno);
        auto at = [&](std::size_t i) -> std::string_view {
            if (i != 2 && f[i].empty())
                throw ValidationError("line " + std::to_string(lineno) +
                                      ": MISSING value only allowed for commute_distance");
            return f[i];
        };
        auto nonneg = [&](std::size_t i, const char* name) {
            const auto v = csv::to_double(at(i));
            if (!v) throw ParseError(std::string("bad ") + name, lineno);
            if (*v < 0)
                throw ValidationError("line " + std::to_string(lineno) + ": negative " + name);
            return *v;
        };
        PolicyRecord p;
        p.vin = std::string(at(0));
        p.annual_distance = nonneg(1, "annual_distance");
        if (!f[2].empty()) p.commute_distance = nonneg(2, "commute_distance");
        const auto conv = csv::to_int(at(3));
        if (!conv) throw ParseError("bad conv_count_3_yrs_minor", lineno);
        if (*conv < 0)
            throw ValidationError("line " + std::to_string(lineno) +
                                  ": negative conv_count_3_yrs_minor");
        p.conv_count_3_yrs_minor = *conv;
        p.gender = std::string(at(4));
        p.marital_status = std::string(at(5));
        p.pmt_plan = std::string(at(6));
        p.veh_age = nonneg(7, "veh_age");
        p.veh_use = std::string(at(8));
        p.years_claim_free = nonneg(9, "years_claim_free");
        p.years_licensed = nonneg(10, "years_licensed");
        const auto claim = at(11);
        if (claim != "0" && claim != "1")
            throw ValidationError("line " + std::to_string(lineno) + ": claim_ind '" +
                                  std::string(claim) + "' not in {0,1}");
        p.claim_ind = claim == "1" ? 1 : 0;
        if (!seen.insert(p.vin).second)
            throw ValidationError("line " + std::to_string(lineno) + ": duplicate vin '" + p.vin +
                                  "'");
        out.push_back(std::move(p));
    }
    return out;
}

inline std::vector<PolicyRecord> parse_policy_csv(const std::string& path) {
    auto in = csv::open_in(path);
    return parse_policy_csv(in);
}

inline void write_policy_csv(std::ostream& out, const std::vector<PolicyRecord>& policies) {
    out << kPolicyHeader << '\n';
    for (const auto& p : policies) {
        out << p.vin << ',' << csv::fmt(p.annual_distance) << ','
            << (p.commute_distance ? csv::fmt(*p.commute_distance) : std::string{}) << ','
            << p.conv_count_3_yrs_minor << ',' << p.gender << ',' << p.marital_status << ','
            << p.pmt_plan << ',' << csv::fmt(p.veh_age) << ',' << p.veh_use << ','
            << csv::fmt(p.years_claim_free) << ',' << csv::fmt(p.years_licensed) << ','
            << p.claim_ind << '\n';
    }
}

inline void write_policy_csv(const std::string& path, const std::vector<PolicyRecord>& policies) {
    auto out = csv::open_out(path);
    write_policy_csv(out, policies);
}

// Random vehicle-level partition with |train| = round(ratio * n).
inline PortfolioSplit split_by_vin(const std::vector<PolicyRecord>& policies, double ratio,
                                   std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw ArgumentError("split ratio must lie in (0,1)");
    if (policies.size() < 2) throw ArgumentError("split needs at least 2 policies");
    std::vector<std::string> vins;
    vins.reserve(policies.size());
    for (const auto& p : policies) vins.push_back(p.vin);
    std::sort(vins.begin(), vins.end());
    std::mt19937_64 rng(seed);
    std::shuffle(vins.begin(), vins.end(), rng);
    const auto n_train =
        static_cast<std::size_t>(std::llround(ratio * static_cast<double>(vins.size())));
    PortfolioSplit split;
    split.seed = seed;
    for (std::size_t i = 0; i < vins.size(); ++i)
        (i < n_train ? split.train_vins : split.test_vins).insert(vins[i]);
    return split;
}

inline std::map<std::string, std::vector<TripRecord>> group_by_vin(
    const std::vector<TripRecord>& trips) {
    std::map<std::string, std::vector<TripRecord>> out;
    for (const auto& t : trips) out[t.vin].push_back(t);
    for (auto& [vin, v] : out)
        std::sort(v.begin(), v.end(),
                  [](const TripRecord& a, const TripRecord& b) { return a.trip_id < b.trip_id; });
    return out;
}

}  // namespace telanom
