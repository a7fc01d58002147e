#pragma once

// Vehicle-level feature table: traditional risk factors, distance driven and,
// optionally, the 66 profile features. Columns keep their canonical order.

#include "telanom/common.hpp"
#include "telanom/csv.hpp"
#include "telanom/profiling.hpp"
#include "telanom/trip_store.hpp"

#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace telanom {

struct DesignColumn {
    std::string name;
    bool categorical = false;
    std::vector<double> numeric;       // NaN marks MISSING
    std::vector<std::string> category;

    std::size_t size() const { return categorical ? category.size() : numeric.size(); }
};

struct DesignMatrix {
    std::vector<std::string> vins;
    std::vector<DesignColumn> columns;
    std::vector<int> labels;

    std::size_t rows() const { return vins.size(); }

    const DesignColumn* find(const std::string& name) const {
        for (const auto& c : columns)
            if (c.name == name) return &c;
        return nullptr;
    }

    DesignMatrix subset(const std::vector<std::size_t>& idx) const {
        DesignMatrix out;
        out.columns.reserve(columns.size());
        for (auto i : idx) {
            out.vins.push_back(vins[i]);
            out.labels.push_back(labels[i]);
        }
        for (const auto& c : columns) {
            DesignColumn d{c.name, c.categorical, {}, {}};
            for (auto i : idx) {
                if (c.categorical) d.category.push_back(c.category[i]);
                else d.numeric.push_back(c.numeric[i]);
            }
            out.columns.push_back(std::move(d));
        }
        return out;
    }
};

inline constexpr const char* kCommuteColumn = "commute_distance";
inline constexpr const char* kDistanceColumn = "distance";

// Traditional risk factor names in table order.
inline const std::vector<std::string>& trf_names() {
    static const std::vector<std::string> names = {
        "annual_distance", "commute_distance", "conv_count_3_yrs_minor", "gender",
        "marital_status",  "pmt_plan",         "veh_age",                "veh_use",
        "years_claim_free", "years_licensed"};
    return names;
}

inline std::map<std::string, double> distance_by_vin(const std::vector<TripRecord>& trips) {
    std::map<std::string, double> out;
    for (const auto& t : trips) out[t.vin] += t.distance_km;
    return out;
}

// Rows for every policy whose vin is in `vins` (vin order). Vehicles without
// trips get distance 0; `features`, when given, must cover every row's vin.
inline DesignMatrix build_design_matrix(const std::vector<PolicyRecord>& policies,
                                        const std::set<std::string>& vins,
                                        const std::map<std::string, double>& distance,
                                        const std::map<std::string, ProfileFeatures>* features = nullptr) {
    std::vector<const PolicyRecord*> rows;
    for (const auto& p : policies)
        if (vins.count(p.vin)) rows.push_back(&p);
    std::sort(rows.begin(), rows.end(),
              [](const PolicyRecord* a, const PolicyRecord* b) { return a->vin < b->vin; });

    DesignMatrix dm;
    auto num = [&](const std::string& name, auto get) {
        DesignColumn c{name, false, {}, {}};
        for (const auto* p : rows) c.numeric.push_back(get(*p));
        dm.columns.push_back(std::move(c));
    };
    auto cat = [&](const std::string& name, auto get) {
        DesignColumn c{name, true, {}, {}};
        for (const auto* p : rows) c.category.push_back(get(*p));
        dm.columns.push_back(std::move(c));
    };
    for (const auto* p : rows) {
        dm.vins.push_back(p->vin);
        dm.labels.push_back(p->claim_ind);
    }
    num("annual_distance", [](const PolicyRecord& p) { return p.annual_distance; });
    num("commute_distance", [](const PolicyRecord& p) {
        return p.commute_distance ? *p.commute_distance : std::numeric_limits<double>::quiet_NaN();
    });
    num("conv_count_3_yrs_minor",
        [](const PolicyRecord& p) { return static_cast<double>(p.conv_count_3_yrs_minor); });
    cat("gender", [](const PolicyRecord& p) { return p.gender; });
    cat("marital_status", [](const PolicyRecord& p) { return p.marital_status; });
    cat("pmt_plan", [](const PolicyRecord& p) { return p.pmt_plan; });
    num("veh_age", [](const PolicyRecord& p) { return p.veh_age; });
    cat("veh_use", [](const PolicyRecord& p) { return p.veh_use; });
    num("years_claim_free", [](const PolicyRecord& p) { return p.years_claim_free; });
    num("years_licensed", [](const PolicyRecord& p) { return p.years_licensed; });
    num(kDistanceColumn, [&](const PolicyRecord& p) {
        const auto it = distance.find(p.vin);
        return it == distance.end() ? 0.0 : it->second;
    });
    if (features) {
        auto feat = [&](const std::string& vin) -> const ProfileFeatures& {
            const auto it = features->find(vin);
            if (it == features->end()) throw ValidationError("no profile features for vin '" + vin + "'");
            return it->second;
        };
        const auto qn = quantile_names();
        for (std::size_t q = 0; q < kNumQuantiles; ++q)
            num(qn[q], [&](const PolicyRecord& p) { return feat(p.vin).quantiles[q]; });
        const auto in = interaction_names();
        for (std::size_t e = 0; e < kNumInteractions; ++e)
            num(in[e], [&](const PolicyRecord& p) { return feat(p.vin).interactions[e]; });
    }
    return dm;
}

// Only the 66 profile features (used when tuning detectors).
inline DesignMatrix build_profile_design(const std::vector<std::string>& vins, const std::vector<int>& labels,
                                         const std::map<std::string, ProfileFeatures>& features) {
    DesignMatrix dm;
    dm.vins = vins;
    dm.labels = labels;
    const auto qn = quantile_names();
    const auto in = interaction_names();
    for (std::size_t q = 0; q < kNumQuantiles; ++q) dm.columns.push_back({qn[q], false, {}, {}});
    for (std::size_t e = 0; e < kNumInteractions; ++e) dm.columns.push_back({in[e], false, {}, {}});
    for (const auto& vin : vins) {
        const auto& f = features.at(vin);
        for (std::size_t q = 0; q < kNumQuantiles; ++q) dm.columns[q].numeric.push_back(f.quantiles[q]);
        for (std::size_t e = 0; e < kNumInteractions; ++e)
            dm.columns[kNumQuantiles + e].numeric.push_back(f.interactions[e]);
    }
    return dm;
}

inline void write_design_csv(std::ostream& out, const DesignMatrix& dm) {
    out << "vin";
    for (const auto& c : dm.columns) out << ',' << c.name;
    out << ",claim_ind\n";
    for (std::size_t i = 0; i < dm.rows(); ++i) {
        out << dm.vins[i];
        for (const auto& c : dm.columns) {
            out << ',';
            if (c.categorical) out << c.category[i];
            else if (!std::isnan(c.numeric[i])) out << csv::fmt(c.numeric[i]);
        }
        out << ',' << dm.labels[i] << '\n';
    }
}

}  // namespace telanom
