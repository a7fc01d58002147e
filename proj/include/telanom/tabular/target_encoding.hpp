#pragma once

#include "telanom/common.hpp"

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace telanom {

inline constexpr const char* kPooledCategory = "other";
inline constexpr double kDefaultRareThreshold = 0.05;
// Logit cap for categories whose training responses are all 0 or all 1.
inline constexpr double kDefaultEncodingClamp = 20.57;

// Categories seen in more than `threshold` of the training rows keep their
// label; everything else, including categories unseen at fit time, maps to
// "other".
struct CategoryPooler {
    std::set<std::string> kept;

    std::string apply(const std::string& value) const {
        return kept.count(value) ? value : std::string(kPooledCategory);
    }

    std::vector<std::string> apply(std::span<const std::string> column) const {
        std::vector<std::string> out;
        out.reserve(column.size());
        for (const auto& v : column) out.push_back(apply(v));
        return out;
    }
};

inline CategoryPooler fit_category_pooler(std::span<const std::string> column,
                                          double threshold = kDefaultRareThreshold) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw ArgumentError("pooling threshold must lie in (0,1)");
    std::map<std::string, std::size_t> counts;
    for (const auto& v : column) ++counts[v];
    CategoryPooler p;
    const double n = static_cast<double>(column.size());
    for (const auto& [cat, cnt] : counts)
        if (static_cast<double>(cnt) / n > threshold) p.kept.insert(cat);
    return p;
}

inline std::vector<std::string> pool_rare_categories(std::span<const std::string> column,
                                                     double threshold = kDefaultRareThreshold) {
    return fit_category_pooler(column, threshold).apply(column);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Per-category coefficient of an intercept-free logistic regression on the
// category indicators. The likelihood separates by category, so each
// coefficient is the logit of that category's positive rate, capped at
// +/- clamp when the rate is 0 or 1.
struct TargetEncoder {
    std::map<std::string, double> encoding;
    double clamp = kDefaultEncodingClamp;

    // Categories absent from training fall back to the pooled label's value,
    // or 0 (probability 1/2) when the pooled label was never fitted.
    double encode(const std::string& value) const {
        if (auto it = encoding.find(value); it != encoding.end()) return it->second;
        if (auto it = encoding.find(kPooledCategory); it != encoding.end()) return it->second;
        return 0.0;
    }
};

inline TargetEncoder fit_target_encoder(std::span<const std::string> column, std::span<const int> y,
                                        double clamp = kDefaultEncodingClamp) {
    if (column.size() != y.size()) throw ArgumentError("target encoder: length mismatch");
    if (!(clamp > 0.0)) throw ArgumentError("target encoder: clamp must be positive");
    std::map<std::string, std::pair<double, double>> tally;  // (positives, total)
    for (std::size_t i = 0; i < column.size(); ++i) {
        if (y[i] != 0 && y[i] != 1) throw ArgumentError("target encoder: labels must be 0/1");
        auto& t = tally[column[i]];
        t.first += y[i];
        t.second += 1.0;
    }
    TargetEncoder enc;
    enc.clamp = clamp;
    for (const auto& [cat, t] : tally) {
        const double p = t.first / t.second;
        double v;
        if (p <= 0.0) v = -clamp;
        else if (p >= 1.0) v = clamp;
        else v = std::clamp(logit(p), -clamp, clamp);
        enc.encoding[cat] = v;
    }
    return enc;
}

}  // namespace telanom
