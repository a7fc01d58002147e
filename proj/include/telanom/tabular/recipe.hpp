#pragma once

// The preprocessing recipe: pool rare categories -> target-encode ->
// impute commute_distance -> Yeo-Johnson -> z-score. Fitted on training rows
// only; the frozen state is applied unchanged at score time.

#include "telanom/common.hpp"
#include "telanom/tabular/design_matrix.hpp"
#include "telanom/tabular/regression_tree.hpp"
#include "telanom/tabular/target_encoding.hpp"
#include "telanom/tabular/yeo_johnson.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace telanom {

struct RecipeConfig {
    double pool_threshold = kDefaultRareThreshold;
    double clamp = kDefaultEncodingClamp;
    std::size_t imputer_trees = kImputerTrees;
    TreeConfig tree{};
    std::uint64_t seed = 7;
};

class Recipe {
public:
    static constexpr int kFormatVersion = 1;

    Recipe() = default;

    static Recipe fit(const DesignMatrix& dm, const RecipeConfig& cfg = {}) {
        Recipe r;
        r.config_ = cfg;
        const std::size_t ncol = dm.columns.size();
        if (dm.rows() < 3) throw ArgumentError("recipe: need at least 3 training rows");
        for (const auto& c : dm.columns) {
            r.names_.push_back(c.name);
            r.categorical_.push_back(c.categorical);
        }
        r.poolers_.resize(ncol);
        r.encoders_.resize(ncol);
        for (std::size_t j = 0; j < ncol; ++j) {
            const auto& c = dm.columns[j];
            if (!c.categorical) continue;
            r.poolers_[j] = fit_category_pooler(c.category, cfg.pool_threshold);
            r.encoders_[j] = fit_target_encoder(r.poolers_[j].apply(c.category), dm.labels, cfg.clamp);
        }

        // Imputer: predicts commute_distance from the other risk factors and distance.
        for (std::size_t j = 0; j < ncol; ++j) {
            if (dm.columns[j].name == kCommuteColumn) r.impute_col_ = static_cast<int>(j);
        }
        if (r.impute_col_ >= 0) {
            const auto& trf = trf_names();
            for (std::size_t j = 0; j < ncol; ++j) {
                const auto& nm = dm.columns[j].name;
                if (static_cast<int>(j) == r.impute_col_) continue;
                if (nm == kDistanceColumn || std::find(trf.begin(), trf.end(), nm) != trf.end())
                    r.impute_predictors_.push_back(j);
            }
            const Matrix encoded = r.encode(dm);
            std::vector<Eigen::Index> complete;
            for (Eigen::Index i = 0; i < encoded.rows(); ++i)
                if (!std::isnan(encoded(i, r.impute_col_))) complete.push_back(i);
            Matrix x(static_cast<Eigen::Index>(complete.size()),
                     static_cast<Eigen::Index>(r.impute_predictors_.size()));
            Vector y(static_cast<Eigen::Index>(complete.size()));
            for (std::size_t i = 0; i < complete.size(); ++i) {
                const auto row = static_cast<Eigen::Index>(i);
                for (std::size_t p = 0; p < r.impute_predictors_.size(); ++p)
                    x(row, static_cast<Eigen::Index>(p)) =
                        encoded(complete[i], static_cast<Eigen::Index>(r.impute_predictors_[p]));
                y(row) = encoded(complete[i], r.impute_col_);
            }
            r.imputer_ = fit_bagged_imputer(x, y, cfg.seed, cfg.imputer_trees, cfg.tree);
        }

        const Matrix numeric = r.encode_and_impute(dm);
        r.lambdas_.resize(ncol);
        r.means_.resize(ncol);
        r.stds_.resize(ncol);
        for (std::size_t j = 0; j < ncol; ++j) {
            const Vector col = numeric.col(static_cast<Eigen::Index>(j));
            r.lambdas_[j] = fit_yeo_johnson(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
            Vector t(col.size());
            for (Eigen::Index i = 0; i < col.size(); ++i) t(i) = yeo_johnson(col(i), r.lambdas_[j]);
            const auto [mean, sd] = mean_and_sd(std::span<const double>(t.data(), static_cast<std::size_t>(t.size())));
            r.means_[j] = mean;
            // sd 0 marks a column that is constant on the training rows; it outputs 0.
            if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
                warn("recipe: column '" + dm.columns[j].name + "' is constant in the training rows");
                r.stds_[j] = 0.0;
            } else {
                r.stds_[j] = sd;
            }
        }
        r.fitted_ = true;
        return r;
    }

    bool fitted() const { return fitted_; }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<double>& lambdas() const { return lambdas_; }
    const std::vector<double>& means() const { return means_; }
    const std::vector<double>& stds() const { return stds_; }
    const TargetEncoder* encoder(const std::string& column) const {
        for (std::size_t j = 0; j < names_.size(); ++j)
            if (names_[j] == column && categorical_[j]) return &encoders_[j];
        return nullptr;
    }
    const CategoryPooler* pooler(const std::string& column) const {
        for (std::size_t j = 0; j < names_.size(); ++j)
            if (names_[j] == column && categorical_[j]) return &poolers_[j];
        return nullptr;
    }
    const std::optional<BaggedImputer>& imputer() const { return imputer_; }

    // Fully numeric, standardized matrix (rows x columns, canonical order).
    Matrix apply(const DesignMatrix& dm) const {
        if (!fitted_) throw StateError("recipe: apply called before fit");
        Matrix m = encode_and_impute(dm);
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const auto u = static_cast<std::size_t>(j);
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                m(i, j) = stds_[u] > 0.0 ? (yeo_johnson(m(i, j), lambdas_[u]) - means_[u]) / stds_[u] : 0.0;
        }
        return m;
    }

    nlohmann::json to_json() const {
        if (!fitted_) throw StateError("recipe: cannot serialize an unfitted recipe");
        nlohmann::json j;
        j["format"] = "telanom.recipe";
        j["version"] = kFormatVersion;
        j["names"] = names_;
        j["categorical"] = categorical_;
        j["lambdas"] = lambdas_;
        j["means"] = means_;
        j["stds"] = stds_;
        j["config"] = {{"pool_threshold", config_.pool_threshold},
                       {"clamp", config_.clamp},
                       {"imputer_trees", config_.imputer_trees},
                       {"min_leaf", config_.tree.min_leaf},
                       {"max_depth", config_.tree.max_depth},
                       {"seed", config_.seed}};
        auto& cats = j["categories"] = nlohmann::json::object();
        for (std::size_t c = 0; c < names_.size(); ++c) {
            if (!categorical_[c]) continue;
            cats[names_[c]] = {{"kept", poolers_[c].kept}, {"encoding", encoders_[c].encoding}};
        }
        j["impute_column"] = impute_col_;
        j["impute_predictors"] = impute_predictors_;
        auto& trees = j["imputer"] = nlohmann::json::array();
        if (imputer_)
            for (const auto& t : imputer_->trees) trees.push_back(telanom::to_json(t));
        return j;
    }

    static Recipe from_json(const nlohmann::json& j) {
        if (j.value("format", "") != "telanom.recipe") throw ValidationError("not a recipe artifact");
        if (j.at("version").get<int>() != kFormatVersion) throw ValidationError("unsupported recipe version");
        Recipe r;
        j.at("names").get_to(r.names_);
        j.at("categorical").get_to(r.categorical_);
        j.at("lambdas").get_to(r.lambdas_);
        j.at("means").get_to(r.means_);
        j.at("stds").get_to(r.stds_);
        const auto& cfg = j.at("config");
        r.config_.pool_threshold = cfg.at("pool_threshold");
        r.config_.clamp = cfg.at("clamp");
        r.config_.imputer_trees = cfg.at("imputer_trees");
        r.config_.tree.min_leaf = cfg.at("min_leaf");
        r.config_.tree.max_depth = cfg.at("max_depth");
        r.config_.seed = cfg.at("seed");
        r.poolers_.resize(r.names_.size());
        r.encoders_.resize(r.names_.size());
        for (std::size_t c = 0; c < r.names_.size(); ++c) {
            if (!r.categorical_[c]) continue;
            const auto& e = j.at("categories").at(r.names_[c]);
            e.at("kept").get_to(r.poolers_[c].kept);
            e.at("encoding").get_to(r.encoders_[c].encoding);
            r.encoders_[c].clamp = r.config_.clamp;
        }
        r.impute_col_ = j.at("impute_column");
        j.at("impute_predictors").get_to(r.impute_predictors_);
        if (r.impute_col_ >= 0) {
            BaggedImputer imp;
            for (const auto& t : j.at("imputer")) imp.trees.push_back(regression_tree_from_json(t));
            r.imputer_ = std::move(imp);
        }
        r.fitted_ = true;
        return r;
    }

private:
    void check_schema(const DesignMatrix& dm) const {
        if (dm.columns.size() != names_.size())
            throw ArgumentError("recipe: expected " + std::to_string(names_.size()) + " columns, got " +
                                std::to_string(dm.columns.size()));
        for (std::size_t j = 0; j < names_.size(); ++j)
            if (dm.columns[j].name != names_[j] || dm.columns[j].categorical != categorical_[j])
                throw ArgumentError("recipe: column " + std::to_string(j) + " is '" + dm.columns[j].name +
                                    "', expected '" + names_[j] + "'");
    }

    // Pooling and target encoding; MISSING stays NaN.
    Matrix encode(const DesignMatrix& dm) const {
        check_schema(dm);
        Matrix m(static_cast<Eigen::Index>(dm.rows()), static_cast<Eigen::Index>(names_.size()));
        for (std::size_t j = 0; j < names_.size(); ++j) {
            const auto& c = dm.columns[j];
            for (std::size_t i = 0; i < dm.rows(); ++i) {
                const auto r = static_cast<Eigen::Index>(i);
                const auto col = static_cast<Eigen::Index>(j);
                if (c.categorical) {
                    m(r, col) = encoders_[j].encode(poolers_[j].apply(c.category[i]));
                } else {
                    const double v = c.numeric[i];
                    if (std::isnan(v) && static_cast<int>(j) != impute_col_)
                        throw ValidationError("recipe: MISSING value in column '" + c.name + "'");
                    m(r, col) = v;
                }
            }
        }
        return m;
    }

    Matrix encode_and_impute(const DesignMatrix& dm) const {
        Matrix m = encode(dm);
        if (impute_col_ < 0) return m;
        Eigen::RowVectorXd x(static_cast<Eigen::Index>(impute_predictors_.size()));
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (!std::isnan(m(i, impute_col_))) continue;
            if (!imputer_) throw StateError("recipe: no imputer fitted");
            for (std::size_t p = 0; p < impute_predictors_.size(); ++p)
                x(static_cast<Eigen::Index>(p)) = m(i, static_cast<Eigen::Index>(impute_predictors_[p]));
            m(i, impute_col_) = imputer_->predict(x);
        }
        return m;
    }

    bool fitted_ = false;
    RecipeConfig config_{};
    std::vector<std::string> names_;
    std::vector<bool> categorical_;
    std::vector<CategoryPooler> poolers_;
    std::vector<TargetEncoder> encoders_;
    int impute_col_ = -1;
    std::vector<std::size_t> impute_predictors_;
    std::optional<BaggedImputer> imputer_;
    std::vector<double> lambdas_;
    std::vector<double> means_;
    std::vector<double> stds_;
};

}  // namespace telanom
