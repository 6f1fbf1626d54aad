#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nlpaft/errors.hpp"

namespace nlpaft {

using CovariateIndex = std::size_t;

/// Observed censored survival data (y_i, delta_i, x_i), immutable once built.
///
/// status[i] == 1 marks an observed event, 0 a right-censored record.
/// log(times) is cached because every likelihood evaluation needs it.
class SurvivalDataset {
public:
    SurvivalDataset(Eigen::MatrixXd design, Eigen::VectorXd times, Eigen::VectorXi status)
        : design_(std::move(design)), times_(std::move(times)), status_(std::move(status)) {
        const auto n = design_.rows();
        if (n == 0 || design_.cols() == 0) {
            throw InvalidArgument("SurvivalDataset: design must have at least one row and one column");
        }
        if (times_.size() != n || status_.size() != n) {
            throw InvalidArgument("SurvivalDataset: times/status length must equal the number of design rows");
        }
        if (!design_.allFinite()) {
            throw InvalidArgument("SurvivalDataset: design contains non-finite entries");
        }
        events_ = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!(times_[i] > 0.0) || !std::isfinite(times_[i])) {
                throw InvalidArgument("SurvivalDataset: times[" + std::to_string(i) +
                                      "] must be a positive finite real");
            }
            if (status_[i] != 0 && status_[i] != 1) {
                throw InvalidArgument("SurvivalDataset: status[" + std::to_string(i) + "] must be 0 or 1");
            }
            events_ += static_cast<std::size_t>(status_[i]);
        }
        if (events_ == 0) {
            throw InvalidArgument("SurvivalDataset: at least one observed event is required");
        }
        log_times_ = times_.array().log().matrix();
    }

    std::size_t n() const noexcept { return static_cast<std::size_t>(design_.rows()); }
    std::size_t p() const noexcept { return static_cast<std::size_t>(design_.cols()); }
    std::size_t events() const noexcept { return events_; }

    const Eigen::MatrixXd& design() const noexcept { return design_; }
    const Eigen::VectorXd& times() const noexcept { return times_; }
    const Eigen::VectorXd& log_times() const noexcept { return log_times_; }
    const Eigen::VectorXi& status() const noexcept { return status_; }

    auto column(CovariateIndex j) const { return design_.col(static_cast<Eigen::Index>(j)); }

    /// Copy with every design column centred and scaled to unit sample standard deviation.
    SurvivalDataset standardized() const {
        Eigen::MatrixXd x = design_;
        const double denom = static_cast<double>(x.rows() > 1 ? x.rows() - 1 : 1);
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            auto col = x.col(j);
            col.array() -= col.mean();
            const double sd = std::sqrt(col.squaredNorm() / denom);
            if (!(sd > 0.0)) {
                throw InvalidArgument("standardize: column " + std::to_string(j) +
                                      " is constant and cannot be scaled");
            }
            col /= sd;
        }
        return SurvivalDataset(std::move(x), times_, status_);
    }

private:
    Eigen::MatrixXd design_;
    Eigen::VectorXd times_;
    Eigen::VectorXi status_;
    Eigen::VectorXd log_times_;
    std::size_t events_ = 0;
};

/// Covariate subset defining one regression model; indices strictly increasing.
class ModelSpec {
public:
    ModelSpec() = default;

    explicit ModelSpec(std::vector<CovariateIndex> indices) : indices_(std::move(indices)) {
        std::sort(indices_.begin(), indices_.end());
        if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
            throw InvalidArgument("ModelSpec: duplicate covariate index");
        }
    }

    ModelSpec(std::initializer_list<CovariateIndex> indices)
        : ModelSpec(std::vector<CovariateIndex>(indices)) {}

    std::size_t size() const noexcept { return indices_.size(); }
    bool empty() const noexcept { return indices_.empty(); }
    bool contains(CovariateIndex j) const {
        return std::binary_search(indices_.begin(), indices_.end(), j);
    }
    std::span<const CovariateIndex> indices() const noexcept { return indices_; }
    CovariateIndex operator[](std::size_t k) const { return indices_[k]; }

    auto begin() const noexcept { return indices_.begin(); }
    auto end() const noexcept { return indices_.end(); }

    /// Throws unless every index is < data.p() and the model leaves two degrees
    /// of freedom for the intercept and scale.
    void validate_against(const SurvivalDataset& data) const {
        if (!indices_.empty() && indices_.back() >= data.p()) {
            throw InvalidArgument("ModelSpec: covariate index " + std::to_string(indices_.back()) +
                                  " out of range for p = " + std::to_string(data.p()));
        }
        if (indices_.size() + 2 > data.n()) {
            throw InvalidArgument("ModelSpec: model with " + std::to_string(indices_.size()) +
                                  " covariates needs n >= n_k + 2");
        }
    }

    /// Design columns of this model, n x n_k.
    Eigen::MatrixXd gather(const SurvivalDataset& data) const {
        Eigen::MatrixXd x(static_cast<Eigen::Index>(data.n()), static_cast<Eigen::Index>(size()));
        for (std::size_t k = 0; k < size(); ++k) {
            x.col(static_cast<Eigen::Index>(k)) = data.column(indices_[k]);
        }
        return x;
    }

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
    friend auto operator<=>(const ModelSpec& a, const ModelSpec& b) { return a.indices_ <=> b.indices_; }

private:
    std::vector<CovariateIndex> indices_;
};

}  // namespace nlpaft
