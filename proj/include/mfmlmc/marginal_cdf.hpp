#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "mfmlmc/abc.hpp"

namespace mfmlmc {

/// Right-continuous step CDF on a finite sorted support.
///
/// Built from signed point masses. Signed masses can make the raw
/// cumulative sum non-monotone or leave [0, 1]; the stored values are the
/// running maximum of the raw cumulative sum clipped to [0, 1], with the
/// last value pinned to 1, so evaluation and inversion are always well
/// defined.
class WeightedMarginalCDF {
public:
    WeightedMarginalCDF() = default;

    /// Masses are used as given (they should already sum to 1). Atoms at
    /// equal locations are merged; zero-mass atoms are dropped.
    static WeightedMarginalCDF from_atoms(std::vector<std::pair<double, double>> atoms);

    /// Normalised by the weight sum; throws DegenerateWeightsError when the
    /// weights sum to zero or every weight is zero.
    static WeightedMarginalCDF from_weighted(std::span<const double> points,
                                             std::span<const double> weights);

    /// F(s): 0 below the support, 1 at and above its last point.
    [[nodiscard]] double eval(double s) const;
    /// inf{s in support : F(s) >= u}; u <= 0 gives the smallest support
    /// point and u >= 1 the first point reaching 1.
    [[nodiscard]] double inverse(double u) const;

    [[nodiscard]] const std::vector<double>& support() const { return support_; }
    /// Envelope-corrected cumulative values, aligned with support().
    [[nodiscard]] const std::vector<double>& cumulative() const { return cumulative_; }
    /// Raw (uncorrected) cumulative sums, aligned with support().
    [[nodiscard]] const std::vector<double>& raw_cumulative() const { return raw_; }
    [[nodiscard]] bool empty() const { return support_.empty(); }

private:
    std::vector<double> support_;
    std::vector<double> cumulative_;
    std::vector<double> raw_;
};

/// Marginal CDF of dimension j of a weighted sample set.
WeightedMarginalCDF build_marginal_cdf(const std::vector<WeightedSample>& samples, std::size_t j);

double cdf_eval(const WeightedMarginalCDF& F, double s);
double cdf_inverse(const WeightedMarginalCDF& F, double u);

/// Accumulates the signed point masses that make up the multilevel
/// marginal CDF estimate: level 1 contributes its normalised weights and
/// every later level adds w (1{theta <= s} - 1{coupled <= s}) / sum(w).
class AccumulatedMarginalCDF {
public:
    void add(double location, double mass) { atoms_.emplace_back(location, mass); }
    [[nodiscard]] WeightedMarginalCDF finalize() const {
        return WeightedMarginalCDF::from_atoms(atoms_);
    }
    [[nodiscard]] std::size_t atom_count() const { return atoms_.size(); }

private:
    std::vector<std::pair<double, double>> atoms_;
};

}  // namespace mfmlmc
