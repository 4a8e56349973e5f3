#include "mfmlmc/marginal_cdf.hpp"

#include <algorithm>

#include "mfmlmc/error.hpp"

namespace mfmlmc {

WeightedMarginalCDF WeightedMarginalCDF::from_atoms(std::vector<std::pair<double, double>> atoms) {
    std::erase_if(atoms, [](const auto& a) { return a.second == 0.0; });
    if (atoms.empty()) throw DegenerateWeightsError("marginal CDF has no nonzero-weight samples");
    std::stable_sort(atoms.begin(), atoms.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    WeightedMarginalCDF F;
    double raw = 0.0;
    double envelope = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        raw += atoms[i].second;
        const bool last_of_location = i + 1 == atoms.size() || atoms[i + 1].first != atoms[i].first;
        if (!last_of_location) continue;
        envelope = std::clamp(std::max(envelope, raw), 0.0, 1.0);
        F.support_.push_back(atoms[i].first);
        F.raw_.push_back(raw);
        F.cumulative_.push_back(envelope);
    }
    F.cumulative_.back() = 1.0;
    return F;
}

WeightedMarginalCDF WeightedMarginalCDF::from_weighted(std::span<const double> points,
                                                       std::span<const double> weights) {
    if (points.size() != weights.size()) throw ConfigError("points and weights differ in length");
    double total = 0.0;
    for (double w : weights) total += w;
    if (total == 0.0) throw DegenerateWeightsError("marginal CDF weights sum to zero");
    const double scale = 1.0 / total;
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (weights[i] != 0.0) atoms.emplace_back(points[i], weights[i] * scale);
    }
    return from_atoms(std::move(atoms));
}

double WeightedMarginalCDF::eval(double s) const {
    const auto it = std::upper_bound(support_.begin(), support_.end(), s);
    if (it == support_.begin()) return 0.0;
    return cumulative_[static_cast<std::size_t>(it - support_.begin()) - 1];
}

double WeightedMarginalCDF::inverse(double u) const {
    // The same probability reached along different summation orders can
    // differ in the last bits; without the slack F^{-1}(F(s)) could skip
    // past s.
    constexpr double kSlack = 1e-10;
    const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u - kSlack);
    if (it == cumulative_.end()) return support_.back();
    return support_[static_cast<std::size_t>(it - cumulative_.begin())];
}

WeightedMarginalCDF build_marginal_cdf(const std::vector<WeightedSample>& samples, std::size_t j) {
    std::vector<double> points, weights;
    points.reserve(samples.size());
    weights.reserve(samples.size());
    for (const auto& s : samples) {
        if (j >= s.theta.size()) throw ConfigError("marginal dimension out of range");
        points.push_back(s.theta[j]);
        weights.push_back(s.w);
    }
    return WeightedMarginalCDF::from_weighted(points, weights);
}

double cdf_eval(const WeightedMarginalCDF& F, double s) { return F.eval(s); }
double cdf_inverse(const WeightedMarginalCDF& F, double u) { return F.inverse(u); }

}  // namespace mfmlmc
