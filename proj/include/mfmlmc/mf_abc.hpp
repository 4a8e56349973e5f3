#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mfmlmc/abc.hpp"

namespace mfmlmc {

inline constexpr double kDefaultEtaMin = 0.01;

/// Probability of running the exact simulation after the approximate one
/// accepted (eta1) or rejected (eta2).
struct ContinuationProbs {
    double eta1 = 1.0;
    double eta2 = 1.0;

    void validate() const;
    [[nodiscard]] double for_approx(bool approx_accept) const { return approx_accept ? eta1 : eta2; }
    bool operator==(const ContinuationProbs&) const = default;
};

/// Low-fidelity (tau-leaping) and high-fidelity (exact) simulation settings
/// for one threshold.
struct FidelityPair {
    double tau = 0.0;
    double epsilon = 0.0;
    double epsilon_tilde = 0.0;
    DiscrepancyMetric approx_discrepancy = DiscrepancyMetric::kEuclidean;
    DiscrepancyMetric exact_discrepancy = DiscrepancyMetric::kEuclidean;

    /// epsilon_tilde = epsilon = problem.epsilon, metrics from the problem.
    static FidelityPair for_problem(const ABCProblem& problem, double tau);
    void validate() const;
};

/// Classification masses and costs that determine the efficiency of a pair
/// of continuation probabilities.
///
/// p_tp, p_fp, p_fn are expectations of 1{exact}1{approx}(f - E f)^2 over
/// the prior for the three outcome classes; c_p and c_n are the expected
/// exact-simulation cost restricted to approximate acceptances and
/// rejections, E[c 1{approx accept}] and E[c 1{approx reject}]; c_tau is
/// the expected approximate cost.
struct RocCostSummary {
    double p_tp = 0.0;
    double p_fp = 0.0;
    double p_fn = 0.0;
    double c_tau = 0.0;
    double c_p = 0.0;
    double c_n = 0.0;
    /// P(exact accept), i.e. E[w] for any valid continuation probabilities.
    double mean_weight = 0.0;

    [[nodiscard]] double R_p() const;
    [[nodiscard]] double R_n() const;
    [[nodiscard]] double R_0() const { return p_tp - p_fp; }
    [[nodiscard]] bool finite() const;
    /// E[C] under the given continuation probabilities.
    [[nodiscard]] double expected_cost(const ContinuationProbs& eta) const {
        return c_tau + eta.eta1 * c_p + eta.eta2 * c_n;
    }
};

/// (R_0 + p_fp/eta1 + p_fn/eta2)(c_tau + eta1 c_p + eta2 c_n).
double phi(const ContinuationProbs& eta, const RocCostSummary& s);

/// Partial derivatives of phi in eta1 and eta2.
std::pair<double, double> phi_gradient(const ContinuationProbs& eta, const RocCostSummary& s);

/// Minimiser of phi over [eta_min, 1]^2. Throws ApproximationUselessError
/// when R_0 <= 0.
ContinuationProbs optimal_continuation(const RocCostSummary& s, double eta_min = kDefaultEtaMin);

/// Estimates a RocCostSummary from multifidelity samples and per-sample
/// target values, reweighting the continued subset by the approximate
/// acceptance rates so that adaptively chosen eta do not bias the masses.
/// The centring constant is the self-normalised weighted mean of values.
RocCostSummary estimate_roc_summary(const std::vector<WeightedSample>& samples,
                                    std::span<const double> values);

/// Streams belonging to one multifidelity sample.
struct SampleKey {
    int level = 1;
    std::uint64_t index = 0;
};

/// One multifidelity sample: approximate simulation, then with probability
/// eta(approx outcome) the exact simulation. theta is drawn from the prior
/// stream of `key`.
WeightedSample mf_weight(const ABCProblem& problem, const FidelityPair& pair,
                         const ContinuationProbs& eta, const RngStream& rng, SampleKey key);
/// As above with a caller-supplied theta.
WeightedSample mf_weight(const ABCProblem& problem, const FidelityPair& pair,
                         const ContinuationProbs& eta, const ParamVector& theta,
                         const RngStream& rng, SampleKey key);

/// Running state of the adaptive exponentiated-gradient tuner.
class TunerState {
public:
    TunerState(std::size_t burn_in, double eta_min = kDefaultEtaMin,
               ContinuationProbs initial = {});

    /// Folds one sample (with its target value) into the running estimates.
    void observe(const WeightedSample& sample, double f_value);
    /// One exponentiated-gradient step, if past burn-in and well defined.
    void step();

    [[nodiscard]] const ContinuationProbs& eta() const { return eta_; }
    [[nodiscard]] std::size_t samples_seen() const { return n_; }
    [[nodiscard]] std::size_t burn_in() const { return burn_in_; }
    [[nodiscard]] std::size_t continued() const { return k_; }
    [[nodiscard]] double eta_min() const { return eta_min_; }
    /// Weighted running mean of f.
    [[nodiscard]] double mu_hat() const;
    /// Current estimate of the classification masses and costs.
    [[nodiscard]] RocCostSummary summary() const;
    /// Learning rate of the next step; nullopt when undefined.
    [[nodiscard]] std::optional<double> learning_rate() const;

private:
    struct Moments {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        void add(double x) {
            s0 += 1.0;
            s1 += x;
            s2 += x * x;
        }
        /// sum (x - c)^2
        [[nodiscard]] double centred(double c) const { return s2 - 2.0 * c * s1 + c * c * s0; }
    };

    ContinuationProbs eta_;
    double eta_min_;
    std::size_t burn_in_;
    std::size_t n_ = 0;
    std::size_t m_pos_ = 0;  // approximate acceptances among all samples
    std::size_t k_ = 0;      // continued samples
    std::size_t k_pos_ = 0;  // approximate acceptances among continued samples
    double shift_ = 0.0;
    bool have_shift_ = false;
    double sum_w_ = 0.0, sum_wf_ = 0.0;
    double cost_tau_ = 0.0, cost_p_ = 0.0, cost_n_ = 0.0;
    std::size_t exact_pos_ = 0, exact_neg_ = 0;
    Moments tp_, fp_, fn_;
};

/// Observe then step: the per-sample update of the adaptive sampler.
void tuner_update(TunerState& state, const WeightedSample& sample, double f_value);

/// Default burn-in min(1000, ceil(N / 10)).
std::size_t default_burn_in(std::size_t N);

struct MFOptions {
    /// Fixed continuation probabilities, or the starting point when adaptive.
    ContinuationProbs eta{};
    bool adaptive = false;
    std::optional<std::size_t> burn_in;
    double eta_min = kDefaultEtaMin;
    /// Samples drawn per frozen-eta batch in adaptive mode; 0 = worker count.
    std::size_t batch_size = 0;
    int level = 1;
};

struct MFResult {
    EstimatorReport report;
    std::vector<WeightedSample> samples;
    /// Continuation probabilities in force after the last sample.
    ContinuationProbs final_eta;
    /// Present in adaptive mode.
    std::optional<TunerState> tuner;
};

/// The sampling half of mf_abc: fills samples, final_eta and tuner but
/// leaves the report empty, so it never fails on degenerate weights.
MFResult mf_abc_samples(const ABCProblem& problem, const FidelityPair& pair,
                        const MFOptions& options, const TargetFn& f, std::size_t N,
                        const RngStream& rng);

/// Multifidelity ABC rejection sampling with N prior draws; adaptive mode
/// tunes eta on the fly by exponentiated gradient descent.
MFResult mf_abc(const ABCProblem& problem, const FidelityPair& pair, const MFOptions& options,
                const TargetFn& f, std::size_t N, const RngStream& rng);

struct BiasMseCoefficients {
    double bias_coeff = 0.0;
    double mse_coeff = 0.0;
};

/// Plug-in leading-order coefficients of the self-normalised estimator:
/// bias ~ bias_coeff / N and MSE ~ mse_coeff / N.
BiasMseCoefficients bias_mse_diagnostic(const std::vector<WeightedSample>& samples,
                                        const TargetFn& f);

}  // namespace mfmlmc
