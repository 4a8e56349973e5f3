#include "mfmlmc/mf_abc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfmlmc/error.hpp"
#include "mfmlmc/parallel.hpp"

namespace mfmlmc {

void ContinuationProbs::validate() const {
    if (!(eta1 > 0.0 && eta1 <= 1.0 && eta2 > 0.0 && eta2 <= 1.0)) {
        throw ConfigError("continuation probabilities must lie in (0, 1]");
    }
}

FidelityPair FidelityPair::for_problem(const ABCProblem& problem, double tau) {
    return {tau, problem.epsilon, problem.epsilon, problem.discrepancy, problem.discrepancy};
}

void FidelityPair::validate() const {
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    if (!(epsilon > 0.0) || !(epsilon_tilde > 0.0)) throw ConfigError("thresholds must be positive");
}

double RocCostSummary::R_p() const { return p_fp == 0.0 ? 0.0 : p_fp * c_tau / c_p; }
double RocCostSummary::R_n() const { return p_fn == 0.0 ? 0.0 : p_fn * c_tau / c_n; }

bool RocCostSummary::finite() const {
    for (double v : {p_tp, p_fp, p_fn, c_tau, c_p, c_n}) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double phi(const ContinuationProbs& eta, const RocCostSummary& s) {
    return (s.R_0() + s.p_fp / eta.eta1 + s.p_fn / eta.eta2) * s.expected_cost(eta);
}

std::pair<double, double> phi_gradient(const ContinuationProbs& eta, const RocCostSummary& s) {
    const double d1 = (s.R_0() + s.p_fn / eta.eta2) * s.c_p -
                      (s.c_tau + eta.eta2 * s.c_n) * s.p_fp / (eta.eta1 * eta.eta1);
    const double d2 = (s.R_0() + s.p_fp / eta.eta1) * s.c_n -
                      (s.c_tau + eta.eta1 * s.c_p) * s.p_fn / (eta.eta2 * eta.eta2);
    return {d1, d2};
}

namespace {

// argmin over [lo, 1] of (A + p/x)(B + x c), A > 0.
double coordinate_optimum(double A, double B, double p, double c, double lo) {
    double x;
    if (p == 0.0) {
        x = lo;
    } else if (c == 0.0) {
        x = 1.0;
    } else {
        x = std::sqrt(p * B / (A * c));
    }
    return std::clamp(x, lo, 1.0);
}

}  // namespace

ContinuationProbs optimal_continuation(const RocCostSummary& s, double eta_min) {
    if (!s.finite()) throw ConfigError("summary has non-finite entries");
    if (!(eta_min > 0.0 && eta_min <= 1.0)) throw ConfigError("eta_min must lie in (0, 1]");
    const double R0 = s.R_0();
    if (!(R0 > 0.0)) {
        throw ApproximationUselessError("R_0 <= 0: the approximate model misclassifies too often");
    }
    const double Rp = s.R_p();
    const double Rn = s.R_n();

    ContinuationProbs raw;
    if (std::max(Rp, Rn) <= R0) {
        raw = {std::sqrt(Rp / R0), std::sqrt(Rn / R0)};
    } else {
        const double bar1 =
            s.p_fp == 0.0 ? 0.0
                          : std::min(1.0, std::sqrt((Rp + s.p_fp * s.c_n / s.c_p) / (R0 + s.p_fn)));
        const double bar2 =
            s.p_fn == 0.0 ? 0.0
                          : std::min(1.0, std::sqrt((Rn + s.p_fn * s.c_p / s.c_n) / (R0 + s.p_fp)));
        const ContinuationProbs a{1.0, std::max(bar2, eta_min)};
        const ContinuationProbs b{std::max(bar1, eta_min), 1.0};
        raw = phi(a, s) <= phi(b, s) ? ContinuationProbs{1.0, bar2} : ContinuationProbs{bar1, 1.0};
    }

    ContinuationProbs eta{std::clamp(raw.eta1, eta_min, 1.0), std::clamp(raw.eta2, eta_min, 1.0)};
    if (eta == raw) return eta;

    // The clamped formula value need not be the box-constrained optimum.
    // log(phi) is convex in log(eta), so exact coordinate minimisation from
    // here converges to it.
    for (int it = 0; it < 200; ++it) {
        const ContinuationProbs prev = eta;
        eta.eta1 = coordinate_optimum(R0 + s.p_fn / eta.eta2, s.c_tau + eta.eta2 * s.c_n, s.p_fp,
                                      s.c_p, eta_min);
        eta.eta2 = coordinate_optimum(R0 + s.p_fp / eta.eta1, s.c_tau + eta.eta1 * s.c_p, s.p_fn,
                                      s.c_n, eta_min);
        if (std::abs(eta.eta1 - prev.eta1) < 1e-12 && std::abs(eta.eta2 - prev.eta2) < 1e-12) break;
    }
    return eta;
}

RocCostSummary estimate_roc_summary(const std::vector<WeightedSample>& samples,
                                    std::span<const double> values) {
    if (samples.size() != values.size()) throw ConfigError("samples and values differ in length");
    if (samples.empty()) throw ConfigError("no samples to summarise");
    std::vector<double> weights(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) weights[i] = samples[i].w;
    const double mu = weighted_estimate(values, weights);

    double m_pos = 0, k = 0, k_pos = 0, c_tau = 0;
    double tp = 0, fp = 0, fn = 0, cp = 0, cn = 0, acc_pos = 0, acc_neg = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const WeightedSample& s = samples[i];
        c_tau += s.approx_cost;
        if (s.approx_accept) m_pos += 1;
        if (!s.exact_run) continue;
        k += 1;
        const double d2 = (values[i] - mu) * (values[i] - mu);
        const bool exact = s.exact_accept.value_or(false);
        if (s.approx_accept) {
            k_pos += 1;
            cp += s.exact_cost;
            if (exact) {
                tp += d2;
                acc_pos += 1;
            } else {
                fp += d2;
            }
        } else {
            cn += s.exact_cost;
            if (exact) {
                fn += d2;
                acc_neg += 1;
            }
        }
    }
    const double n = static_cast<double>(samples.size());
    RocCostSummary out;
    out.c_tau = c_tau / n;
    if (k == 0) return out;
    const double rho_m = m_pos / n;
    const double rho_k = k_pos / k;
    // Each continued sample stands for 1/P(continue | approx outcome) draws.
    const double scale_pos = k_pos > 0 ? rho_m / rho_k / k : 0.0;
    const double scale_neg = k - k_pos > 0 ? (1.0 - rho_m) / (1.0 - rho_k) / k : 0.0;
    out.p_tp = scale_pos * tp;
    out.p_fp = scale_pos * fp;
    out.p_fn = scale_neg * fn;
    out.c_p = scale_pos * cp;
    out.c_n = scale_neg * cn;
    out.mean_weight = scale_pos * acc_pos + scale_neg * acc_neg;
    return out;
}

WeightedSample mf_weight(const ABCProblem& problem, const FidelityPair& pair,
                         const ContinuationProbs& eta, const RngStream& rng, SampleKey key) {
    RngStream prior_rng = sample_stream(rng, key.level, key.index, Purpose::kPrior);
    return mf_weight(problem, pair, eta, problem.prior.sample(prior_rng), rng, key);
}

WeightedSample mf_weight(const ABCProblem& problem, const FidelityPair& pair,
                         const ContinuationProbs& eta, const ParamVector& theta,
                         const RngStream& rng, SampleKey key) {
    RngStream approx_dyn = sample_stream(rng, key.level, key.index, Purpose::kApproxDynamics);
    RngStream approx_obs = sample_stream(rng, key.level, key.index, Purpose::kApproxObservation);
    const SimulationOutcome approx = simulate_and_compare(
        problem, theta, Fidelity::TauLeap(pair.tau), pair.epsilon_tilde, approx_dyn, approx_obs);

    WeightedSample s;
    s.theta = theta;
    s.level = key.level;
    s.index = key.index;
    s.approx_accept = approx.accept;
    s.approx_cost = approx.cost;
    const double w_tilde = approx.accept ? 1.0 : 0.0;
    const double p = eta.for_approx(approx.accept);

    RngStream cont = sample_stream(rng, key.level, key.index, Purpose::kContinuation);
    if (cont.uniform() < p) {
        RngStream dyn = sample_stream(rng, key.level, key.index, Purpose::kExactDynamics);
        RngStream obs = sample_stream(rng, key.level, key.index, Purpose::kExactObservation);
        const SimulationOutcome exact =
            simulate_and_compare(problem, theta, Fidelity::Exact(), pair.epsilon, dyn, obs);
        s.exact_run = true;
        s.exact_accept = exact.accept;
        s.exact_cost = exact.cost;
        s.w = w_tilde + ((exact.accept ? 1.0 : 0.0) - w_tilde) / p;
    } else {
        s.w = w_tilde;
    }
    s.cost = s.approx_cost + s.exact_cost;
    return s;
}

TunerState::TunerState(std::size_t burn_in, double eta_min, ContinuationProbs initial)
    : eta_(initial), eta_min_(eta_min), burn_in_(burn_in) {
    if (!(eta_min > 0.0 && eta_min <= 1.0)) throw ConfigError("eta_min must lie in (0, 1]");
    initial.validate();
}

void TunerState::observe(const WeightedSample& s, double f_value) {
    ++n_;
    if (!have_shift_) {
        shift_ = f_value;
        have_shift_ = true;
    }
    const double x = f_value - shift_;
    sum_w_ += s.w;
    sum_wf_ += s.w * x;
    cost_tau_ += s.approx_cost;
    if (s.approx_accept) ++m_pos_;
    if (!s.exact_run) return;
    ++k_;
    const bool exact = s.exact_accept.value_or(false);
    if (s.approx_accept) {
        ++k_pos_;
        cost_p_ += s.exact_cost;
        if (exact) {
            tp_.add(x);
            ++exact_pos_;
        } else {
            fp_.add(x);
        }
    } else {
        cost_n_ += s.exact_cost;
        if (exact) {
            fn_.add(x);
            ++exact_neg_;
        }
    }
}

double TunerState::mu_hat() const {
    if (sum_w_ == 0.0) return 0.0;
    return shift_ + sum_wf_ / sum_w_;
}

RocCostSummary TunerState::summary() const {
    RocCostSummary out;
    if (n_ == 0) return out;
    const double n = static_cast<double>(n_);
    out.c_tau = cost_tau_ / n;
    if (k_ == 0) return out;
    const double k = static_cast<double>(k_);
    const double rho_m = static_cast<double>(m_pos_) / n;
    const double rho_k = static_cast<double>(k_pos_) / k;
    const double scale_pos = k_pos_ > 0 ? rho_m / rho_k / k : 0.0;
    const double scale_neg = k_ > k_pos_ ? (1.0 - rho_m) / (1.0 - rho_k) / k : 0.0;
    const double c = sum_w_ == 0.0 ? 0.0 : sum_wf_ / sum_w_;
    out.p_tp = scale_pos * std::max(0.0, tp_.centred(c));
    out.p_fp = scale_pos * std::max(0.0, fp_.centred(c));
    out.p_fn = scale_neg * std::max(0.0, fn_.centred(c));
    out.c_p = scale_pos * cost_p_;
    out.c_n = scale_neg * cost_n_;
    out.mean_weight = scale_pos * static_cast<double>(exact_pos_) +
                      scale_neg * static_cast<double>(exact_neg_);
    return out;
}

std::optional<double> TunerState::learning_rate() const {
    const double mu = mu_hat();
    const RocCostSummary s = summary();
    const double denom = (s.c_tau + s.c_p + s.c_n) * mu * mu;
    if (!(denom > 0.0) || !std::isfinite(denom)) return std::nullopt;
    return 0.1 / denom;
}

void TunerState::step() {
    if (n_ <= burn_in_) return;
    const auto delta = learning_rate();
    if (!delta) return;
    const RocCostSummary s = summary();
    const auto [g1, g2] = phi_gradient(eta_, s);
    if (!std::isfinite(g1) || !std::isfinite(g2)) return;
    const double e1 = std::min(1.0, eta_.eta1 * std::exp(-*delta * eta_.eta1 * g1));
    const double e2 = std::min(1.0, eta_.eta2 * std::exp(-*delta * eta_.eta2 * g2));
    eta_ = {std::max(e1, eta_min_), std::max(e2, eta_min_)};
}

void tuner_update(TunerState& state, const WeightedSample& sample, double f_value) {
    state.observe(sample, f_value);
    state.step();
}

std::size_t default_burn_in(std::size_t N) { return std::min<std::size_t>(1000, (N + 9) / 10); }

MFResult mf_abc_samples(const ABCProblem& problem, const FidelityPair& pair,
                        const MFOptions& options, const TargetFn& f, std::size_t N,
                        const RngStream& rng) {
    if (N < 1) throw ConfigError("MF-ABC needs N >= 1");
    problem.validate();
    pair.validate();
    options.eta.validate();

    MFResult result;
    result.samples.resize(N);

    if (!options.adaptive) {
        parallel_for(N, [&](std::size_t i) {
            result.samples[i] = mf_weight(problem, pair, options.eta, rng, {options.level, i});
        });
        result.final_eta = options.eta;
    } else {
        TunerState tuner(options.burn_in.value_or(default_burn_in(N)), options.eta_min);
        const std::size_t batch = options.batch_size > 0 ? options.batch_size : thread_count();
        for (std::size_t start = 0; start < N; start += batch) {
            const std::size_t end = std::min(N, start + batch);
            // Burn-in samples always run with eta = (1, 1).
            const ContinuationProbs eta = start < tuner.burn_in() ? ContinuationProbs{} : tuner.eta();
            parallel_for(end - start, [&](std::size_t j) {
                const std::size_t i = start + j;
                const ContinuationProbs e = i < tuner.burn_in() ? ContinuationProbs{} : eta;
                result.samples[i] = mf_weight(problem, pair, e, rng, {options.level, i});
            });
            for (std::size_t i = start; i < end; ++i) {
                tuner_update(tuner, result.samples[i], f(result.samples[i].theta));
            }
        }
        result.final_eta = tuner.eta();
        result.tuner = tuner;
    }
    return result;
}

MFResult mf_abc(const ABCProblem& problem, const FidelityPair& pair, const MFOptions& options,
                const TargetFn& f, std::size_t N, const RngStream& rng) {
    MFResult result = mf_abc_samples(problem, pair, options, f, N, rng);
    std::vector<double> values(N), weights(N);
    double total_cost = 0.0;

    double sum_w = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        values[i] = f(result.samples[i].theta);
        weights[i] = result.samples[i].w;
        total_cost += result.samples[i].cost;
        sum_w += weights[i];
    }
    if (sum_w == 0.0) {
        throw DegenerateWeightsError("MF-ABC weights sum to zero; draw more samples",
                                     options.level);
    }
    const double estimate = weighted_estimate(values, weights);
    result.report.estimate = estimate;
    result.report.variance_estimate = weighted_estimate_variance(values, weights);
    result.report.total_cost = total_cost;
    result.report.per_level.push_back(
        {options.level, estimate, N, sum_w / static_cast<double>(N), total_cost});
    return result;
}

BiasMseCoefficients bias_mse_diagnostic(const std::vector<WeightedSample>& samples,
                                        const TargetFn& f) {
    const double fhat = weighted_estimate(samples, f);
    const double n = static_cast<double>(samples.size());
    double mw = 0.0, w2d = 0.0, w2d2 = 0.0;
    for (const auto& s : samples) {
        const double d = f(s.theta) - fhat;
        mw += s.w;
        w2d += s.w * s.w * d;
        w2d2 += s.w * s.w * d * d;
    }
    mw /= n;
    w2d /= n;
    w2d2 /= n;
    return {-w2d / (mw * mw), w2d2 / (mw * mw)};
}

}  // namespace mfmlmc
