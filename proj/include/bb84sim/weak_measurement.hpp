#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bb84sim/cascade.hpp"
#include "bb84sim/quantum_core.hpp"

namespace bb84sim {

// Momentum is measured in units of the coupling kick, so the pointer means
// after coupling are exactly +1 (H) and -1 (V). sigma is in the same unit:
// sigma >> 1 is a weak measurement, sigma << 1 a strong one.

/// Gaussian momentum pointer. Its squared amplitude is N(mean, sigma^2).
class GaussianPointer {
public:
    GaussianPointer(double mean, double sigma);

    double mean() const noexcept { return mean_; }
    double sigma() const noexcept { return sigma_; }

private:
    double mean_;
    double sigma_;
};

/// |H><H| - |V><V|. Its eigenvalues set the pointer shift of each branch.
struct DistinguishingOperator {
    static constexpr double eigen_h = +1.0;
    static constexpr double eigen_v = -1.0;

    static constexpr double eigenvalue(PolLabel pol) noexcept {
        return pol == PolLabel::H ? eigen_h : eigen_v;
    }
};

/// alpha|H> (x) phi(p - 1) + beta|V> (x) phi(p + 1), with pointer width sigma.
class PointerPolState {
public:
    PointerPolState(const PolarizationState& pol, double sigma);

    ComplexAmp alpha() const noexcept { return alpha_; }
    ComplexAmp beta() const noexcept { return beta_; }
    double sigma() const noexcept { return sigma_; }
    static constexpr double shift_h() noexcept { return DistinguishingOperator::eigen_h; }
    static constexpr double shift_v() noexcept { return DistinguishingOperator::eigen_v; }

    double weight_h() const noexcept { return std::norm(alpha_); }
    double weight_v() const noexcept { return std::norm(beta_); }

private:
    ComplexAmp alpha_;
    ComplexAmp beta_;
    double sigma_;
};

struct ReadoutResult {
    double p0;
    PolarizationState collapsed;
    PolLabel guess;
    // Post-readout amplitudes before normalization, up to one common positive
    // factor (the larger branch is scaled to magnitude 1 to avoid underflow).
    ComplexAmp unnormalized_alpha;
    ComplexAmp unnormalized_beta;
};

/// (2 pi sigma^2)^(-1/4) exp(-(p - mean)^2 / (4 sigma^2)).
double pointer_amplitude(const GaussianPointer& pointer, double p);

PointerPolState couple(const PolarizationState& state, double sigma);

/// Marginal density of the pointer readout.
double momentum_pdf(const PointerPolState& cs, double p);

/// Two-stage mixture sample: branch H iff rand_branch < |alpha|^2, then
/// shift + sigma * rand_gauss. `rand_gauss` is a standard-normal deviate.
double sample_p0(const PointerPolState& cs, double rand_branch, double rand_gauss);

/// Sign-of-momentum guess; p0 = 0 guesses H.
PolLabel guess_from_p0(double p0) noexcept;

/// Projects the pointer onto momentum p0 and returns the biased polarization.
ReadoutResult readout_collapse(const PointerPolState& cs, double p0);

double normal_cdf(double x);

/// Success probability Phi(1/sigma) of the sign rule for equal priors.
double info_gain(double sigma);

/// Expected fidelity between `state` and its post-readout state, by
/// trapezoidal quadrature over [-1 - 8 sigma, 1 + 8 sigma].
double avg_fidelity(const PolarizationState& state, double sigma, std::size_t quadrature_points);

struct TradeoffRow {
    double sigma;
    double info_gain;
    double avg_fidelity_d;
};

std::vector<TradeoffRow> tradeoff_curve(std::span<const double> sigma_grid,
                                        std::size_t quadrature_points);

/// `steps` points log-spaced from `min` to `max` inclusive.
std::vector<double> log_spaced_grid(double min, double max, std::size_t steps);

void require_valid_sigma(double sigma);

}  // namespace bb84sim
