#include "bb84sim/weak_measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "bb84sim/error.hpp"

namespace bb84sim {

namespace {

double normal_density(double p, double mean, double sigma) {
    const double z = (p - mean) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

// Gaussian readout factors exp(-(p0 - shift)^2 / 4 sigma^2) for H and V,
// both divided by the larger one.
struct CollapseWeights {
    double h;
    double v;
};

CollapseWeights collapse_weights(const PointerPolState& cs, double p0) {
    const double four_var = 4.0 * cs.sigma() * cs.sigma();
    const double log_h = -(p0 - cs.shift_h()) * (p0 - cs.shift_h()) / four_var;
    const double log_v = -(p0 - cs.shift_v()) * (p0 - cs.shift_v()) / four_var;
    const double top = std::max(log_h, log_v);
    return {std::exp(log_h - top), std::exp(log_v - top)};
}

}  // namespace

void require_valid_sigma(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw Error(ErrorCode::InvalidSigma, "sigma must be positive and finite, got " +
                                                 std::to_string(sigma));
    }
}

GaussianPointer::GaussianPointer(double mean, double sigma) : mean_(mean), sigma_(sigma) {
    require_valid_sigma(sigma);
    if (!std::isfinite(mean)) throw Error(ErrorCode::InvalidArgument, "pointer mean not finite");
}

PointerPolState::PointerPolState(const PolarizationState& pol, double sigma)
    : alpha_(pol.alpha()), beta_(pol.beta()), sigma_(sigma) {
    require_valid_sigma(sigma);
    require_unit_norm(pol);
}

double pointer_amplitude(const GaussianPointer& pointer, double p) {
    const double s = pointer.sigma();
    const double d = p - pointer.mean();
    return std::pow(2.0 * std::numbers::pi * s * s, -0.25) * std::exp(-d * d / (4.0 * s * s));
}

PointerPolState couple(const PolarizationState& state, double sigma) {
    return PointerPolState(state, sigma);
}

double momentum_pdf(const PointerPolState& cs, double p) {
    return cs.weight_h() * normal_density(p, cs.shift_h(), cs.sigma()) +
           cs.weight_v() * normal_density(p, cs.shift_v(), cs.sigma());
}

double sample_p0(const PointerPolState& cs, double rand_branch, double rand_gauss) {
    const double shift = rand_branch < cs.weight_h() ? cs.shift_h() : cs.shift_v();
    return shift + cs.sigma() * rand_gauss;
}

PolLabel guess_from_p0(double p0) noexcept { return p0 >= 0.0 ? PolLabel::H : PolLabel::V; }

ReadoutResult readout_collapse(const PointerPolState& cs, double p0) {
    if (!std::isfinite(p0)) throw Error(ErrorCode::InvalidArgument, "p0 not finite");
    // Scale in the log domain so the larger branch, amplitude included, is 1;
    // an eigenstate read far in the other branch's tail then stays nonzero.
    const double four_var = 4.0 * cs.sigma() * cs.sigma();
    const double log_h = std::log(std::abs(cs.alpha())) -
                         (p0 - cs.shift_h()) * (p0 - cs.shift_h()) / four_var;
    const double log_v = std::log(std::abs(cs.beta())) -
                         (p0 - cs.shift_v()) * (p0 - cs.shift_v()) / four_var;
    const double top = std::max(log_h, log_v);
    auto scaled = [top](ComplexAmp amp, double log_mag) {
        return amp == 0.0 ? ComplexAmp{} : std::polar(std::exp(log_mag - top), std::arg(amp));
    };
    const ComplexAmp a = scaled(cs.alpha(), log_h);
    const ComplexAmp b = scaled(cs.beta(), log_v);
    return {p0, renormalize(a, b), guess_from_p0(p0), a, b};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double info_gain(double sigma) {
    require_valid_sigma(sigma);
    return normal_cdf(1.0 / sigma);
}

double avg_fidelity(const PolarizationState& state, double sigma, std::size_t quadrature_points) {
    require_valid_sigma(sigma);
    require_unit_norm(state);
    if (quadrature_points < 2) {
        throw Error(ErrorCode::InvalidCount, "quadrature needs at least 2 points");
    }
    const PointerPolState cs = couple(state, sigma);
    const double lo = cs.shift_v() - 8.0 * sigma;
    const double hi = cs.shift_h() + 8.0 * sigma;
    const double step = (hi - lo) / static_cast<double>(quadrature_points - 1);
    const double a = cs.weight_h() / (cs.weight_h() + cs.weight_v());
    const double b = cs.weight_v() / (cs.weight_h() + cs.weight_v());
    if (a == 0.0 || b == 0.0) return 1.0;  // eigenstates are never disturbed

    // The collapsed state has overlap (a w_h + b w_v) / norm with the input, so
    // 1 - fidelity = a b (w_h - w_v)^2 / (a w_h^2 + b w_v^2). Integrating this
    // disturbance and normalizing by the quadrature mass of the pdf keeps
    // integrands that are constant in a limit (eigenstates, sigma -> 0) exact.
    double mass = 0.0;
    double disturbance = 0.0;
    for (std::size_t i = 0; i < quadrature_points; ++i) {
        const double p0 = i + 1 == quadrature_points ? hi : lo + step * static_cast<double>(i);
        const double node = (i == 0 || i + 1 == quadrature_points) ? 0.5 : 1.0;
        const double density = node * momentum_pdf(cs, p0);
        const CollapseWeights w = collapse_weights(cs, p0);
        const double gap = w.h - w.v;
        mass += density;
        disturbance += density * (a * b * gap * gap / (a * w.h * w.h + b * w.v * w.v));
    }
    return std::clamp(1.0 - disturbance / mass, 0.0, 1.0);
}

std::vector<TradeoffRow> tradeoff_curve(std::span<const double> sigma_grid,
                                        std::size_t quadrature_points) {
    if (sigma_grid.empty()) throw Error(ErrorCode::InvalidArgument, "sigma grid is empty");
    for (std::size_t i = 1; i < sigma_grid.size(); ++i) {
        if (!(sigma_grid[i] > sigma_grid[i - 1])) {
            throw Error(ErrorCode::InvalidArgument, "sigma grid must be strictly increasing");
        }
    }
    const PolarizationState d = make_bb84_state(Bb84Symbol::D);
    std::vector<TradeoffRow> rows;
    rows.reserve(sigma_grid.size());
    for (double sigma : sigma_grid) {
        rows.push_back({sigma, info_gain(sigma), avg_fidelity(d, sigma, quadrature_points)});
    }
    return rows;
}

std::vector<double> log_spaced_grid(double min, double max, std::size_t steps) {
    if (!(min > 0.0) || !(max > min) || !std::isfinite(max)) {
        throw Error(ErrorCode::InvalidArgument, "log grid needs 0 < min < max");
    }
    if (steps < 2) throw Error(ErrorCode::InvalidCount, "log grid needs at least 2 steps");
    std::vector<double> grid(steps);
    const double lmin = std::log(min);
    const double lmax = std::log(max);
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(steps - 1);
        grid[i] = std::exp(lmin + t * (lmax - lmin));
    }
    grid.front() = min;
    grid.back() = max;
    return grid;
}

}  // namespace bb84sim
