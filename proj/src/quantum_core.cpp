#include "bb84sim/quantum_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "bb84sim/error.hpp"

namespace bb84sim {

namespace {

bool finite(ComplexAmp z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// Snap probabilities that are within rounding of 0 or 1 so that eigenstates
// are measured deterministically for every rand in [0, 1).
double snap_probability(double p) {
    if (p < 1e-12) return 0.0;
    if (p > 1.0 - 1e-12) return 1.0;
    return p;
}

}  // namespace

PolarizationState::PolarizationState(RawTag, ComplexAmp alpha, ComplexAmp beta)
    : alpha_(alpha), beta_(beta) {
    if (!finite(alpha) || !finite(beta)) {
        throw Error(ErrorCode::InvalidState, "non-finite amplitude");
    }
}

PolarizationState::PolarizationState(ComplexAmp alpha, ComplexAmp beta)
    : PolarizationState(RawTag{}, alpha, beta) {
    if (std::abs(norm_sq() - 1.0) > kConstructNormTol) {
        throw Error(ErrorCode::InvalidState,
                    "norm deviates from 1 by " + std::to_string(norm_sq() - 1.0));
    }
}

PolarizationState PolarizationState::raw(ComplexAmp alpha, ComplexAmp beta) {
    return PolarizationState(RawTag{}, alpha, beta);
}

void require_unit_norm(const PolarizationState& state, double tol) {
    const double drift = std::abs(state.norm_sq() - 1.0);
    if (!(drift <= tol)) {
        throw Error(ErrorCode::InvalidState, "norm deviates from 1 by " + std::to_string(drift));
    }
}

PolarizationState make_bb84_state(Bb84Symbol symbol) {
    constexpr double r = std::numbers::sqrt2 / 2.0;
    switch (symbol) {
        case Bb84Symbol::H: return {1.0, 0.0};
        case Bb84Symbol::V: return {0.0, 1.0};
        case Bb84Symbol::D: return {r, r};
        case Bb84Symbol::A: return {r, -r};
    }
    throw Error(ErrorCode::InvalidArgument, "unknown symbol");
}

Measurement measure_polarization(const PolarizationState& state, Basis basis, double rand) {
    require_unit_norm(state);
    if (!(rand >= 0.0 && rand < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "rand must lie in [0, 1)");
    }
    const double n = state.norm_sq();
    Bb84Symbol first = Bb84Symbol::H;
    Bb84Symbol second = Bb84Symbol::V;
    double p_first = std::norm(state.alpha()) / n;
    if (basis == Basis::Diagonal) {
        first = Bb84Symbol::D;
        second = Bb84Symbol::A;
        p_first = std::norm(state.alpha() + state.beta()) / (2.0 * n);
    }
    const Bb84Symbol outcome = rand < snap_probability(p_first) ? first : second;
    return {outcome, make_bb84_state(outcome)};
}

double fidelity(const PolarizationState& a, const PolarizationState& b) {
    const ComplexAmp overlap = std::conj(a.alpha()) * b.alpha() + std::conj(a.beta()) * b.beta();
    return std::clamp(std::norm(overlap), 0.0, 1.0);
}

bool same_state(const PolarizationState& a, const PolarizationState& b, double tol) {
    return std::abs(1.0 - fidelity(a, b)) <= tol;
}

PolarizationState renormalize(ComplexAmp alpha, ComplexAmp beta) {
    const double n = std::norm(alpha) + std::norm(beta);
    if (!(n >= kZeroNormThreshold)) {
        throw Error(ErrorCode::ZeroNormState, "cannot normalize a zero-norm state");
    }
    if (!std::isfinite(n)) {
        throw Error(ErrorCode::InvalidState, "non-finite amplitude");
    }
    const double s = 1.0 / std::sqrt(n);
    return PolarizationState::raw(alpha * s, beta * s);
}

PolarizationState renormalize(const PolarizationState& state) {
    return renormalize(state.alpha(), state.beta());
}

Bb84Symbol encode(int bit, Basis basis) {
    if (bit != 0 && bit != 1) throw Error(ErrorCode::InvalidArgument, "bit must be 0 or 1");
    if (basis == Basis::Rectilinear) return bit == 0 ? Bb84Symbol::H : Bb84Symbol::V;
    return bit == 0 ? Bb84Symbol::D : Bb84Symbol::A;
}

int bit_of(Bb84Symbol symbol) noexcept {
    return (symbol == Bb84Symbol::H || symbol == Bb84Symbol::D) ? 0 : 1;
}

Basis basis_of(Bb84Symbol symbol) noexcept {
    return (symbol == Bb84Symbol::H || symbol == Bb84Symbol::V) ? Basis::Rectilinear
                                                                 : Basis::Diagonal;
}

std::string_view to_string(Bb84Symbol symbol) noexcept {
    switch (symbol) {
        case Bb84Symbol::H: return "H";
        case Bb84Symbol::V: return "V";
        case Bb84Symbol::D: return "D";
        case Bb84Symbol::A: return "A";
    }
    return "?";
}

std::string_view to_string(Basis basis) noexcept {
    return basis == Basis::Rectilinear ? "rectilinear" : "diagonal";
}

Bb84Symbol parse_symbol(std::string_view text) {
    if (text == "H") return Bb84Symbol::H;
    if (text == "V") return Bb84Symbol::V;
    if (text == "D") return Bb84Symbol::D;
    if (text == "A") return Bb84Symbol::A;
    throw Error(ErrorCode::InvalidArgument, "unknown BB84 symbol '" + std::string(text) + "'");
}

}  // namespace bb84sim
