#pragma once

#include <complex>
#include <string_view>

namespace bb84sim {

using ComplexAmp = std::complex<double>;

enum class Bb84Symbol { H, V, D, A };
enum class Basis { Rectilinear, Diagonal };

// Tolerances on |alpha|^2 + |beta|^2 - 1.
inline constexpr double kConstructNormTol = 1e-12;
inline constexpr double kConsumeNormTol = 1e-9;
inline constexpr double kZeroNormThreshold = 1e-300;

/// Single-photon polarization qubit alpha|H> + beta|V>.
///
/// The public constructor enforces unit norm to kConstructNormTol. `raw()`
/// bypasses the norm check (finite check still applies) for states that come
/// from outside the library; operations that consume a state accept drift up
/// to kConsumeNormTol.
class PolarizationState {
public:
    PolarizationState(ComplexAmp alpha, ComplexAmp beta);

    static PolarizationState raw(ComplexAmp alpha, ComplexAmp beta);

    ComplexAmp alpha() const noexcept { return alpha_; }
    ComplexAmp beta() const noexcept { return beta_; }
    double norm_sq() const noexcept { return std::norm(alpha_) + std::norm(beta_); }

private:
    struct RawTag {};
    PolarizationState(RawTag, ComplexAmp alpha, ComplexAmp beta);

    ComplexAmp alpha_;
    ComplexAmp beta_;
};

struct Measurement {
    Bb84Symbol outcome;
    PolarizationState collapsed;
};

PolarizationState make_bb84_state(Bb84Symbol symbol);

/// Born-rule projective measurement driven by an external uniform deviate.
/// The first symbol of the basis (H or D) is returned iff `rand` is below its
/// probability.
Measurement measure_polarization(const PolarizationState& state, Basis basis, double rand);

/// |<a|b>|^2, clamped to [0, 1].
double fidelity(const PolarizationState& a, const PolarizationState& b);

/// Equality up to global phase.
bool same_state(const PolarizationState& a, const PolarizationState& b, double tol = 1e-12);

PolarizationState renormalize(ComplexAmp alpha, ComplexAmp beta);
PolarizationState renormalize(const PolarizationState& state);

// Throws InvalidState when the norm drifts beyond `tol`.
void require_unit_norm(const PolarizationState& state, double tol = kConsumeNormTol);

// BB84 encoding: Rectilinear {0->H, 1->V}, Diagonal {0->D, 1->A}.
Bb84Symbol encode(int bit, Basis basis);
int bit_of(Bb84Symbol symbol) noexcept;
Basis basis_of(Bb84Symbol symbol) noexcept;

std::string_view to_string(Bb84Symbol symbol) noexcept;
std::string_view to_string(Basis basis) noexcept;
Bb84Symbol parse_symbol(std::string_view text);

}  // namespace bb84sim
