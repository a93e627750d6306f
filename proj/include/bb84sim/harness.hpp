#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bb84sim/cascade.hpp"
#include "bb84sim/quantum_core.hpp"

namespace bb84sim {

enum class EveKind { None, InterceptResend, CascadeAttack, WeakAttack };

class EveStrategy {
public:
    static EveStrategy none() { return EveStrategy(EveKind::None, std::nullopt); }
    static EveStrategy intercept_resend() {
        return EveStrategy(EveKind::InterceptResend, std::nullopt);
    }
    static EveStrategy cascade_attack() { return EveStrategy(EveKind::CascadeAttack, std::nullopt); }
    static EveStrategy weak_attack(double sigma);

    /// Names used on the command line: none, intercept, cascade, weak.
    static EveStrategy parse(std::string_view name, std::optional<double> sigma);

    EveKind kind() const noexcept { return kind_; }
    std::optional<double> sigma() const noexcept { return sigma_; }

private:
    EveStrategy(EveKind kind, std::optional<double> sigma) : kind_(kind), sigma_(sigma) {}

    EveKind kind_;
    std::optional<double> sigma_;
};

std::string_view to_string(EveKind kind) noexcept;

struct PulseRecord {
    int alice_bit = 0;
    Basis alice_basis = Basis::Rectilinear;
    Bb84Symbol alice_symbol = Bb84Symbol::H;
    std::optional<int> eve_guess_bit;
    std::optional<DetectorId> eve_detector;  // CascadeAttack only
    std::optional<double> eve_p0;            // WeakAttack only
    Basis bob_basis = Basis::Rectilinear;
    int bob_bit = 0;
    bool sifted = false;
};

// Deliberate faults for exercising invariant handling end to end.
enum class Fault {
    None,
    // Cascade Eve reads the detector the attack proposal predicts instead of
    // sampling the computed distribution; D and A inputs then hit an inner
    // detector and the session aborts with InvariantViolation.
    AssumeClaimedDetector,
};

struct SessionConfig {
    std::size_t n_pulses = 0;
    EveStrategy strategy = EveStrategy::none();
    std::uint64_t seed = 0;
    Fault fault = Fault::None;
};

struct RunOptions {
    // 0 selects the hardware concurrency. Results do not depend on it.
    unsigned threads = 0;
};

/// Reads SIM_THREADS; absent means 0 (implementation default).
/// Throws InvalidConfig when set to anything but a positive integer.
RunOptions run_options_from_env();

inline constexpr std::size_t basis_index(Basis b) noexcept {
    return b == Basis::Rectilinear ? 0 : 1;
}

struct SessionStats {
    std::size_t n_pulses = 0;
    std::size_t n_sifted = 0;
    std::size_t n_errors = 0;
    std::size_t n_eve_correct = 0;
    std::array<std::size_t, 2> sifted_by_basis{};
    std::array<std::size_t, 2> errors_by_basis{};
    // std::nullopt marks an empty session (no sifted pulses).
    std::optional<double> qber;
    std::optional<double> eve_accuracy;
    std::array<std::optional<double>, 2> qber_by_basis{};

    bool empty_session() const noexcept { return n_sifted == 0; }
};

struct SessionResult {
    SessionStats stats;
    std::vector<PulseRecord> records;
};

SessionResult run_session(const SessionConfig& config, const RunOptions& options = {});

SessionStats compute_stats(std::span<const PulseRecord> records, const EveStrategy& strategy);

struct ExactResult {
    double qber;
    double eve_accuracy;
    std::array<double, 2> qber_by_basis;
};

/// Sums the full outcome tree (Alice bit and basis, Eve outcome, Bob basis and
/// outcome) with Born probabilities. WeakAttack integrates the pointer
/// readout by composite Simpson quadrature, split at the guess boundary,
/// with about `weak_quadrature_points` nodes.
ExactResult enumerate_exact(const EveStrategy& strategy,
                            std::size_t weak_quadrature_points = 20001);

struct SweepRow {
    double sigma;
    std::optional<double> qber;
    std::optional<double> eve_accuracy;
};

/// One WeakAttack session per sigma, all with the same seed.
std::vector<SweepRow> qber_sigma_sweep(std::span<const double> sigma_grid, std::size_t n_pulses,
                                       std::uint64_t seed, const RunOptions& options = {});

/// 1 - h2(accuracy): Eve's information per sifted bit for a binary symmetric
/// guess channel.
double eve_mutual_information(double accuracy);

}  // namespace bb84sim
