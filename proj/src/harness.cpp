#include "bb84sim/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

#include "bb84sim/counter_rng.hpp"
#include "bb84sim/error.hpp"
#include "bb84sim/weak_measurement.hpp"

namespace bb84sim {

namespace {

enum Tag : std::uint64_t {
    kAliceBit = 1,
    kAliceBasis,
    kEveBasis,
    kEveOutcome,
    kEveBranch,
    kEveGaussRadius,
    kEveGaussAngle,
    kBobBasis,
    kBobOutcome,
};

Basis basis_from(double u) { return u < 0.5 ? Basis::Rectilinear : Basis::Diagonal; }

int pol_bit(PolLabel pol) { return pol == PolLabel::H ? 0 : 1; }

struct EveAction {
    PolarizationState forwarded;
    std::optional<int> guess;
    std::optional<DetectorId> detector;
    std::optional<double> p0;
};

EveAction eve_acts(const SessionConfig& config, const CounterRng& rng, std::uint64_t i,
                   const PolarizationState& sent, Bb84Symbol sent_symbol) {
    const EveStrategy& eve = config.strategy;
    switch (eve.kind()) {
        case EveKind::None:
            return {sent, std::nullopt, std::nullopt, std::nullopt};
        case EveKind::InterceptResend: {
            const Basis b = basis_from(rng.uniform(i, kEveBasis));
            const Measurement m = measure_polarization(sent, b, rng.uniform(i, kEveOutcome));
            return {m.collapsed, bit_of(m.outcome), std::nullopt, std::nullopt};
        }
        case EveKind::CascadeAttack: {
            DetectorId id = sample_detector(propagate_cascade(sent).dist, rng.uniform(i, kEveOutcome));
            if (config.fault == Fault::AssumeClaimedDetector) {
                id = khokhlov_predicted_detector(sent_symbol);
            }
            if (is_inner(id)) {
                throw Error(ErrorCode::InvariantViolation,
                            "inner detector " + std::string(to_string(id)) + " clicked on pulse " +
                                std::to_string(i));
            }
            const Bb84Symbol decoded = decode_detector(id);
            return {make_bb84_state(decoded), bit_of(decoded), id, std::nullopt};
        }
        case EveKind::WeakAttack: {
            const PointerPolState cs = couple(sent, *eve.sigma());
            const double p0 = sample_p0(cs, rng.uniform(i, kEveBranch),
                                        rng.gaussian(i, kEveGaussRadius, kEveGaussAngle));
            const ReadoutResult r = readout_collapse(cs, p0);
            return {r.collapsed, pol_bit(r.guess), std::nullopt, p0};
        }
    }
    throw Error(ErrorCode::InvalidConfig, "unknown strategy");
}

PulseRecord simulate_pulse(const SessionConfig& config, const CounterRng& rng, std::uint64_t i) {
    PulseRecord rec;
    rec.alice_bit = rng.uniform(i, kAliceBit) < 0.5 ? 0 : 1;
    rec.alice_basis = basis_from(rng.uniform(i, kAliceBasis));
    rec.alice_symbol = encode(rec.alice_bit, rec.alice_basis);
    const PolarizationState sent = make_bb84_state(rec.alice_symbol);

    const EveAction eve = eve_acts(config, rng, i, sent, rec.alice_symbol);
    rec.eve_guess_bit = eve.guess;
    rec.eve_detector = eve.detector;
    rec.eve_p0 = eve.p0;

    rec.bob_basis = basis_from(rng.uniform(i, kBobBasis));
    const Measurement bob =
        measure_polarization(eve.forwarded, rec.bob_basis, rng.uniform(i, kBobOutcome));
    rec.bob_bit = bit_of(bob.outcome);
    rec.sifted = rec.alice_basis == rec.bob_basis;
    return rec;
}

void validate(const SessionConfig& config) {
    if (config.n_pulses < 1) throw Error(ErrorCode::InvalidConfig, "n_pulses must be >= 1");
    if (config.strategy.kind() == EveKind::WeakAttack) {
        require_valid_sigma(config.strategy.sigma().value_or(0.0));
    }
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

EveStrategy EveStrategy::weak_attack(double sigma) {
    require_valid_sigma(sigma);
    return EveStrategy(EveKind::WeakAttack, sigma);
}

EveStrategy EveStrategy::parse(std::string_view name, std::optional<double> sigma) {
    const bool is_weak = name == "weak";
    if (is_weak && !sigma) throw Error(ErrorCode::InvalidConfig, "weak attack requires sigma");
    if (!is_weak && sigma) {
        throw Error(ErrorCode::InvalidConfig, "sigma only applies to the weak attack");
    }
    if (name == "none") return none();
    if (name == "intercept") return intercept_resend();
    if (name == "cascade") return cascade_attack();
    if (is_weak) return weak_attack(*sigma);
    throw Error(ErrorCode::InvalidConfig, "unknown eavesdropper '" + std::string(name) + "'");
}

std::string_view to_string(EveKind kind) noexcept {
    switch (kind) {
        case EveKind::None: return "none";
        case EveKind::InterceptResend: return "intercept";
        case EveKind::CascadeAttack: return "cascade";
        case EveKind::WeakAttack: return "weak";
    }
    return "?";
}

RunOptions run_options_from_env() {
    const char* env = std::getenv("SIM_THREADS");
    if (env == nullptr) return {};
    const std::string_view text(env);
    unsigned value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size() || value == 0) {
        throw Error(ErrorCode::InvalidConfig,
                    "SIM_THREADS must be a positive integer, got '" + std::string(text) + "'");
    }
    return {value};
}

SessionStats compute_stats(std::span<const PulseRecord> records, const EveStrategy& strategy) {
    SessionStats s;
    s.n_pulses = records.size();
    for (const PulseRecord& r : records) {
        if (!r.sifted) continue;
        const std::size_t b = basis_index(r.alice_basis);
        ++s.n_sifted;
        ++s.sifted_by_basis[b];
        if (r.bob_bit != r.alice_bit) {
            ++s.n_errors;
            ++s.errors_by_basis[b];
        }
        if (r.eve_guess_bit && *r.eve_guess_bit == r.alice_bit) ++s.n_eve_correct;
    }
    s.qber = ratio(s.n_errors, s.n_sifted);
    for (std::size_t b = 0; b < 2; ++b) s.qber_by_basis[b] = ratio(s.errors_by_basis[b], s.sifted_by_basis[b]);
    if (s.n_sifted > 0) {
        s.eve_accuracy = strategy.kind() == EveKind::None ? 0.5 : *ratio(s.n_eve_correct, s.n_sifted);
    }
    return s;
}

SessionResult run_session(const SessionConfig& config, const RunOptions& options) {
    validate(config);
    const CounterRng rng(config.seed);
    std::vector<PulseRecord> records(config.n_pulses);

    unsigned threads = options.threads != 0 ? options.threads
                                            : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, config.n_pulses));

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) records[i] = simulate_pulse(config, rng, i);
    };

    if (threads <= 1) {
        work(0, config.n_pulses);
    } else {
        std::vector<std::exception_ptr> failures(threads);
        std::vector<std::thread> pool;
        pool.reserve(threads);
        const std::size_t chunk = (config.n_pulses + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t begin = std::min(config.n_pulses, t * chunk);
            const std::size_t end = std::min(config.n_pulses, begin + chunk);
            pool.emplace_back([&, t, begin, end] {
                try {
                    work(begin, end);
                } catch (...) {
                    failures[t] = std::current_exception();
                }
            });
        }
        for (std::thread& th : pool) th.join();
        // Each chunk stops at its first failure, so the lowest failing chunk
        // reports the lowest failing pulse for any thread count.
        for (const std::exception_ptr& f : failures) {
            if (f) std::rethrow_exception(f);
        }
    }

    SessionStats stats = compute_stats(records, config.strategy);
    return {stats, std::move(records)};
}

namespace {

struct EveBranch {
    double prob;
    std::optional<int> guess;
    PolarizationState forwarded;
};

double born(Bb84Symbol outcome, const PolarizationState& state) {
    return fidelity(make_bb84_state(outcome), state);
}

std::vector<EveBranch> eve_branches(const EveStrategy& eve, const PolarizationState& sent,
                                    std::size_t quadrature_points) {
    std::vector<EveBranch> out;
    switch (eve.kind()) {
        case EveKind::None:
            out.push_back({1.0, std::nullopt, sent});
            break;
        case EveKind::InterceptResend:
            for (Basis b : {Basis::Rectilinear, Basis::Diagonal}) {
                for (int bit : {0, 1}) {
                    const Bb84Symbol s = encode(bit, b);
                    out.push_back({0.5 * born(s, sent), bit, make_bb84_state(s)});
                }
            }
            break;
        case EveKind::CascadeAttack: {
            const DetectorDistribution dist = propagate_cascade(sent).dist;
            for (DetectorId id : kDetectorOrder) {
                if (dist[id] <= 0.0) continue;
                if (is_inner(id)) {
                    throw Error(ErrorCode::InvariantViolation, "inner detector has nonzero mass");
                }
                const Bb84Symbol s = decode_detector(id);
                out.push_back({dist[id], bit_of(s), make_bb84_state(s)});
            }
            break;
        }
        case EveKind::WeakAttack: {
            const double sigma = *eve.sigma();
            const PointerPolState cs = couple(sent, sigma);
            // The sign guess jumps at p0 = 0, so each half line gets its own
            // composite Simpson rule; the shared node carries the left-limit
            // guess on the left.
            const double reach = 1.0 + 10.0 * sigma;
            const std::size_t half = std::max<std::size_t>(3, (quadrature_points + 1) / 2) | 1;
            const double step = reach / static_cast<double>(half - 1);
            double mass = 0.0;
            for (int side : {-1, +1}) {
                for (std::size_t k = 0; k < half; ++k) {
                    const double p0 = side * step * static_cast<double>(k);
                    const double w = (k == 0 || k + 1 == half) ? 1.0 : (k % 2 ? 4.0 : 2.0);
                    const double density = w * momentum_pdf(cs, p0);
                    if (density <= 0.0) continue;
                    const ReadoutResult r = readout_collapse(cs, p0);
                    const int guess = side < 0 ? pol_bit(PolLabel::V) : pol_bit(r.guess);
                    out.push_back({density, guess, r.collapsed});
                    mass += density;
                }
            }
            for (EveBranch& br : out) br.prob /= mass;
            break;
        }
    }
    return out;
}

}  // namespace

ExactResult enumerate_exact(const EveStrategy& strategy, std::size_t weak_quadrature_points) {
    if (weak_quadrature_points < 2) {
        throw Error(ErrorCode::InvalidCount, "quadrature needs at least 2 points");
    }
    std::array<double, 2> sifted{};
    std::array<double, 2> error{};
    double eve_correct = 0.0;
    for (Basis alice_basis : {Basis::Rectilinear, Basis::Diagonal}) {
        for (int alice_bit : {0, 1}) {
            const double p_alice = 0.25;
            const PolarizationState sent = make_bb84_state(encode(alice_bit, alice_basis));
            for (const EveBranch& eve : eve_branches(strategy, sent, weak_quadrature_points)) {
                // Bob's basis matches Alice's with probability 1/2; the other half is
                // discarded by sifting.
                const double p = p_alice * eve.prob * 0.5;
                const double p_err = born(encode(1 - alice_bit, alice_basis), eve.forwarded);
                const std::size_t b = basis_index(alice_basis);
                sifted[b] += p;
                error[b] += p * p_err;
                if (eve.guess && *eve.guess == alice_bit) eve_correct += p;
            }
        }
    }
    const double total = sifted[0] + sifted[1];
    ExactResult r;
    r.qber = (error[0] + error[1]) / total;
    r.eve_accuracy = strategy.kind() == EveKind::None ? 0.5 : eve_correct / total;
    r.qber_by_basis = {error[0] / sifted[0], error[1] / sifted[1]};
    return r;
}

std::vector<SweepRow> qber_sigma_sweep(std::span<const double> sigma_grid, std::size_t n_pulses,
                                       std::uint64_t seed, const RunOptions& options) {
    std::vector<SweepRow> rows;
    rows.reserve(sigma_grid.size());
    for (double sigma : sigma_grid) {
        const SessionConfig config{n_pulses, EveStrategy::weak_attack(sigma), seed, Fault::None};
        const SessionStats s = run_session(config, options).stats;
        rows.push_back({sigma, s.qber, s.eve_accuracy});
    }
    return rows;
}

double eve_mutual_information(double accuracy) {
    const auto h = [](double p) { return p <= 0.0 || p >= 1.0 ? 0.0 : -p * std::log2(p); };
    return 1.0 - h(accuracy) - h(1.0 - accuracy);
}

}  // namespace bb84sim
