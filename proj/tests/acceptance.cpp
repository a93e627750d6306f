// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "bb84sim/cascade.hpp"
#include "bb84sim/counter_rng.hpp"
#include "bb84sim/harness.hpp"
#include "bb84sim/quantum_core.hpp"
#include "bb84sim/weak_measurement.hpp"
#include "test_support.hpp"

using namespace bb84sim;
using bb84sim::testing::random_state;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) detail << what;
        ok = ok && cond;
    }
};

constexpr std::array<Bb84Symbol, 4> kSymbols = {Bb84Symbol::H, Bb84Symbol::V, Bb84Symbol::D,
                                                Bb84Symbol::A};

Check zero_inner_clicks() {
    Check c;
    std::mt19937_64 gen(1);
    std::vector<PolarizationState> inputs;
    for (auto s : kSymbols) inputs.push_back(make_bb84_state(s));
    for (int i = 0; i < 10000; ++i) inputs.push_back(random_state(gen));

    const auto t0 = Clock::now();
    double worst = 0.0;
    for (const auto& s : inputs) {
        const auto r = propagate_cascade(s);
        worst = std::max({worst, r.dist[DetectorId::InnerD], r.dist[DetectorId::InnerA]});
    }
    const double elapsed = seconds_since(t0);
    c.require(worst <= 1e-12, "inner probability " + std::to_string(worst));
    c.require(elapsed < 1.0, "runtime " + std::to_string(elapsed) + " s");
    c.detail << "max inner probability " << worst << " over " << inputs.size() << " states, "
             << elapsed << " s";
    return c;
}

Check refutation_delta() {
    Check c;
    for (auto sym : {Bb84Symbol::D, Bb84Symbol::A}) {
        const DetectorId claimed = khokhlov_predicted_detector(sym);
        const double p = propagate_cascade(make_bb84_state(sym)).dist[claimed];
        c.require(is_inner(claimed), std::string(to_string(sym)) + " predicted outer detector");
        c.require(p == 0.0, std::string(to_string(sym)) + " predicted detector has mass");
        c.detail << to_string(sym) << " -> predicted " << to_string(claimed) << ", P = " << p << "; ";
    }
    return c;
}

Check collapse_ratio_identity() {
    Check c;
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> log_sigma(std::log(0.2), std::log(5.0));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    double worst = 0.0;
    int n = 0;
    while (n < 10000) {
        const auto s = random_state(gen);
        if (std::abs(s.beta()) < 1e-3 || std::abs(s.alpha()) < 1e-3) continue;
        const double sigma = std::exp(log_sigma(gen));
        // Keep the exponential factor inside double range.
        const double p0 = unit(gen) * (1.0 + 3.0 * sigma);
        const auto r = readout_collapse(couple(s, sigma), p0);
        const ComplexAmp got = r.unnormalized_alpha / r.unnormalized_beta;
        const ComplexAmp expected = s.alpha() / s.beta() * std::exp(p0 / (sigma * sigma));
        worst = std::max(worst, std::abs(got - expected) / std::abs(expected));
        ++n;
    }
    c.require(worst <= 1e-10, "relative error");
    c.detail << "max relative error " << worst << " over " << n << " cases";
    return c;
}

Check information_closed_form() {
    Check c;
    const CounterRng rng(4);
    const int n = 100000;
    std::uint64_t index = 0;
    for (double sigma : {0.2, 1.0, 5.0}) {
        int correct = 0;
        for (int k = 0; k < n; ++k, ++index) {
            const PolLabel truth = rng.uniform(index, 1) < 0.5 ? PolLabel::H : PolLabel::V;
            const auto cs = couple(make_bb84_state(truth == PolLabel::H ? Bb84Symbol::H : Bb84Symbol::V),
                                   sigma);
            const double p0 = sample_p0(cs, rng.uniform(index, 2), rng.gaussian(index, 3, 4));
            correct += guess_from_p0(p0) == truth;
        }
        const double expected = info_gain(sigma);
        const double est = static_cast<double>(correct) / n;
        const double se = std::sqrt(expected * (1.0 - expected) / n);
        c.require(std::abs(est - expected) <= 3.0 * se, "sigma " + std::to_string(sigma));
        c.detail << "sigma " << sigma << ": " << est << " vs " << expected << "; ";
    }
    return c;
}

Check tradeoff_limits() {
    Check c;
    const auto d = make_bb84_state(Bb84Symbol::D);
    const double strong_info = info_gain(0.05);
    const double strong_fid = avg_fidelity(d, 0.05, 2000);
    const double weak_info = info_gain(50.0);
    const double weak_fid = avg_fidelity(d, 50.0, 2000);
    c.require(strong_info >= 0.999, "strong info");
    c.require(std::abs(strong_fid - 0.5) <= 0.01, "strong fidelity");
    c.require(weak_info <= 0.51, "weak info");
    c.require(weak_fid >= 0.9999, "weak fidelity");

    const auto grid = log_spaced_grid(0.05, 50.0, 20);
    const auto rows = tradeoff_curve(grid, 2000);
    bool monotone = rows.size() == 20;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        monotone = monotone && rows[i].info_gain <= rows[i - 1].info_gain &&
                   rows[i].avg_fidelity_d >= rows[i - 1].avg_fidelity_d;
    }
    c.require(monotone, "not monotone");
    c.detail.precision(12);
    c.detail << "sigma 0.05: I = " << strong_info << ", F = " << strong_fid
             << "; sigma 50: I = " << weak_info << ", F = " << weak_fid;
    return c;
}

// Hand enumeration of the closed-form strategies, independent of the harness.
struct Reference {
    double qber;
    double accuracy;
    double qber_rect;
    double qber_diag;
};

Reference reference_intercept_resend() {
    double err = 0.0, right = 0.0;
    double err_b[2] = {0.0, 0.0};
    for (Basis alice : {Basis::Rectilinear, Basis::Diagonal}) {
        for (int bit : {0, 1}) {
            const auto sent = make_bb84_state(encode(bit, alice));
            for (Basis eve : {Basis::Rectilinear, Basis::Diagonal}) {
                for (int eve_bit : {0, 1}) {
                    const auto eve_state = make_bb84_state(encode(eve_bit, eve));
                    const double p_eve = 0.5 * fidelity(eve_state, sent);
                    const double p_wrong =
                        fidelity(make_bb84_state(encode(1 - bit, alice)), eve_state);
                    const double w = 0.25 * p_eve;
                    err += w * p_wrong;
                    err_b[basis_index(alice)] += 2.0 * w * p_wrong;
                    right += w * (eve_bit == bit);
                }
            }
        }
    }
    return {err, right, err_b[0], err_b[1]};
}

Reference reference_cascade() {
    // Outer detectors only: Eve learns h/v, resends that state.
    double err = 0.0, right = 0.0;
    double err_b[2] = {0.0, 0.0};
    for (Basis alice : {Basis::Rectilinear, Basis::Diagonal}) {
        for (int bit : {0, 1}) {
            const auto sent = make_bb84_state(encode(bit, alice));
            for (Bb84Symbol hit : {Bb84Symbol::H, Bb84Symbol::V}) {
                const double p = std::norm(hit == Bb84Symbol::H ? sent.alpha() : sent.beta());
                const double p_wrong =
                    fidelity(make_bb84_state(encode(1 - bit, alice)), make_bb84_state(hit));
                const double w = 0.25 * p;
                err += w * p_wrong;
                err_b[basis_index(alice)] += 2.0 * w * p_wrong;
                right += w * (bit_of(hit) == bit);
            }
        }
    }
    return {err, right, err_b[0], err_b[1]};
}

Check bb84_oracle_equivalence() {
    Check c;
    const auto ir = reference_intercept_resend();
    const auto cas = reference_cascade();
    c.require(std::abs(ir.qber - 0.25) < 1e-12 && std::abs(ir.accuracy - 0.75) < 1e-12,
              "intercept-resend reference");
    c.require(std::abs(cas.qber - 0.25) < 1e-12 && std::abs(cas.accuracy - 0.75) < 1e-12 &&
                  std::abs(cas.qber_rect) < 1e-12 && std::abs(cas.qber_diag - 0.5) < 1e-12,
              "cascade reference");

    const auto ex_ir = enumerate_exact(EveStrategy::intercept_resend());
    const auto ex_cas = enumerate_exact(EveStrategy::cascade_attack());
    c.require(std::abs(ex_ir.qber - ir.qber) < 1e-12 &&
                  std::abs(ex_ir.eve_accuracy - ir.accuracy) < 1e-12,
              "intercept-resend enumeration");
    c.require(std::abs(ex_cas.qber - cas.qber) < 1e-12 &&
                  std::abs(ex_cas.eve_accuracy - cas.accuracy) < 1e-12 &&
                  std::abs(ex_cas.qber_by_basis[0] - cas.qber_rect) < 1e-12 &&
                  std::abs(ex_cas.qber_by_basis[1] - cas.qber_diag) < 1e-12,
              "cascade enumeration");

    const std::vector<EveStrategy> strategies = {EveStrategy::none(), EveStrategy::intercept_resend(),
                                                 EveStrategy::cascade_attack(),
                                                 EveStrategy::weak_attack(1.0)};
    for (const auto& eve : strategies) {
        const auto t0 = Clock::now();
        const auto session = run_session({100000, eve, 6});
        const auto exact = enumerate_exact(eve);
        const double elapsed = seconds_since(t0);
        const auto& s = session.stats;
        const double n = static_cast<double>(s.n_sifted);
        const double se_q = std::sqrt(exact.qber * (1.0 - exact.qber) / n);
        const double se_a = std::sqrt(exact.eve_accuracy * (1.0 - exact.eve_accuracy) / n);
        const std::string name(to_string(eve.kind()));
        c.require(s.qber && std::abs(*s.qber - exact.qber) <= 3.0 * se_q, name + " qber");
        c.require(s.eve_accuracy && std::abs(*s.eve_accuracy - exact.eve_accuracy) <= 3.0 * se_a,
                  name + " accuracy");
        c.require(elapsed < 30.0, name + " runtime");
        c.detail << name << ": qber " << s.qber.value_or(NAN) << " vs " << exact.qber << ", acc "
                 << s.eve_accuracy.value_or(NAN) << " vs " << exact.eve_accuracy << " (" << elapsed
                 << " s); ";
    }
    return c;
}

Check norm_conservation() {
    Check c;
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> log_sigma(std::log(0.05), std::log(50.0));
    std::normal_distribution<double> normal;
    double worst = 0.0;
    auto track = [&](double norm_sq) { worst = std::max(worst, std::abs(norm_sq - 1.0)); };
    for (int i = 0; i < 10000; ++i) {
        const auto s = random_state(gen);
        track(measure_polarization(s, Basis::Rectilinear, u(gen)).collapsed.norm_sq());
        track(measure_polarization(s, Basis::Diagonal, u(gen)).collapsed.norm_sq());
        const double k = std::exp(40.0 * (u(gen) - 0.5));
        track(renormalize(s.alpha() * k, s.beta() * k).norm_sq());
        track(interferometer_unit(s).total_weight());
        track(apply_interferometer(interferometer_unit(s)).total_weight());
        track(propagate_cascade(s).final.total_weight());
        const double sigma = std::exp(log_sigma(gen));
        const auto cs = couple(s, sigma);
        track(std::norm(cs.alpha()) + std::norm(cs.beta()));
        const double p0 = sample_p0(cs, u(gen), normal(gen));
        track(readout_collapse(cs, p0).collapsed.norm_sq());
    }
    c.require(worst <= 1e-12, "norm drift");
    c.detail << "max |norm^2 - 1| " << worst << " over 10000 cases x 8 operations";
    return c;
}

struct CliRun {
    int code;
    std::string out;
};

CliRun run_cli(const std::string& args, const std::string& env) {
    const std::string cmd = env + " " BB84SIM_CLI_PATH " " + args + " 2>/dev/null";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) return {-1, ""};
    std::string out;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
    const int status = ::pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

Check determinism() {
    Check c;
    static const std::regex ts(R"("timestamp": "[^"]*")");
    const std::vector<std::string> commands = {
        "cascade --state D --shots 10000 --seed 3",
        "cascade --state A --shots 10000 --seed 3 --format csv",
        "sweep-sigma --min 0.05 --max 50 --steps 20",
        "bb84 --pulses 100000 --eve none --seed 11",
        "bb84 --pulses 100000 --eve intercept --seed 11 --format csv",
        "bb84 --pulses 100000 --eve cascade --seed 11",
        "bb84 --pulses 20000 --eve weak --sigma 0.7 --seed 11 --emit-records",
    };
    for (const auto& cmd : commands) {
        std::vector<std::string> outs;
        for (const char* env : {"SIM_THREADS=1", "SIM_THREADS=1", "SIM_THREADS=3", "SIM_THREADS=8"}) {
            const auto r = run_cli(cmd, env);
            c.require(r.code == 0, "exit code for '" + cmd + "'");
            outs.push_back(std::regex_replace(r.out, ts, R"("timestamp": "")"));
        }
        for (const auto& o : outs) c.require(o == outs[0] && !o.empty(), "output differs: '" + cmd + "'");
    }
    c.detail << commands.size() << " commands x SIM_THREADS {1, 1, 3, 8}";
    return c;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
        {"zero inner clicks", zero_inner_clicks},
        {"refutation delta", refutation_delta},
        {"collapse ratio identity", collapse_ratio_identity},
        {"information closed form", information_closed_form},
        {"tradeoff limits", tradeoff_limits},
        {"bb84 oracle equivalence", bb84_oracle_equivalence},
        {"norm conservation", norm_conservation},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check result;
        try {
            result = criteria[i].second();
        } catch (const std::exception& e) {
            result.ok = false;
            result.detail << "exception: " << e.what();
        }
        failures += !result.ok;
        std::cout << (result.ok ? "PASS" : "FAIL") << "  criterion " << i + 1 << ": "
                  << criteria[i].first << "  [" << result.detail.str() << "]" << std::endl;
    }
    std::cout << (failures ? "FAILED" : "ALL PASSED") << " (" << criteria.size() - failures << "/"
              << criteria.size() << ")" << std::endl;
    return failures ? 1 : 0;
}
