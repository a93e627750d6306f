#include "bb84sim/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bb84sim/error.hpp"

namespace bb84sim {

namespace {

PathLabel route(PolLabel pol) noexcept { return pol == PolLabel::H ? PathLabel::R : PathLabel::L; }

// Coherent sum of the branches that reach the D/A beamsplitter.
struct Recombiner {
    ComplexAmp h{0.0, 0.0};
    ComplexAmp v{0.0, 0.0};

    void feed(const Branch& b) { (b.pol == PolLabel::H ? h : v) += b.amp; }
};

}  // namespace

PathHistory::PathHistory(std::initializer_list<PathLabel> labels) {
    if (labels.size() > kCascadeStages) {
        throw Error(ErrorCode::InvalidArgument, "path history longer than the cascade");
    }
    for (PathLabel l : labels) labels_[size_++] = l;
}

PathHistory PathHistory::extended(PathLabel next) const {
    if (size_ >= kCascadeStages) {
        throw Error(ErrorCode::InvariantViolation, "path history already spans every stage");
    }
    PathHistory out = *this;
    out.labels_[out.size_++] = next;
    return out;
}

bool operator==(const PathHistory& a, const PathHistory& b) noexcept {
    return a.size_ == b.size_ && std::equal(a.labels_.begin(), a.labels_.begin() + a.size_,
                                            b.labels_.begin());
}

void BranchState::add(const Branch& branch) {
    auto it = std::find_if(branches_.begin(), branches_.end(), [&](const Branch& b) {
        return b.pol == branch.pol && b.history == branch.history;
    });
    if (it == branches_.end()) {
        if (std::norm(branch.amp) >= kZeroNormThreshold) branches_.push_back(branch);
        return;
    }
    it->amp += branch.amp;
    if (std::norm(it->amp) < kZeroNormThreshold) branches_.erase(it);
}

double BranchState::total_weight() const noexcept {
    return std::accumulate(branches_.begin(), branches_.end(), 0.0,
                           [](double acc, const Branch& b) { return acc + std::norm(b.amp); });
}

DetectorDistribution::DetectorDistribution(std::array<double, 4> probs) : probs_(probs) {
    double total = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw Error(ErrorCode::InvalidArgument, "detector probability must be finite and >= 0");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw Error(ErrorCode::InvalidArgument,
                    "detector probabilities sum to " + std::to_string(total));
    }
}

BranchState interferometer_unit(const PolarizationState& state) {
    require_unit_norm(state);
    BranchState out;
    out.add({PolLabel::H, PathHistory{PathLabel::R}, state.alpha()});
    out.add({PolLabel::V, PathHistory{PathLabel::L}, state.beta()});
    return out;
}

BranchState apply_interferometer(const BranchState& state) {
    BranchState out;
    for (const Branch& b : state.branches()) {
        out.add({b.pol, b.history.extended(route(b.pol)), b.amp});
    }
    return out;
}

CascadeResult propagate_cascade(const PolarizationState& state) {
    const BranchState first = interferometer_unit(state);
    const BranchState second = apply_interferometer(first);

    BranchState final;
    Recombiner recombiner;
    BranchState agreeing;
    for (const Branch& b : second.branches()) {
        if (b.history[1] != b.history[0]) {
            recombiner.feed(b);
            final.add(b);
        } else {
            agreeing.add(b);
        }
    }

    double outer_h = 0.0;
    double outer_v = 0.0;
    const BranchState third = apply_interferometer(agreeing);
    for (const Branch& b : third.branches()) {
        final.add(b);
        if (b.history[2] != b.history[1]) {
            recombiner.feed(b);
        } else if (b.history[2] == PathLabel::R) {
            outer_h += std::norm(b.amp);
        } else {
            outer_v += std::norm(b.amp);
        }
    }

    const double n = state.norm_sq();
    const double inner_d = std::norm(recombiner.h + recombiner.v) / 2.0;
    const double inner_a = std::norm(recombiner.h - recombiner.v) / 2.0;
    return {final, DetectorDistribution({outer_h / n, outer_v / n, inner_d / n, inner_a / n})};
}

DetectorId khokhlov_predicted_detector(Bb84Symbol symbol) noexcept {
    switch (symbol) {
        case Bb84Symbol::H: return DetectorId::OuterH;
        case Bb84Symbol::V: return DetectorId::OuterV;
        case Bb84Symbol::D: return DetectorId::InnerD;
        case Bb84Symbol::A: return DetectorId::InnerA;
    }
    return DetectorId::OuterH;
}

Bb84Symbol decode_detector(DetectorId id) noexcept {
    switch (id) {
        case DetectorId::OuterH: return Bb84Symbol::H;
        case DetectorId::OuterV: return Bb84Symbol::V;
        case DetectorId::InnerD: return Bb84Symbol::D;
        case DetectorId::InnerA: return Bb84Symbol::A;
    }
    return Bb84Symbol::H;
}

DetectorId sample_detector(const DetectorDistribution& dist, double rand) {
    if (!(rand >= 0.0 && rand < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "rand must lie in [0, 1)");
    }
    double cdf = 0.0;
    DetectorId last_nonzero = DetectorId::OuterH;
    for (DetectorId id : kDetectorOrder) {
        const double p = dist[id];
        if (p <= 0.0) continue;
        last_nonzero = id;
        cdf += p;
        if (rand < cdf) return id;
    }
    // rand fell into the rounding gap above the accumulated total.
    return last_nonzero;
}

bool is_inner(DetectorId id) noexcept {
    return id == DetectorId::InnerD || id == DetectorId::InnerA;
}

std::string_view to_string(DetectorId id) noexcept {
    switch (id) {
        case DetectorId::OuterH: return "OuterH";
        case DetectorId::OuterV: return "OuterV";
        case DetectorId::InnerD: return "InnerD";
        case DetectorId::InnerA: return "InnerA";
    }
    return "?";
}

std::string_view to_string(PathLabel label) noexcept { return label == PathLabel::L ? "L" : "R"; }

}  // namespace bb84sim
