#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "bb84sim/quantum_core.hpp"

namespace bb84sim {

enum class PolLabel : std::uint8_t { H, V };
enum class PathLabel : std::uint8_t { L, R };

inline constexpr std::size_t kCascadeStages = 3;

/// Which-path record, one label per interferometer stage traversed.
class PathHistory {
public:
    PathHistory() = default;
    PathHistory(std::initializer_list<PathLabel> labels);

    std::size_t size() const noexcept { return size_; }
    PathLabel operator[](std::size_t i) const { return labels_.at(i); }
    PathHistory extended(PathLabel next) const;

    friend bool operator==(const PathHistory& a, const PathHistory& b) noexcept;

private:
    std::array<PathLabel, kCascadeStages> labels_{};
    std::uint8_t size_ = 0;
};

struct Branch {
    PolLabel pol;
    PathHistory history;
    ComplexAmp amp;
};

/// Superposition of (polarization, path history) branches. Inserting a branch
/// whose key already exists adds amplitudes coherently; branches with
/// |amp|^2 below kZeroNormThreshold are dropped.
class BranchState {
public:
    void add(const Branch& branch);

    std::span<const Branch> branches() const noexcept { return branches_; }
    std::size_t size() const noexcept { return branches_.size(); }
    bool empty() const noexcept { return branches_.empty(); }
    double total_weight() const noexcept;

private:
    std::vector<Branch> branches_;
};

enum class DetectorId : std::uint8_t { OuterH, OuterV, InnerD, InnerA };

inline constexpr std::array<DetectorId, 4> kDetectorOrder = {
    DetectorId::OuterH, DetectorId::OuterV, DetectorId::InnerD, DetectorId::InnerA};

class DetectorDistribution {
public:
    DetectorDistribution() = default;
    // Throws InvalidArgument unless entries are >= 0 and sum to 1 within 1e-12.
    explicit DetectorDistribution(std::array<double, 4> probs);

    double operator[](DetectorId id) const noexcept {
        return probs_[static_cast<std::size_t>(id)];
    }
    const std::array<double, 4>& probs() const noexcept { return probs_; }

private:
    std::array<double, 4> probs_{1.0, 0.0, 0.0, 0.0};
};

struct CascadeResult {
    BranchState final;
    DetectorDistribution dist;
};

/// One polarizing interferometer: H picks up path R, V picks up path L.
BranchState interferometer_unit(const PolarizationState& state);

/// Applies one more interferometer stage to every branch.
BranchState apply_interferometer(const BranchState& state);

/// Full three-stage attack layout with four detectors.
///
/// Stage 1 splits the photon. Each output passes a second unit; branches whose
/// second label disagrees with the first are sent to the recombiner. Agreeing
/// branches pass a third unit: RRR reaches OuterH, LLL reaches OuterV, and any
/// disagreeing third label is also recombined. The recombined beam is coherent
/// (amplitudes of the same polarization add) and is analysed by a D/A
/// beamsplitter: D to InnerD, A to InnerA.
CascadeResult propagate_cascade(const PolarizationState& state);

/// Detector the refuted attack proposal assigns to each BB84 input.
DetectorId khokhlov_predicted_detector(Bb84Symbol symbol) noexcept;

/// Inverse of khokhlov_predicted_detector.
Bb84Symbol decode_detector(DetectorId id) noexcept;

/// Inverse-CDF sampling over kDetectorOrder with half-open intervals.
DetectorId sample_detector(const DetectorDistribution& dist, double rand);

bool is_inner(DetectorId id) noexcept;
std::string_view to_string(DetectorId id) noexcept;
std::string_view to_string(PathLabel label) noexcept;

}  // namespace bb84sim
