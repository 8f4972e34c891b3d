// control.hpp: piecewise control fields over a normalized horizon.
//
// Two segment kinds cover every construction we need: zero-order-hold
// samples and a resonant cosine whose phase is zero at the segment start.
// Amplitudes are physical field values; the propagator multiplies them by
// ||mu|| / ||H0||. Outside every segment the field is zero.

#pragma once

#include <string>
#include <variant>
#include <vector>

namespace dipid {

struct SampledSegment {
    double start = 0.0;
    double dt = 0.0;
    std::vector<double> amplitudes;

    double end() const noexcept { return start + dt * static_cast<double>(amplitudes.size()); }
};

struct ResonantSegment {
    double start = 0.0;
    double duration = 0.0;
    double amplitude = 0.0;
    double frequency = 0.0;

    double end() const noexcept { return start + duration; }
    double field(double tau) const;
};

using Segment = std::variant<SampledSegment, ResonantSegment>;

double segment_start(const Segment& s);
double segment_end(const Segment& s);

class ControlWaveform {
public:
    ControlWaveform() = default;
    // Validates: sorted, non-overlapping, inside [0, horizon], finite amplitudes.
    ControlWaveform(double horizon, std::vector<Segment> segments);

    static ControlWaveform zero(double horizon) { return ControlWaveform(horizon, {}); }

    double horizon() const noexcept { return horizon_; }
    const std::vector<Segment>& segments() const noexcept { return segments_; }
    bool empty() const noexcept { return segments_.empty(); }

    // Field value; segments are half-open [start, end).
    double field(double tau) const;
    double max_abs_amplitude() const;

    // Sorted boundaries of every segment plus 0 and the horizon.
    std::vector<double> boundaries() const;

    // Segments shifted by `offset`; horizon grows by the same amount.
    ControlWaveform shifted(double offset) const;
    // Same segments, zero field up to the longer horizon.
    ControlWaveform padded_to(double horizon) const;
    // Appends `other` after this waveform's horizon.
    ControlWaveform then(const ControlWaveform& other) const;

private:
    double horizon_ = 0.0;
    std::vector<Segment> segments_;
};

}  // namespace dipid
