#include "dipid/control.hpp"

#include "dipid/error.hpp"

#include <algorithm>
#include <cmath>

namespace dipid {

namespace {

// Slack for floating boundaries produced by repeated shifting.
constexpr double kBoundarySlack = 1e-9;

void validate_segment(const Segment& seg) {
    if (const auto* s = std::get_if<SampledSegment>(&seg)) {
        if (!std::isfinite(s->start) || !(s->dt > 0.0) || !std::isfinite(s->dt)) {
            throw ValidationError("sampled segment needs finite start and dt > 0");
        }
        if (s->amplitudes.empty()) throw ValidationError("sampled segment has no samples");
        for (double a : s->amplitudes) {
            if (!std::isfinite(a)) throw ValidationError("sampled amplitudes must be finite");
        }
    } else {
        const auto& r = std::get<ResonantSegment>(seg);
        if (!std::isfinite(r.start) || !(r.duration > 0.0) || !std::isfinite(r.duration) ||
            !std::isfinite(r.amplitude) || !std::isfinite(r.frequency)) {
            throw ValidationError("resonant segment needs finite start, amplitude, frequency and duration > 0");
        }
    }
}

}  // namespace

double ResonantSegment::field(double tau) const {
    return amplitude * std::cos(frequency * (tau - start));
}

double segment_start(const Segment& s) {
    return std::visit([](const auto& x) { return x.start; }, s);
}

double segment_end(const Segment& s) {
    return std::visit([](const auto& x) { return x.end(); }, s);
}

ControlWaveform::ControlWaveform(double horizon, std::vector<Segment> segments)
    : horizon_(horizon), segments_(std::move(segments)) {
    if (!std::isfinite(horizon_) || horizon_ < 0.0) throw ValidationError("horizon must be finite and >= 0");
    double prev_end = 0.0;
    for (const auto& seg : segments_) {
        validate_segment(seg);
        const double start = segment_start(seg);
        const double end = segment_end(seg);
        if (start < prev_end - kBoundarySlack) {
            throw ValidationError("segments must be sorted, non-overlapping and start at tau >= 0");
        }
        if (end > horizon_ + kBoundarySlack) throw ValidationError("segment extends beyond the horizon");
        prev_end = end;
    }
}

double ControlWaveform::field(double tau) const {
    for (const auto& seg : segments_) {
        if (tau < segment_start(seg)) return 0.0;
        if (tau >= segment_end(seg)) continue;
        if (const auto* s = std::get_if<SampledSegment>(&seg)) {
            auto idx = static_cast<std::size_t>(std::floor((tau - s->start) / s->dt));
            idx = std::min(idx, s->amplitudes.size() - 1);
            return s->amplitudes[idx];
        }
        return std::get<ResonantSegment>(seg).field(tau);
    }
    return 0.0;
}

double ControlWaveform::max_abs_amplitude() const {
    double m = 0.0;
    for (const auto& seg : segments_) {
        if (const auto* s = std::get_if<SampledSegment>(&seg)) {
            for (double a : s->amplitudes) m = std::max(m, std::abs(a));
        } else {
            m = std::max(m, std::abs(std::get<ResonantSegment>(seg).amplitude));
        }
    }
    return m;
}

std::vector<double> ControlWaveform::boundaries() const {
    std::vector<double> b{0.0};
    for (const auto& seg : segments_) {
        b.push_back(segment_start(seg));
        b.push_back(segment_end(seg));
    }
    b.push_back(horizon_);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
}

ControlWaveform ControlWaveform::shifted(double offset) const {
    std::vector<Segment> out = segments_;
    for (auto& seg : out) std::visit([offset](auto& x) { x.start += offset; }, seg);
    return ControlWaveform(horizon_ + offset, std::move(out));
}

ControlWaveform ControlWaveform::padded_to(double horizon) const {
    if (horizon < horizon_) throw ValidationError("cannot pad to a shorter horizon");
    return ControlWaveform(horizon, segments_);
}

ControlWaveform ControlWaveform::then(const ControlWaveform& other) const {
    std::vector<Segment> out = segments_;
    const ControlWaveform moved = other.shifted(horizon_);
    out.insert(out.end(), moved.segments_.begin(), moved.segments_.end());
    return ControlWaveform(moved.horizon_, std::move(out));
}

}  // namespace dipid
