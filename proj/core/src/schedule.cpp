#include "rolling/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rolling/errors.hpp"

namespace rolling {

namespace {

double cosine_alpha(double t) { return std::cos(M_PI * t / 2.0); }

// lambda(t) = 2 (log cos - log sin)(pi t / 2), d lambda / dt = -2 pi / sin(pi t)
double cosine_dlog_snr(double t) { return -2.0 * M_PI / std::sin(M_PI * t); }

double clip01(double x) { return std::min(1.0, std::max(0.0, x)); }

}  // namespace

SnrSchedule::SnrSchedule(double t_min)
    : alpha_(cosine_alpha), dlog_snr_(cosine_dlog_snr), t_min_(t_min) {
    if (!(t_min > 0.0 && t_min < 0.5)) {
        throw ConfigError("SnrSchedule: t_min must lie in (0, 0.5)");
    }
}

SnrSchedule::SnrSchedule(Fn alpha, Fn dlog_snr_dt, double t_min)
    : alpha_(std::move(alpha)), dlog_snr_(std::move(dlog_snr_dt)), t_min_(t_min) {
    if (!(t_min > 0.0 && t_min < 0.5)) {
        throw ConfigError("SnrSchedule: t_min must lie in (0, 0.5)");
    }
}

double SnrSchedule::clamp(double t) const {
    return std::min(t_max(), std::max(t_min_, t));
}

NoiseLevel SnrSchedule::at(double t) const {
    const double tc = clamp(t);
    const double alpha = alpha_(tc);
    const double sigma = std::sqrt(std::max(0.0, 1.0 - alpha * alpha));
    return NoiseLevel{alpha, sigma, 2.0 * (std::log(alpha) - std::log(sigma))};
}

double SnrSchedule::dlog_snr_dt(double t) const { return dlog_snr_(clamp(t)); }

std::string to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::Lin: return "lin";
        case ScheduleKind::Init: return "init";
        case ScheduleKind::InitRescaled: return "init_rescaled";
        case ScheduleKind::Constant: return "constant";
    }
    return "?";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
    if (name == "lin") return ScheduleKind::Lin;
    if (name == "init") return ScheduleKind::Init;
    if (name == "init_rescaled") return ScheduleKind::InitRescaled;
    if (name == "constant") return ScheduleKind::Constant;
    throw ConfigError("unknown schedule kind: " + name);
}

void ScheduleSpec::validate() const {
    if (window < 2) throw ConfigError("ScheduleSpec: window must be >= 2");
    if (n_clean < 0 || n_clean >= window) {
        throw ConfigError("ScheduleSpec: need 0 <= n_clean < window");
    }
}

double local_time(const ScheduleSpec& spec, int w, double t) {
    if (w < 0 || w >= spec.window) {
        throw std::out_of_range("local_time: frame index out of range");
    }
    const double W = spec.window;
    const double n = spec.n_clean;
    switch (spec.kind) {
        case ScheduleKind::Lin:
            return clip01((w + t - n) / (W - n));
        case ScheduleKind::Init:
            // Conditioning frames stay clean; generated frames follow the
            // clipped boundary ramp from the rolling state up to all-noise.
            if (w < spec.n_clean) return 0.0;
            return clip01((w - n) / (W - n) + t);
        case ScheduleKind::InitRescaled:
            // n_clean is ignored (only defined for the unconditioned window).
            return w / W + t * (1.0 - w / W);
        case ScheduleKind::Constant:
            return w < spec.n_clean ? 0.0 : clip01(t);
    }
    throw std::logic_error("unreachable");
}

std::vector<double> local_times(const ScheduleSpec& spec, double t) {
    std::vector<double> out(static_cast<size_t>(spec.window));
    for (int w = 0; w < spec.window; ++w) out[static_cast<size_t>(w)] = local_time(spec, w, t);
    return out;
}

double local_time_slope(const ScheduleSpec& spec, int w, double t) {
    if (w < 0 || w >= spec.window) {
        throw std::out_of_range("local_time_slope: frame index out of range");
    }
    const double W = spec.window;
    const double n = spec.n_clean;
    switch (spec.kind) {
        case ScheduleKind::Lin: {
            const double u = (w + t - n) / (W - n);
            return (u > 0.0 && u < 1.0) ? 1.0 / (W - n) : 0.0;
        }
        case ScheduleKind::Init: {
            if (w < spec.n_clean) return 0.0;
            const double u = (w - n) / (W - n) + t;
            return (u > 0.0 && u < 1.0) ? 1.0 : 0.0;
        }
        case ScheduleKind::InitRescaled:
            return 1.0 - w / W;
        case ScheduleKind::Constant:
            if (w < spec.n_clean) return 0.0;
            return (t > 0.0 && t < 1.0) ? 1.0 : 0.0;
    }
    throw std::logic_error("unreachable");
}

FramePartition partition_frames(const ScheduleSpec& spec, double s, double t) {
    if (!(s >= 0.0 && s < t && t <= 1.0)) {
        throw std::invalid_argument("partition_frames: need 0 <= s < t <= 1");
    }
    FramePartition part;
    for (int w = 0; w < spec.window; ++w) {
        const double sw = local_time(spec, w, s);
        const double tw = local_time(spec, w, t);
        if (sw == 0.0 && tw == 0.0) {
            part.clean.push_back(w);
        } else if (sw == 1.0 && tw == 1.0) {
            part.noise.push_back(w);
        } else if (sw < 1.0 && tw > sw) {
            part.win.push_back(w);
        }
        // s_w == t_w in (0, 1) never happens for the shipped schedules:
        // clipping is the only way a frame's local time can stall.
    }
    return part;
}

}  // namespace rolling
