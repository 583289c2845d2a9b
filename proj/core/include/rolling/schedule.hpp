#pragma once

#include <functional>
#include <string>
#include <vector>

namespace rolling {

/// Diffusion coefficients at a single local time.
struct NoiseLevel {
    double alpha;
    double sigma;
    double log_snr;  // lambda = 2 (log alpha - log sigma)
};

/// Variance-preserving SNR schedule over local time in [0, 1].
///
/// Defaults to the cosine schedule alpha(t) = cos(pi t / 2). A custom
/// schedule can be plugged in as long as alpha is strictly decreasing
/// with alpha^2 + sigma^2 = 1. Evaluation clamps t to [t_min, 1 - t_min]
/// so the log-SNR stays finite at the endpoints.
class SnrSchedule {
public:
    using Fn = std::function<double(double)>;

    explicit SnrSchedule(double t_min = 1e-4);
    SnrSchedule(Fn alpha, Fn dlog_snr_dt, double t_min);

    NoiseLevel at(double t) const;
    double dlog_snr_dt(double t) const;

    double clamp(double t) const;
    double t_min() const { return t_min_; }
    double t_max() const { return 1.0 - t_min_; }

private:
    Fn alpha_;
    Fn dlog_snr_;
    double t_min_;
};

enum class ScheduleKind {
    Lin,           // steady-state sliding schedule
    Init,          // boundary schedule: pure noise -> rolling state
    InitRescaled,  // clip-free boundary variant
    Constant,      // all generated frames share t (standard-diffusion baseline)
};

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& name);

/// Identifies a local-time map: which reparameterization, window size and
/// how many leading frames are pinned clean.
struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::Lin;
    int window = 2;
    int n_clean = 0;

    void validate() const;  // throws ConfigError
};

/// Local diffusion time t_w for frame w at global time t. Throws
/// std::out_of_range for w outside {0..W-1}.
double local_time(const ScheduleSpec& spec, int w, double t);

/// All W local times at global time t.
std::vector<double> local_times(const ScheduleSpec& spec, double t);

/// Analytic derivative d t_w / d t (0 inside clipped regions).
double local_time_slope(const ScheduleSpec& spec, int w, double t);

/// Frame categories for a denoising step from global time t down to s.
struct FramePartition {
    std::vector<int> clean;  // s_w = t_w = 0
    std::vector<int> noise;  // s_w = t_w = 1
    std::vector<int> win;    // s_w in [0,1), t_w in (s_w, 1]
};

/// Throws std::invalid_argument unless 0 <= s < t <= 1.
FramePartition partition_frames(const ScheduleSpec& spec, double s, double t);

}  // namespace rolling
