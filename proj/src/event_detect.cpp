#include "gazeclass/event_detect.hpp"

#include "text_util.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <unordered_map>

namespace gazeclass {

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::Fixation: return "fixation";
        case EventKind::SmoothPursuit: return "smooth_pursuit";
        case EventKind::Saccade: return "saccade";
        case EventKind::Gap: return "gap";
    }
    return "unknown";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
    if (text == "fixation") return EventKind::Fixation;
    if (text == "smooth_pursuit") return EventKind::SmoothPursuit;
    if (text == "saccade") return EventKind::Saccade;
    if (text == "gap") return EventKind::Gap;
    return std::nullopt;
}

void GeometryConfig::validate() const {
    if (!(px_per_deg_x > 0.0) || !(px_per_deg_y > 0.0)) throw Error("geometry: px per degree must be positive");
}

double px_to_deg(double dx, double dy, const GeometryConfig& geom) {
    return std::hypot(dx / geom.px_per_deg_x, dy / geom.px_per_deg_y);
}

double dispersion_px(std::span<const GazeSample> samples, DispersionMetric metric) {
    if (samples.empty()) return 0.0;
    if (metric == DispersionMetric::BoundingBoxDiagonal) {
        auto [min_x, max_x] = std::minmax_element(samples.begin(), samples.end(),
                                                  [](const auto& a, const auto& b) { return a.x_px < b.x_px; });
        auto [min_y, max_y] = std::minmax_element(samples.begin(), samples.end(),
                                                  [](const auto& a, const auto& b) { return a.y_px < b.y_px; });
        return std::hypot(max_x->x_px - min_x->x_px, max_y->y_px - min_y->y_px);
    }
    double best = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t j = i + 1; j < samples.size(); ++j) {
            best = std::max(best, std::hypot(samples[i].x_px - samples[j].x_px, samples[i].y_px - samples[j].y_px));
        }
    }
    return best;
}

SaccadeKinematics saccade_kinematics(std::span<const GazeSample> samples, std::size_t start, std::size_t end,
                                     const GeometryConfig& geom) {
    if (end <= start || end >= samples.size()) throw Error("degenerate saccade");
    std::vector<double> velocity;
    velocity.reserve(end - start);
    for (std::size_t k = start; k < end; ++k) {
        const double dt_s = (samples[k + 1].t_ms - samples[k].t_ms) / 1000.0;
        velocity.push_back(px_to_deg(samples[k + 1].x_px - samples[k].x_px, samples[k + 1].y_px - samples[k].y_px,
                                     geom) / dt_s);
    }

    SaccadeKinematics kin;
    double sum_v = 0.0;
    for (double v : velocity) {
        sum_v += v;
        kin.peak_velocity = std::max(kin.peak_velocity, v);
    }
    kin.mean_velocity = sum_v / static_cast<double>(velocity.size());
    kin.amplitude = kin.mean_velocity * (samples[end].t_ms - samples[start].t_ms) / 1000.0;

    double acc_sum = 0.0, dec_sum = 0.0;
    std::size_t acc_n = 0, dec_n = 0;
    for (std::size_t j = 0; j + 1 < velocity.size(); ++j) {
        const std::size_t k = start + j;
        // velocity j is centred between samples k and k+1
        const double dt_s = (samples[k + 2].t_ms - samples[k].t_ms) / 2000.0;
        const double a = (velocity[j + 1] - velocity[j]) / dt_s;
        if (a > 0.0) {
            acc_sum += a;
            ++acc_n;
            kin.peak_acceleration = std::max(kin.peak_acceleration, a);
        } else if (a < 0.0) {
            dec_sum += a;
            ++dec_n;
            kin.peak_deceleration = std::min(kin.peak_deceleration, a);
        }
    }
    if (acc_n > 0) kin.mean_acceleration = acc_sum / static_cast<double>(acc_n);
    if (dec_n > 0) kin.mean_deceleration = dec_sum / static_cast<double>(dec_n);
    return kin;
}

namespace {

enum class IntervalClass : unsigned char { Fast, Slow, Unknown };

struct SampleSpan {
    std::size_t first;
    std::size_t last;
};

GazeEvent make_saccade(const TrialRecord& trial, SampleSpan span, const GeometryConfig& geom) {
    const auto& s = trial.samples;
    GazeEvent ev;
    ev.kind = EventKind::Saccade;
    ev.start_idx = span.first;
    ev.end_idx = span.last;
    ev.start_ms = s[span.first].t_ms;
    ev.duration_ms = s[span.last].t_ms - s[span.first].t_ms;
    const auto kin = saccade_kinematics(s, span.first, span.last, geom);
    ev.amplitude_deg = kin.amplitude;
    ev.mean_velocity = kin.mean_velocity;
    ev.peak_velocity = kin.peak_velocity;
    ev.mean_acceleration = kin.mean_acceleration;
    ev.peak_acceleration = kin.peak_acceleration;
    ev.peak_deceleration = kin.peak_deceleration;
    ev.samples_valid = std::all_of(s.begin() + static_cast<std::ptrdiff_t>(span.first),
                                   s.begin() + static_cast<std::ptrdiff_t>(span.last) + 1,
                                   [](const GazeSample& g) { return g.usable(); });
    return ev;
}

}  // namespace

std::vector<GazeEvent> detect_events(const TrialRecord& trial, const GeometryConfig& geom,
                                     const DetectionConfig& config) {
    const auto& s = trial.samples;
    if (s.size() < 2) throw Error("too short");
    geom.validate();
    const std::size_t n = s.size();
    const std::size_t n_int = n - 1;

    // Interval k joins samples k and k+1. Intervals touching an invalid
    // sample have no trustworthy velocity for segmentation.
    std::vector<IntervalClass> cls(n_int);
    for (std::size_t k = 0; k < n_int; ++k) {
        if (!s[k].usable() || !s[k + 1].usable()) {
            cls[k] = IntervalClass::Unknown;
            continue;
        }
        const double dt_s = (s[k + 1].t_ms - s[k].t_ms) / 1000.0;
        const double v = px_to_deg(s[k + 1].x_px - s[k].x_px, s[k + 1].y_px - s[k].y_px, geom) / dt_s;
        cls[k] = v >= config.peak_threshold_deg_s ? IntervalClass::Fast : IntervalClass::Slow;
    }

    // Resolve each run of unknown intervals by its neighbours:
    //  fast | fast  -> tracking loss inside a saccade, absorbed
    //  slow | fast  -> saccade onset during loss, saccade starts at first invalid sample
    //  fast | slow  -> saccade landing during loss, saccade ends at last invalid sample
    //  otherwise    -> gap
    std::vector<SampleSpan> gaps;
    std::vector<std::pair<std::size_t, std::size_t>> lead_starts;  // first fast interval -> start sample
    std::vector<std::pair<std::size_t, std::size_t>> trail_ends;   // last fast interval -> end sample
    for (std::size_t k = 0; k < n_int;) {
        if (cls[k] != IntervalClass::Unknown) {
            ++k;
            continue;
        }
        const std::size_t p = k;
        while (k < n_int && cls[k] == IntervalClass::Unknown) ++k;
        const std::size_t q = k - 1;
        const bool left_fast = p > 0 && cls[p - 1] == IntervalClass::Fast;
        const bool right_fast = q + 1 < n_int && cls[q + 1] == IntervalClass::Fast;

        std::size_t first_invalid = p, last_invalid = q + 1;
        while (s[first_invalid].usable()) ++first_invalid;
        while (s[last_invalid].usable()) --last_invalid;

        if (left_fast && right_fast) {
            std::fill(cls.begin() + static_cast<std::ptrdiff_t>(p), cls.begin() + static_cast<std::ptrdiff_t>(q) + 1,
                      IntervalClass::Fast);
        } else if (right_fast) {
            lead_starts.emplace_back(q + 1, first_invalid);
        } else if (left_fast) {
            trail_ends.emplace_back(p - 1, last_invalid);
        } else {
            gaps.push_back({first_invalid, last_invalid});
        }
    }

    std::vector<SampleSpan> saccades;
    for (std::size_t k = 0; k < n_int;) {
        if (cls[k] != IntervalClass::Fast) {
            ++k;
            continue;
        }
        const std::size_t a = k;
        while (k < n_int && cls[k] == IntervalClass::Fast) ++k;
        SampleSpan span{a, k};  // intervals a..k-1 cover samples a..k
        for (const auto& [interval, start] : lead_starts)
            if (interval == a) span.first = start;
        for (const auto& [interval, end] : trail_ends)
            if (interval == k - 1) span.last = end;
        saccades.push_back(span);
    }

    std::vector<bool> taken(n, false);
    std::vector<GazeEvent> events;
    for (const auto& span : saccades) {
        for (std::size_t i = span.first; i <= span.last; ++i) taken[i] = true;
        events.push_back(make_saccade(trial, span, geom));
    }
    for (const auto& span : gaps) {
        for (std::size_t i = span.first; i <= span.last; ++i) taken[i] = true;
        GazeEvent ev;
        ev.kind = EventKind::Gap;
        ev.start_idx = span.first;
        ev.end_idx = span.last;
        ev.start_ms = s[span.first].t_ms;
        ev.duration_ms = s[span.last].t_ms - s[span.first].t_ms;
        ev.samples_valid = false;
        events.push_back(ev);
    }

    // Remaining runs are fixation candidates.
    for (std::size_t i = 0; i < n;) {
        if (taken[i]) {
            ++i;
            continue;
        }
        const std::size_t a = i;
        while (i < n && !taken[i]) ++i;
        const std::size_t b = i - 1;
        const double duration = s[b].t_ms - s[a].t_ms;
        if (b == a || duration < config.min_fixation_ms) continue;
        GazeEvent ev;
        ev.start_idx = a;
        ev.end_idx = b;
        ev.start_ms = s[a].t_ms;
        ev.duration_ms = duration;
        ev.dispersion_px = dispersion_px(std::span(s).subspan(a, b - a + 1), config.dispersion);
        ev.kind = ev.dispersion_px > config.sp_dispersion_px ? EventKind::SmoothPursuit : EventKind::Fixation;
        events.push_back(ev);
    }

    std::sort(events.begin(), events.end(),
              [](const GazeEvent& x, const GazeEvent& y) { return x.start_idx < y.start_idx; });
    return events;
}

double saccade_amplitude(const GazeEvent& event, const TrialRecord& trial, const GeometryConfig& geom) {
    if (event.kind != EventKind::Saccade) throw Error("amplitude requires a saccade");
    if (event.end_idx <= event.start_idx) throw Error("degenerate saccade");
    return saccade_kinematics(trial.samples, event.start_idx, event.end_idx, geom).amplitude;
}

double mean_deceleration(const GazeEvent& event, const TrialRecord& trial, const GeometryConfig& geom) {
    if (event.kind != EventKind::Saccade) throw Error("deceleration requires a saccade");
    return saccade_kinematics(trial.samples, event.start_idx, event.end_idx, geom).mean_deceleration;
}

namespace {

std::string field(double v) { return std::isnan(v) ? std::string() : detail::format_double(v); }

double read_field(const std::string& text, std::size_t line) {
    if (text.empty()) return kNotApplicable;
    const auto v = detail::parse_double(text);
    if (!v) throw Error("events csv line " + std::to_string(line) + ": bad number '" + text + "'");
    return *v;
}

}  // namespace

void write_events_csv(std::ostream& out, const EventsByTrial& events) {
    out << "trial_key,kind,start_ms,duration_ms,dispersion_px,amplitude_deg,mean_vel,peak_vel,mean_acc,peak_acc,"
           "peak_dec,valid\n";
    for (const auto& [key, list] : events) {
        for (const auto& e : list) {
            out << detail::csv_escape(key) << ',' << to_string(e.kind) << ',' << detail::format_double(e.start_ms)
                << ',' << detail::format_double(e.duration_ms) << ',' << field(e.dispersion_px) << ','
                << field(e.amplitude_deg) << ',' << field(e.mean_velocity) << ',' << field(e.peak_velocity) << ','
                << field(e.mean_acceleration) << ',' << field(e.peak_acceleration) << ','
                << field(e.peak_deceleration) << ',' << (e.samples_valid ? 1 : 0) << '\n';
        }
    }
}

EventsByTrial read_events_csv(std::istream& in, const DatasetManifest& manifest) {
    std::unordered_map<std::string, const TrialRecord*> trials;
    for (const auto& t : manifest.trials) trials.emplace(t.key(), &t);

    auto index_of = [](const TrialRecord& trial, double t_ms, std::size_t line) {
        const auto& s = trial.samples;
        // end times are reconstructed as start + duration, allow rounding slack
        const double slack = 1e-9 * std::max(1.0, std::abs(t_ms));
        auto it = std::lower_bound(s.begin(), s.end(), t_ms - slack,
                                   [](const GazeSample& g, double t) { return g.t_ms < t; });
        if (it == s.end() || std::abs(it->t_ms - t_ms) > slack)
            throw Error("events csv line " + std::to_string(line) + ": timestamp not in trial");
        return static_cast<std::size_t>(it - s.begin());
    };

    EventsByTrial out;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw Error("events csv: missing header");
    ++line_no;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split_fields(line, ',');
        if (f.size() != 12) throw Error("events csv line " + std::to_string(line_no) + ": expected 12 fields");
        const auto it = trials.find(f[0]);
        if (it == trials.end()) throw Error("events csv line " + std::to_string(line_no) + ": unknown trial " + f[0]);
        const auto kind = parse_event_kind(f[1]);
        if (!kind) throw Error("events csv line " + std::to_string(line_no) + ": unknown kind " + f[1]);
        GazeEvent e;
        e.kind = *kind;
        e.start_ms = read_field(f[2], line_no);
        e.duration_ms = read_field(f[3], line_no);
        e.dispersion_px = read_field(f[4], line_no);
        e.amplitude_deg = read_field(f[5], line_no);
        e.mean_velocity = read_field(f[6], line_no);
        e.peak_velocity = read_field(f[7], line_no);
        e.mean_acceleration = read_field(f[8], line_no);
        e.peak_acceleration = read_field(f[9], line_no);
        e.peak_deceleration = read_field(f[10], line_no);
        e.samples_valid = f[11] == "1";
        e.start_idx = index_of(*it->second, e.start_ms, line_no);
        e.end_idx = index_of(*it->second, e.start_ms + e.duration_ms, line_no);
        out[f[0]].push_back(e);
    }
    return out;
}

}  // namespace gazeclass
