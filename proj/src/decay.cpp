#include "pendlab/decay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pendlab {

namespace {

struct LogFit {
    double kappa = 0.0, log_c = 0.0, residual = 0.0;
    int n = 0;
    bool ok = false;
};

LogFit log_linear(const std::vector<double>& t, const std::vector<double>& ly) {
    LogFit f;
    f.n = static_cast<int>(t.size());
    if (f.n < 2) return f;
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (int i = 0; i < f.n; ++i) {
        st += t[i];
        sy += ly[i];
        stt += t[i] * t[i];
        sty += t[i] * ly[i];
    }
    const double det = f.n * stt - st * st;
    if (det <= 0) {  // all samples at one time
        return f;
    }
    const double slope = (f.n * sty - st * sy) / det;
    f.log_c = (sy - slope * st) / f.n;
    f.kappa = -slope;
    for (int i = 0; i < f.n; ++i)
        f.residual = std::max(f.residual,
                              std::abs(ly[i] - (f.log_c - f.kappa * t[i])));
    f.ok = true;
    return f;
}

// Strict interior local maxima of y, for envelope fits of oscillatory decay.
// Window endpoints are never maxima candidates: a window cut mid-fall or
// mid-rise would otherwise inject a point far below the envelope, and the
// max-deviation residual is unforgiving about single outliers.
void local_maxima(const std::vector<double>& t, const std::vector<double>& y,
                  std::vector<double>& tm, std::vector<double>& ym) {
    const int n = static_cast<int>(t.size());
    for (int i = 1; i + 1 < n; ++i) {
        if (y[i] >= y[i - 1] && y[i] > y[i + 1]) {
            tm.push_back(t[i]);
            ym.push_back(y[i]);
        }
    }
}

}  // namespace

DecayFit fit_exponential(const std::vector<double>& t, const std::vector<double>& y,
                         double window_a, double window_b,
                         const std::string& series_id) {
    if (t.size() != y.size())
        throw std::invalid_argument("fit_exponential: series length mismatch");
    DecayFit fit;
    fit.series_id = series_id;
    fit.t_a = window_a;
    fit.t_b = window_b;

    std::vector<double> tw, yw;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < window_a || t[i] > window_b) continue;
        double v = y[i];
        if (!(v > 0.0)) {
            v = 1e-300;
            fit.clipped = true;
        }
        tw.push_back(t[i]);
        yw.push_back(v);
    }
    fit.n_samples = static_cast<int>(tw.size());
    if (fit.n_samples < 20) {
        fit.diagnostic = "fewer than 20 positive samples in window";
        return fit;
    }

    std::vector<double> ly(tw.size());
    for (std::size_t i = 0; i < tw.size(); ++i) ly[i] = std::log(yw[i]);
    LogFit plain = log_linear(tw, ly);
    if (!plain.ok) {
        fit.diagnostic = "degenerate time window";
        return fit;
    }
    LogFit best = plain;
    bool used_envelope = false;
    if (plain.residual > 0.1) {
        std::vector<double> tm, ym;
        local_maxima(tw, yw, tm, ym);
        if (tm.size() >= 5) {
            std::vector<double> lym(ym.size());
            for (std::size_t i = 0; i < ym.size(); ++i) lym[i] = std::log(ym[i]);
            LogFit env = log_linear(tm, lym);
            if (env.ok && env.residual < plain.residual) {
                best = env;
                used_envelope = true;
            }
        }
    }

    fit.valid = true;
    fit.envelope = used_envelope;
    fit.kappa = best.kappa;
    fit.amplitude = std::exp(best.log_c);
    fit.residual = best.residual;
    fit.n_samples = best.n;
    const double span = fit.kappa * (window_b - window_a);
    fit.well_conditioned = (best.n >= 20) && (std::abs(span) >= 2.0);
    if (!fit.well_conditioned)
        fit.diagnostic = "window spans fewer than 2 e-foldings";
    return fit;
}

Series series_from_trajectory(const Trajectory& traj, const PhysicalParams& p,
                              const std::string& id) {
    Series s;
    s.id = id;
    const auto& rec = traj.records;
    const auto& en = traj.energy;
    s.t.reserve(rec.size());
    s.y.reserve(rec.size());
    auto push_col = [&](auto getter) {
        for (const auto& r : rec) {
            s.t.push_back(r.t);
            s.y.push_back(getter(r));
        }
    };
    if (id == "v_l2") {
        push_col([](const TrajectoryRecord& r) { return r.v_l2; });
    } else if (id == "v_alpha") {
        push_col([](const TrajectoryRecord& r) { return r.v_alpha; });
    } else if (id == "v_h2proxy") {
        push_col([](const TrajectoryRecord& r) { return r.v_h2proxy; });
    } else if (id == "omega") {
        push_col([](const TrajectoryRecord& r) { return std::abs(r.omega); });
    } else if (id == "gamma") {
        push_col([](const TrajectoryRecord& r) {
            return std::hypot(r.gamma1, r.gamma2);
        });
    } else if (id == "chi_err") {
        push_col([](const TrajectoryRecord& r) {
            return std::hypot(r.chi1 - 1.0, r.chi2);
        });
    } else if (id == "composite") {
        push_col([](const TrajectoryRecord& r) {
            return r.v_alpha + std::abs(r.omega) + std::hypot(r.gamma1, r.gamma2);
        });
    } else if (id == "v_t") {
        for (const auto& e : en) {
            s.t.push_back(e.t);
            s.y.push_back(std::sqrt(std::max(e.E1, 0.0) / std::max(p.rho, 1e-300)));
        }
    } else if (id == "omega_dot") {
        // d(omega)/dt = da/dt + (beta^2/C) gamma2; da/dt by central differences
        // of the recorded coupling scalar.
        const int n = static_cast<int>(en.size());
        if (n != static_cast<int>(rec.size()) || n < 3) return s;
        for (int i = 1; i + 1 < n; ++i) {
            const double dt2 = en[i + 1].t - en[i - 1].t;
            if (dt2 <= 0) continue;
            const double adot = (en[i + 1].a - en[i - 1].a) / dt2;
            s.t.push_back(en[i].t);
            s.y.push_back(std::abs(adot + (p.beta_sq / p.c_total) * rec[i].gamma2));
        }
    } else {
        throw std::invalid_argument("series_from_trajectory: unknown series id '" +
                                    id + "'");
    }
    return s;
}

TransientReport detect_t0(const Trajectory& traj, double energy_threshold) {
    TransientReport rep;
    const auto& en = traj.energy;
    const auto& rec = traj.records;
    const int n = static_cast<int>(en.size());
    if (n < 2 || rec.size() != en.size()) {
        rep.diagnostic = "trajectory has too few energy records";
        return rep;
    }
    // suffix maximum of kinetic energy; threshold condition must hold for all
    // later records, not just instantaneously.
    std::vector<double> suffix_max(n);
    suffix_max[n - 1] = en[n - 1].kinetic;
    for (int i = n - 2; i >= 0; --i)
        suffix_max[i] = std::max(en[i].kinetic, suffix_max[i + 1]);

    std::vector<double> tt(n), vv(n);
    for (int i = 0; i < n; ++i) {
        tt[i] = rec[i].t;
        vv[i] = rec[i].v_l2;
    }
    const double floor = energy_threshold + 1e-30;
    for (int i = 0; i < n; ++i) {
        if (suffix_max[i] > floor) continue;
        std::vector<double> twin(tt.begin() + i, tt.end());
        std::vector<double> ywin(vv.begin() + i, vv.end());
        DecayFit f = fit_exponential(twin, ywin, twin.front(), twin.back(), "v_l2");
        if (!f.valid || f.residual >= 0.1) continue;
        rep.found = true;
        rep.t0 = tt[i];
        rep.index = i;
        rep.tail_residual = f.residual;
        return rep;
    }
    rep.diagnostic = "horizon exhaustion";
    return rep;
}

RateVsGap rate_vs_gap(const DecayFit& fit, const SpectrumReport& report) {
    if (report.xi != +1)
        throw std::invalid_argument("rate_vs_gap: requires the xi=+1 branch");
    if (!(report.spectral_gap > 0.0))
        throw std::invalid_argument("rate_vs_gap: spectral gap must be positive");
    RateVsGap r;
    r.kappa = fit.kappa;
    r.gap = report.spectral_gap;
    r.ratio = fit.kappa / report.spectral_gap;
    r.pass = fit.valid && r.ratio >= 0.8;
    return r;
}

}  // namespace pendlab
