#include "esfp/baselines.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace esfp {

namespace {

// Polynomial fit basis for one window: A[i][m] = (i - half)^m.
Eigen::MatrixXd savgol_basis(std::size_t window, std::size_t order) {
    const double half = static_cast<double>(window / 2);
    Eigen::MatrixXd a(window, order + 1);
    for (std::size_t i = 0; i < window; ++i) {
        double p = 1.0;
        const double x = static_cast<double>(i) - half;
        for (std::size_t m = 0; m <= order; ++m) {
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) = p;
            p *= x;
        }
    }
    return a;
}

}  // namespace

PoseSequence savgol_smooth(const PoseSequence& seq, std::size_t window, std::size_t order) {
    if (window % 2 == 0 || window < 1)
        throw std::invalid_argument("savgol_smooth: window must be odd");
    if (order >= window) throw std::invalid_argument("savgol_smooth: order must be < window");
    const std::size_t t_len = seq.frames;
    // fall back to the largest odd window that fits the sequence
    std::size_t w = window;
    if (t_len < w) w = (t_len % 2 == 1) ? t_len : t_len - 1;
    if (w < 1) w = 1;
    std::size_t ord = std::min(order, w - 1);
    if (w == 1) return seq;

    const std::size_t half = w / 2;
    const Eigen::MatrixXd a = savgol_basis(w, ord);
    const Eigen::MatrixXd pinv =
        (a.transpose() * a).ldlt().solve(a.transpose());  // (order+1) x w
    const Eigen::VectorXd center_coeffs = pinv.row(0);    // value at window center

    PoseSequence out = seq;
    Eigen::VectorXd series(static_cast<Eigen::Index>(t_len));
    for (std::size_t j = 0; j < seq.joints; ++j) {
        for (std::size_t d = 0; d < 3; ++d) {
            for (std::size_t t = 0; t < t_len; ++t)
                series(static_cast<Eigen::Index>(t)) = seq.at(t, j, d);
            // interior
            for (std::size_t t = half; t + half < t_len; ++t) {
                double v = 0;
                for (std::size_t k = 0; k < w; ++k)
                    v += center_coeffs(static_cast<Eigen::Index>(k)) *
                         series(static_cast<Eigen::Index>(t - half + k));
                out.at(t, j, d) = v;
            }
            // edges: evaluate the polynomial fitted on the first/last full window
            const Eigen::VectorXd beta_head =
                pinv * series.head(static_cast<Eigen::Index>(w));
            const Eigen::VectorXd beta_tail =
                pinv * series.tail(static_cast<Eigen::Index>(w));
            auto eval_poly = [&](const Eigen::VectorXd& beta, double x) {
                double v = 0, p = 1;
                for (Eigen::Index m = 0; m < beta.size(); ++m) {
                    v += beta(m) * p;
                    p *= x;
                }
                return v;
            };
            for (std::size_t t = 0; t < half; ++t)
                out.at(t, j, d) =
                    eval_poly(beta_head, static_cast<double>(t) - static_cast<double>(half));
            for (std::size_t t = t_len - half; t < t_len; ++t)
                out.at(t, j, d) = eval_poly(
                    beta_tail,
                    static_cast<double>(t) - static_cast<double>(t_len - 1 - half));
        }
    }
    return out;
}

PoseSequence particle_filter_smooth(const PoseSequence& seq, std::size_t particles,
                                    double process_sigma, double meas_sigma, Rng& rng,
                                    ParticleFilterStats* stats) {
    if (particles < 1) throw std::invalid_argument("particle_filter_smooth: N >= 1 required");
    if (process_sigma < 0 || meas_sigma < 0)
        throw std::invalid_argument("particle_filter_smooth: sigmas must be >= 0");
    const std::size_t n = particles;
    const std::size_t t_len = seq.frames;
    PoseSequence out(t_len, seq.joints);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    std::vector<double> px(n * 3), pv(n * 3), weights(n);
    std::vector<double> nx(n * 3), nv(n * 3);
    for (std::size_t j = 0; j < seq.joints; ++j) {
        // init at the first observation; velocity from the first difference
        const Vec3 p0 = seq.joint(0, j);
        const Vec3 v0 = t_len >= 2 ? seq.joint(1, j) - p0 : Vec3{0, 0, 0};
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t d = 0; d < 3; ++d) {
                px[i * 3 + d] = p0[d];
                pv[i * 3 + d] = v0[d];
            }
        std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(n));

        for (std::size_t t = 0; t < t_len; ++t) {
            if (t > 0) {
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t d = 0; d < 3; ++d) {
                        pv[i * 3 + d] += process_sigma > 0 ? process_sigma * gauss(rng) : 0.0;
                        px[i * 3 + d] += pv[i * 3 + d] +
                                         (process_sigma > 0 ? process_sigma * gauss(rng) : 0.0);
                    }
            }
            const Vec3 obs = seq.joint(t, j);
            if (meas_sigma > 0) {
                double max_log = -1e300;
                std::vector<double> logw(n);
                for (std::size_t i = 0; i < n; ++i) {
                    double r2 = 0;
                    for (std::size_t d = 0; d < 3; ++d) {
                        const double r = px[i * 3 + d] - obs[d];
                        r2 += r * r;
                    }
                    logw[i] = std::log(weights[i] + 1e-300) - r2 / (2 * meas_sigma * meas_sigma);
                    max_log = std::max(max_log, logw[i]);
                }
                double sum = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    weights[i] = std::exp(logw[i] - max_log);
                    sum += weights[i];
                }
                if (!(sum > 0) || !std::isfinite(sum)) {
                    // weight collapse: restart the cloud around the observation
                    if (stats) stats->degenerate_reinits++;
                    for (std::size_t i = 0; i < n; ++i) {
                        for (std::size_t d = 0; d < 3; ++d) {
                            px[i * 3 + d] = obs[d] + meas_sigma * gauss(rng);
                            pv[i * 3 + d] = 0;
                        }
                        weights[i] = 1.0 / static_cast<double>(n);
                    }
                } else {
                    for (std::size_t i = 0; i < n; ++i) weights[i] /= sum;
                }
                double ess_den = 0;
                for (double wgt : weights) ess_den += wgt * wgt;
                if (1.0 / ess_den < static_cast<double>(n) / 2.0) {
                    // systematic resampling
                    if (stats) stats->resample_events++;
                    const double step = 1.0 / static_cast<double>(n);
                    double u = u01(rng) * step;
                    double c = weights[0];
                    std::size_t idx = 0;
                    for (std::size_t i = 0; i < n; ++i) {
                        while (u > c && idx + 1 < n) c += weights[++idx];
                        for (std::size_t d = 0; d < 3; ++d) {
                            nx[i * 3 + d] = px[idx * 3 + d];
                            nv[i * 3 + d] = pv[idx * 3 + d];
                        }
                        u += step;
                    }
                    px.swap(nx);
                    pv.swap(nv);
                    std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(n));
                }
            }
            Vec3 mean{0, 0, 0};
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t d = 0; d < 3; ++d) mean[d] += weights[i] * px[i * 3 + d];
            out.set_joint(t, j, mean);
        }
    }
    return out;
}

namespace {

double smoothing_alpha(double cutoff, double dt) {
    const double r = 2.0 * std::numbers::pi * cutoff * dt;
    return r / (r + 1.0);
}

}  // namespace

Vec3 one_euro_step(OneEuroState& state, const Vec3& sample, double t_seconds, double min_cutoff,
                   double beta, double d_cutoff) {
    if (!state.initialized) {
        state.initialized = true;
        state.t = t_seconds;
        state.x = sample;
        state.dx = {0, 0, 0};
        return sample;  // first sample passes through
    }
    const double dt = t_seconds - state.t;
    if (dt <= 0) throw std::invalid_argument("one_euro_step: timestamps must increase");
    state.t = t_seconds;
    const double ad = smoothing_alpha(d_cutoff, dt);
    Vec3 filtered;
    for (std::size_t d = 0; d < 3; ++d) {
        const double raw_dx = (sample[d] - state.x[d]) / dt;
        state.dx[d] += ad * (raw_dx - state.dx[d]);
        const double cutoff = min_cutoff + beta * std::fabs(state.dx[d]);
        const double a = smoothing_alpha(cutoff, dt);
        state.x[d] += a * (sample[d] - state.x[d]);
        filtered[d] = state.x[d];
    }
    return filtered;
}

}  // namespace esfp
