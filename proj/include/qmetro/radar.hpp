#ifndef QMETRO_RADAR_HPP
#define QMETRO_RADAR_HPP

#include "qmetro/information.hpp"
#include "qmetro/measurement.hpp"
#include "qmetro/model.hpp"
#include "qmetro/types.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace qmetro {

// Pulsed biphoton radar: a Gaussian signal/idler pair with cross-correlation
// kappa; the echo from a target at range `range` moving at `velocity` carries
// the parameters (tbar, omegabar) to be estimated jointly.
struct RadarScene {
    double kappa = 0.0;      // signal-idler correlation in [0, 1)
    double sigma0 = 1.0;     // sent-pulse bandwidth
    double sigma_i0 = 1.0;   // idler bandwidth
    double omega0 = 4.0;     // sent central frequency
    double omega_i0 = 4.0;   // idler central frequency
    double t0 = 0.0;         // sent central time
    double t_i0 = 0.0;       // idler central time
    double c = 1.0;          // propagation speed
    double velocity = 0.0;
    double range = 0.0;

    double doppler_factor() const { return (c - velocity) / (c + velocity); }
    double sigma() const { return doppler_factor() * sigma0; }
    double tbar() const { return t0 + 2.0 * range / (c - velocity); }
    double omegabar() const { return doppler_factor() * omega0; }
    double normalization() const {
        return std::sqrt(2.0 * sigma() * sigma_i0 / M_PI) * std::pow(1.0 - kappa * kappa, 0.25);
    }

    void validate() const {
        if (!(kappa >= 0.0 && kappa < 1.0))
            throw std::invalid_argument("radar: kappa must lie in [0, 1)");
        if (sigma0 <= 0 || sigma_i0 <= 0)
            throw std::invalid_argument("radar: bandwidths must be positive");
        if (std::abs(velocity) >= c) throw std::domain_error("radar: |velocity| must be below c");
        if (sigma() <= 0) throw std::domain_error("radar: echo bandwidth is not positive");
    }
};

// Midpoint-rule grid: n_t points per axis over windows of half-width w/sigma
// and w/sigma_i0 around the echo and idler central times.
struct TimeGrid {
    int n_t = 64;
    double w = 5.0;

    void validate() const {
        if (n_t < 16) throw ValidationError("grid: n_t must be at least 16");
        if (w < 4.0) throw ValidationError("grid: window half-width must be at least 4");
    }
};

// Closed-form information matrices for (tbar, omegabar).
struct RadarInformation {
    RealMatrix f_q;
    RealMatrix f_im;
};

inline RadarInformation analytic_info(const RadarScene& scene) {
    scene.validate();
    const double s2 = scene.sigma() * scene.sigma();
    RadarInformation info;
    info.f_q = RealMatrix::Zero(2, 2);
    info.f_q(0, 0) = 4.0 * s2;
    info.f_q(1, 1) = 1.0 / (s2 * (1.0 - scene.kappa * scene.kappa));
    info.f_im = RealMatrix::Zero(2, 2);
    info.f_im(0, 1) = -2.0;
    info.f_im(1, 0) = 2.0;
    return info;
}

// Achievable product bound sqrt(1-kappa)/sqrt(1+kappa) for the simultaneous
// time/frequency estimation, and the looser value sqrt(1-kappa^2)/2 implied by
// the quantum Cramer-Rao bound alone.
inline double refined_ak_bound(double kappa) {
    if (!(kappa >= 0.0 && kappa < 1.0))
        throw std::invalid_argument("refined_ak_bound: kappa must lie in [0, 1)");
    return std::sqrt(1.0 - kappa) / std::sqrt(1.0 + kappa);
}

inline double qcrb_product_bound(double kappa) {
    if (!(kappa >= 0.0 && kappa < 1.0))
        throw std::invalid_argument("qcrb_product_bound: kappa must lie in [0, 1)");
    return std::sqrt(1.0 - kappa * kappa) / 2.0;
}

struct RangeVelocity {
    double range = 0.0;
    double velocity = 0.0;
};

inline RangeVelocity params_to_range_velocity(double tbar, double omegabar,
                                              const RadarScene& scene) {
    if (omegabar <= 0 || scene.omega0 <= 0)
        throw std::domain_error("params_to_range_velocity: frequencies must be positive");
    RangeVelocity rv;
    rv.velocity = scene.c * (scene.omega0 - omegabar) / (scene.omega0 + omegabar);
    if (std::abs(rv.velocity) >= scene.c)
        throw std::domain_error("params_to_range_velocity: implied velocity reaches c");
    rv.range = (tbar - scene.t0) * (scene.c - rv.velocity) / 2.0;
    return rv;
}

inline std::pair<double, double> range_velocity_to_params(double range, double velocity,
                                                          const RadarScene& scene) {
    if (std::abs(velocity) >= scene.c)
        throw std::domain_error("range_velocity_to_params: |velocity| must be below c");
    const double f = (scene.c - velocity) / (scene.c + velocity);
    return {scene.t0 + 2.0 * range / (scene.c - velocity), f * scene.omega0};
}

// Discretized two-photon amplitude as a pure-state model over (tbar,
// omegabar). Quadrature weights are folded into the amplitudes, the state is
// renormalized on the grid, and the derivatives are the analytic bring-down
// factors projected back onto the normalization shell, so the discrete family
// is exactly self-consistent.
inline PureStateModel biphoton_model(const RadarScene& scene, const TimeGrid& grid = {}) {
    scene.validate();
    grid.validate();
    const double sig = scene.sigma();
    const double sig_i = scene.sigma_i0;
    const double tb_ref = scene.tbar();
    const double ti0 = scene.t_i0;
    const double wb_ref = scene.omegabar();
    const double wi0 = scene.omega_i0;
    const double kappa = scene.kappa;
    const int nt = grid.n_t;

    const double dt = 2.0 * grid.w / (sig * nt);
    const double dti = 2.0 * grid.w / (sig_i * nt);
    const double omega_max = std::max(std::abs(wb_ref), std::abs(wi0));
    const double max_spacing = M_PI / (4.0 * std::max(omega_max, 1e-12));
    if (std::max(dt, dti) > max_spacing) {
        const int suggested = static_cast<int>(
            std::ceil(8.0 * grid.w * omega_max / (M_PI * std::min(sig, sig_i))));
        throw ValidationError("grid: spacing " + std::to_string(std::max(dt, dti)) +
                              " under-resolves the phase oscillation; use n_t >= " +
                              std::to_string(suggested));
    }

    std::vector<double> t(nt), ti(nt);
    for (int k = 0; k < nt; ++k) {
        t[k] = tb_ref - grid.w / sig + (k + 0.5) * dt;
        ti[k] = ti0 - grid.w / sig_i + (k + 0.5) * dti;
    }
    const double weight = std::sqrt(dt * dti);
    const double norm_const = scene.normalization();

    PureStateModel m;
    m.d = nt * nt;
    m.n = 2;
    m.name = "radar_biphoton";
    m.labels = {"tbar", "omegabar"};
    m.reference_point = RealVector(2);
    m.reference_point << tb_ref, wb_ref;
    const double omega_resolved = M_PI / (4.0 * std::max(dt, dti));
    m.domain_check = [tb_ref, sig, w = grid.w, omega_resolved](const RealVector& x) {
        if (std::abs(x[0] - tb_ref) > 0.25 * w / sig)
            throw std::domain_error("radar: tbar leaves the resolved window");
        if (std::abs(x[1]) > omega_resolved)
            throw std::domain_error("radar: omegabar leaves the resolved band");
    };

    const auto raw_state = [=](const RealVector& x) {
        const double tb = x[0], wb = x[1];
        ComplexVector psi(nt * nt);
        for (int a = 0; a < nt; ++a) {
            const double u = t[a] - tb;
            for (int b = 0; b < nt; ++b) {
                const double v = ti[b] - ti0;
                const double phase = -wb * u - wi0 * v;
                const double decay =
                    -u * u * sig * sig - v * v * sig_i * sig_i + 2.0 * kappa * u * v * sig * sig_i;
                psi[a * nt + b] = norm_const * weight * std::exp(decay) *
                                  Complex(std::cos(phase), std::sin(phase));
            }
        }
        return psi;
    };
    m.state = [raw_state](const RealVector& x) {
        ComplexVector psi = raw_state(x);
        return ComplexVector(psi / psi.norm());
    };
    m.derivatives = [raw_state, t, ti, nt, sig, sig_i, kappa, ti0](const RealVector& x) {
        ComplexVector psi = raw_state(x);
        psi /= psi.norm();
        ComplexVector d_t(nt * nt), d_w(nt * nt);
        for (int a = 0; a < nt; ++a) {
            const double u = t[a] - x[0];
            for (int b = 0; b < nt; ++b) {
                const double v = ti[b] - ti0;
                const Complex factor_t(2.0 * sig * sig * u - 2.0 * kappa * sig * sig_i * v, x[1]);
                d_t[a * nt + b] = factor_t * psi[a * nt + b];
                d_w[a * nt + b] = Complex(0.0, -u) * psi[a * nt + b];
            }
        }
        detail::project_real_overlap(psi, d_t);
        detail::project_real_overlap(psi, d_w);
        return std::vector<ComplexVector>{d_t, d_w};
    };

    // coarse sanity on the raw discrete norm; the model itself is renormalized
    const double raw_norm = raw_state(m.reference_point).norm();
    if (std::abs(raw_norm - 1.0) > 1e-3)
        throw ValidationError("grid: discrete norm deviates by " +
                              std::to_string(std::abs(raw_norm - 1.0)) +
                              "; enlarge the window or refine the grid");
    return m;
}

// Deviation of the raw (un-renormalized) discrete norm from 1 at the
// reference point; a direct measure of window truncation.
inline double discrete_norm_error(const RadarScene& scene, const TimeGrid& grid = {}) {
    scene.validate();
    grid.validate();
    const double sig = scene.sigma();
    const int nt = grid.n_t;
    const double dt = 2.0 * grid.w / (sig * nt);
    const double dti = 2.0 * grid.w / (scene.sigma_i0 * nt);
    double sum = 0.0;
    const double nc2 = scene.normalization() * scene.normalization();
    for (int a = 0; a < nt; ++a) {
        const double u = -grid.w / sig + (a + 0.5) * dt;
        for (int b = 0; b < nt; ++b) {
            const double v = -grid.w / scene.sigma_i0 + (b + 0.5) * dti;
            const double decay = -u * u * sig * sig - v * v * scene.sigma_i0 * scene.sigma_i0 +
                                 2.0 * scene.kappa * u * v * sig * scene.sigma_i0;
            sum += nc2 * std::exp(2.0 * decay) * dt * dti;
        }
    }
    return std::abs(sum - 1.0);
}

// ---------------------------------------------------------------------------
// Entanglement sweep.
// ---------------------------------------------------------------------------

struct SweepRow {
    double kappa = 0.0;
    double qcrb_product_bound = 0.0;
    double refined_ak_bound = 0.0;
    double gamma_bound = 0.0;     // from the discretized model
    double gamma_achieved = 0.0;  // constructed measurement
    double achieved_product_bound = 0.0;  // sqrt(1-kappa^2) / gamma_achieved
    int grid_n = 0;
    double grid_w = 0.0;
};

inline std::vector<SweepRow> kappa_sweep(const std::vector<double>& kappas,
                                         const TimeGrid& grid = {},
                                         const MeasurementConfig& config = {}) {
    std::vector<SweepRow> rows;
    rows.reserve(kappas.size());
    for (const double kappa : kappas) {
        RadarScene scene;
        scene.kappa = kappa;
        scene.validate();
        const PureStateModel model = biphoton_model(scene, grid);
        const InformationBundle bundle = information_at(model, model.reference_point);
        const MeasurementPlan plan = design_measurement(bundle, config);
        SweepRow row;
        row.kappa = kappa;
        row.qcrb_product_bound = qcrb_product_bound(kappa);
        row.refined_ak_bound = refined_ak_bound(kappa);
        row.gamma_bound = plan.gamma_bound;
        row.gamma_achieved = plan.gamma_achieved;
        row.achieved_product_bound = std::sqrt(1.0 - kappa * kappa) / plan.gamma_achieved;
        row.grid_n = grid.n_t;
        row.grid_w = grid.w;
        rows.push_back(row);
    }
    return rows;
}

inline std::vector<double> parse_kappa_spec(const std::string& spec) {
    double start = 0, stop = 0;
    int count = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%d", &start, &stop, &count) == 3) {
        if (count < 1) throw ParseError("kappa spec: count must be positive");
        std::vector<double> ks;
        for (int i = 0; i < count; ++i)
            ks.push_back(count == 1 ? start : start + (stop - start) * i / (count - 1));
        return ks;
    }
    try {
        std::size_t pos = 0;
        const double single = std::stod(spec, &pos);
        if (pos == spec.size()) return {single};
    } catch (const std::exception&) {
    }
    throw ParseError("kappa spec: expected start:stop:count or a single value, got '" + spec + "'");
}

// CSV with 12 significant digits, columns pinned by the interface contract.
inline void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
    os << "kappa,qcrb_product_bound,refined_ak_bound,gamma_bound,gamma_achieved,grid_N,grid_W\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g,%.12g,%d,%.12g\n", r.kappa,
                      r.qcrb_product_bound, r.refined_ak_bound, r.gamma_bound, r.gamma_achieved,
                      r.grid_n, r.grid_w);
        os << buf;
    }
}

}  // namespace qmetro

#endif  // QMETRO_RADAR_HPP
