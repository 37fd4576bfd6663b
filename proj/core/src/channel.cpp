// SPDX-License-Identifier: Apache-2.0
//
// fdmimo: system-level simulation toolkit for FD-MIMO downlink
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "fdmimo/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace fdmimo {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

double wrap_azimuth_deg(double az) {
    while (az > 180.0) az -= 360.0;
    while (az < -180.0) az += 360.0;
    return az;
}

double clamp_elevation_deg(double el) {
    return std::min(90.0, std::max(-90.0, el));
}

// Polarization coupling amplitudes chosen so E||P||_F^2 = n_rx * n_txpol,
// keeping E||H||_F^2 = N_R * N_T under unit large-scale gain.
double copolar_amplitude(int n_rx, int n_txpol, double xpr_linear) {
    int n_co = 0;
    for (int r = 0; r < n_rx; ++r) {
        for (int t = 0; t < n_txpol; ++t) {
            if (r == t) ++n_co;
        }
    }
    const int n_cross = n_rx * n_txpol - n_co;
    return std::sqrt(static_cast<double>(n_rx * n_txpol) /
                     (n_co + n_cross / xpr_linear));
}

} // namespace

Scenario Scenario::uma3d() {
    Scenario s;
    s.kind = ScenarioKind::UMa3D;
    s.isd_m = 500.0;
    s.bs_height_m = 25.0;
    s.height_gain_db_per_m = 0.6;
    s.min_bs_ue_distance_m = 35.0;
    s.los.decay_m = 63.0;
    return s;
}

Scenario Scenario::umi3d() {
    Scenario s;
    s.kind = ScenarioKind::UMi3D;
    s.isd_m = 200.0;
    s.bs_height_m = 10.0;
    s.height_gain_db_per_m = 0.3;
    s.min_bs_ue_distance_m = 10.0;
    s.los.decay_m = 36.0;
    return s;
}

double los_probability(const Scenario& scenario, double distance_2d_m, double ue_height_m) {
    if (distance_2d_m < 0.0) {
        throw std::invalid_argument("los_probability: distance must be nonnegative");
    }
    if (ue_height_m < 1.5) {
        throw std::invalid_argument("los_probability: UE height must be >= 1.5 m");
    }
    if (distance_2d_m == 0.0) {
        return 1.0;
    }
    const auto& p = scenario.los;
    const double decay = std::exp(-distance_2d_m / p.decay_m);
    const double base = std::min(p.near_m / distance_2d_m, 1.0) * (1.0 - decay) + decay;
    const double uplift = std::min(1.0, (ue_height_m - 1.5) / p.height_scale_m);
    return base + (1.0 - base) * uplift;
}

double pathloss_db(const Scenario& scenario, double distance_3d_m, double ue_height_m,
                   bool los) {
    if (distance_3d_m <= 0.0) {
        throw std::invalid_argument("pathloss_db: distance must be positive");
    }
    const auto& p = scenario.pathloss;
    const double f_ghz = scenario.carrier_hz / 1.0e9;
    const double freq_term = 20.0 * std::log10(f_ghz);
    const double log_d = std::log10(distance_3d_m);
    const double pl_los = p.los_const_db + p.los_exp_db * log_d + freq_term;
    double pl = pl_los;
    if (!los) {
        pl = std::max(pl_los, p.nlos_const_db + p.nlos_exp_db * log_d + freq_term);
    }
    return pl - scenario.height_gain_db_per_m * (ue_height_m - 1.5);
}

double elevation_spread_deg(const Scenario& scenario, double distance_2d_m,
                            double ue_height_m) {
    if (distance_2d_m <= 0.0) {
        throw std::invalid_argument("elevation_spread_deg: distance must be positive");
    }
    const auto& p = scenario.esd;
    const double dist_factor =
        std::pow(distance_2d_m / p.anchor_distance_m, -p.distance_exponent);
    const double h_eff = std::min(ue_height_m, scenario.bs_height_m);
    const double height_factor = std::exp(-(h_eff - 1.5) / p.height_scale_m);
    const double esd = p.anchor_deg * dist_factor * height_factor;
    return std::min(p.max_deg, std::max(p.min_deg, esd));
}

LinkState draw_link_state(const Scenario& scenario, const UePosition& ue, Philox4x32& rng) {
    if (ue.height_m < 1.5) {
        throw std::invalid_argument("draw_link_state: UE height must be >= 1.5 m");
    }
    LinkState link;
    link.distance_2d_m = std::max(ue.distance_2d(), 1.0);
    const double dz = ue.height_m - scenario.bs_height_m;
    link.distance_3d_m = std::sqrt(link.distance_2d_m * link.distance_2d_m + dz * dz);

    link.los = rng.uniform() < los_probability(scenario, link.distance_2d_m, ue.height_m);
    const double sigma =
        link.los ? scenario.shadow_sigma_los_db : scenario.shadow_sigma_nlos_db;
    link.shadow_db = sigma * rng.normal();
    link.pathloss_db = pathloss_db(scenario, link.distance_3d_m, ue.height_m, link.los);

    double loss_db = link.pathloss_db + link.shadow_db;
    if (ue.indoor) {
        loss_db += scenario.o2i_loss_db;
    }
    link.amplitude = std::pow(10.0, -loss_db / 20.0);
    link.esd_deg = elevation_spread_deg(scenario, link.distance_2d_m, ue.height_m);
    link.los_dir.azimuth_deg = wrap_azimuth_deg(std::atan2(ue.y_m, ue.x_m) / kDegToRad);
    link.los_dir.elevation_deg = std::atan2(dz, link.distance_2d_m) / kDegToRad;
    return link;
}

ChannelRealization generate_channel(const ArrayGeometry& geometry, const Scenario& scenario,
                                    const UePosition& ue, Philox4x32& rng,
                                    const ChannelOptions& options, const LinkState* link) {
    geometry.config().validate();
    if (options.n_rx != 1 && options.n_rx != 2) {
        throw std::invalid_argument("generate_channel: n_rx must be 1 or 2");
    }

    ChannelRealization ch;
    ch.array = geometry.config();
    ch.n_rx = options.n_rx;
    ch.link = (link != nullptr) ? *link : draw_link_state(scenario, ue, rng);
    ch.applied_amplitude = options.include_large_scale ? ch.link.amplitude : 1.0;

    const int n_cl =
        options.n_clusters_override > 0 ? options.n_clusters_override : scenario.n_clusters;
    const int n_txpol = geometry.config().polarization;
    const double xpr = std::pow(10.0, scenario.xpr_db / 10.0);
    const double k_lin = ch.link.los ? std::pow(10.0, scenario.ricean_k_db / 10.0) : 0.0;
    const double scatter_power = 1.0 / (1.0 + k_lin);
    const double co_amp = copolar_amplitude(options.n_rx, n_txpol, xpr);
    const double cross_amp = co_amp / std::sqrt(xpr);

    ch.clusters.reserve(static_cast<size_t>(n_cl) + 1);

    if (k_lin > 0.0) {
        // specular ray: deterministic polarization up to a common phase
        Cluster c;
        c.dir = ch.link.los_dir;
        const double phase = rng.uniform(0.0, 2.0 * M_PI);
        c.gain = std::polar(std::sqrt(k_lin / (1.0 + k_lin)), phase) *
                 options.element_pattern.amplitude(c.dir);
        c.pol.setZero();
        const int n_diag = std::min(options.n_rx, n_txpol);
        const double diag_amp =
            std::sqrt(static_cast<double>(options.n_rx * n_txpol) / n_diag);
        for (int r = 0; r < n_diag; ++r) {
            c.pol(r, r) = (r == 0 ? diag_amp : -diag_amp);
        }
        ch.clusters.push_back(c);
    }

    for (int i = 0; i < n_cl; ++i) {
        Cluster c;
        c.dir.azimuth_deg = wrap_azimuth_deg(ch.link.los_dir.azimuth_deg +
                                             scenario.asd_deg * rng.normal());
        c.dir.elevation_deg = clamp_elevation_deg(ch.link.los_dir.elevation_deg +
                                                  ch.link.esd_deg * rng.normal());
        c.gain = rng.cnormal() * std::sqrt(scatter_power / n_cl) *
                 options.element_pattern.amplitude(c.dir);
        c.pol.setZero();
        for (int r = 0; r < options.n_rx; ++r) {
            for (int t = 0; t < n_txpol; ++t) {
                const double amp = (r == t) ? co_amp : cross_amp;
                c.pol(r, t) = std::polar(amp, rng.uniform(0.0, 2.0 * M_PI));
            }
        }
        ch.clusters.push_back(c);
    }
    return ch;
}

Eigen::MatrixXcd ChannelRealization::coefficient_matrix() const {
    const int n_pos = array.n_positions();
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n_rx, array.n_elements());
    for (const Cluster& c : clusters) {
        const Eigen::VectorXcd sp = panel_steering(array, c.dir).conjugate();
        for (int t = 0; t < array.polarization; ++t) {
            for (int r = 0; r < n_rx; ++r) {
                const cplx a = c.gain * c.pol(r, t);
                if (a != cplx(0.0, 0.0)) {
                    h.row(r).segment(t * n_pos, n_pos) += a * sp.transpose();
                }
            }
        }
    }
    return applied_amplitude * h;
}

Eigen::MatrixXcd ChannelRealization::port_channel(const TxruArchitecture& arch) const {
    if (arch.array.n_elements() != array.n_elements()) {
        throw std::invalid_argument("port_channel: architecture panel mismatch");
    }
    const int m = array.m_vertical;
    const int n = array.n_horizontal;
    const size_t n_ports = arch.ports.size();

    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n_rx, static_cast<Eigen::Index>(n_ports));
    Eigen::VectorXcd ev(m), eh(n);
    for (const Cluster& c : clusters) {
        // conj of the steering entries: exp(+j 2 pi k gamma phi)
        const double sv = 2.0 * M_PI * array.dv_lambda * c.dir.vertical_cosine();
        const double sh = 2.0 * M_PI * array.dh_lambda * c.dir.horizontal_cosine();
        for (int k = 0; k < m; ++k) ev[k] = std::polar(1.0, sv * k);
        for (int k = 0; k < n; ++k) eh[k] = std::polar(1.0, sh * k);

        for (size_t pi = 0; pi < n_ports; ++pi) {
            const TxruPort& port = arch.ports[pi];
            cplx resp(0.0, 0.0);
            for (size_t ci = 0; ci < port.cols.size(); ++ci) {
                cplx col_sum(0.0, 0.0);
                for (size_t ri = 0; ri < port.rows.size(); ++ri) {
                    col_sum += ev[port.rows[ri]] *
                               port.weights(static_cast<Eigen::Index>(ri),
                                            static_cast<Eigen::Index>(ci));
                }
                resp += eh[port.cols[ci]] * col_sum;
            }
            for (int r = 0; r < n_rx; ++r) {
                h(r, static_cast<Eigen::Index>(pi)) += c.gain * c.pol(r, port.pol) * resp;
            }
        }
    }
    return applied_amplitude * h;
}

} // namespace fdmimo
