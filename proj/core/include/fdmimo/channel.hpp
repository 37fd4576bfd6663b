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

#ifndef FDMIMO_CHANNEL_HPP
#define FDMIMO_CHANNEL_HPP

#include <Eigen/Dense>
#include <vector>

#include "fdmimo/array.hpp"
#include "fdmimo/rng.hpp"
#include "fdmimo/txru.hpp"

namespace fdmimo {

// Simplified parametric 3D channel. Functional forms are chosen to reproduce
// the qualitative urban macro/micro propagation trends (height/distance
// dependent LOS probability, height-dependent pathloss gain, height/distance
// dependent elevation spread); every constant is a configurable default.

enum class ScenarioKind { UMa3D, UMi3D };

struct LosModelParams {
    double near_m = 18.0;         // distance below which LOS is certain
    double decay_m = 63.0;        // exponential decay scale
    double height_scale_m = 50.0; // linear LOS uplift per meter of UE height
};

struct PathlossParams {
    double los_const_db = 28.0;
    double los_exp_db = 22.0; // dB per decade of 3D distance
    double nlos_const_db = 13.54;
    double nlos_exp_db = 39.08;
};

struct EsdParams {
    double anchor_deg = 10.0; // spread at (anchor_distance, 1.5 m UE)
    double anchor_distance_m = 50.0;
    double distance_exponent = 0.5;
    double height_scale_m = 20.0;
    double min_deg = 0.5;
    double max_deg = 25.0;
};

struct Scenario {
    ScenarioKind kind = ScenarioKind::UMa3D;
    double isd_m = 500.0;
    double bs_height_m = 25.0;
    double height_gain_db_per_m = 0.6;
    double carrier_hz = 2.0e9;
    double min_bs_ue_distance_m = 35.0;

    LosModelParams los;
    PathlossParams pathloss;
    double shadow_sigma_los_db = 4.0;
    double shadow_sigma_nlos_db = 6.0;
    EsdParams esd;
    double asd_deg = 15.0;     // azimuth spread of departure
    double xpr_db = 8.0;       // cross-polarization ratio
    double ricean_k_db = 9.0;  // LOS specular-to-scatter power ratio
    int n_clusters = 12;
    double indoor_fraction = 0.8;
    double o2i_loss_db = 20.0; // flat outdoor-to-indoor penetration loss
    int max_floor = 8;         // indoor UE floors, 3 m per floor

    static Scenario uma3d();
    static Scenario umi3d();
};

// UE location in the serving sector's frame: BS at the origin, boresight +x.
struct UePosition {
    double x_m = 0.0;
    double y_m = 0.0;
    double height_m = 1.5;
    bool indoor = false;

    double distance_2d() const { return std::sqrt(x_m * x_m + y_m * y_m); }
};

// P_LOS(d, h): nonincreasing in distance, nondecreasing in UE height, 1 at
// distance 0. Throws on negative distance or height below 1.5 m.
double los_probability(const Scenario& scenario, double distance_2d_m, double ue_height_m);

// Log-distance pathloss minus the height gain slope * (h - 1.5 m). The NLOS
// branch is floored by the LOS curve. Throws on nonpositive distance.
double pathloss_db(const Scenario& scenario, double distance_3d_m, double ue_height_m,
                   bool los);

// ESD = A * (d/d0)^-alpha * exp(-(min(h, h_BS) - 1.5)/h_scale), clamped.
double elevation_spread_deg(const Scenario& scenario, double distance_2d_m,
                            double ue_height_m);

struct Cluster {
    Direction dir;
    cplx gain;              // complex amplitude including element pattern
    Eigen::Matrix2cd pol;   // rx-pol x tx-pol coupling (unused entries zero)
};

struct LinkState {
    bool los = false;
    double pathloss_db = 0.0;
    double shadow_db = 0.0;
    double amplitude = 1.0; // large-scale amplitude applied to H
    double esd_deg = 0.0;
    double distance_2d_m = 0.0;
    double distance_3d_m = 0.0;
    Direction los_dir;
};

struct ChannelOptions {
    int n_rx = 2;                   // 1 or 2 (cross-polarized pair)
    ElementPattern element_pattern; // applied per cluster departure direction
    bool include_large_scale = true;
    int n_clusters_override = 0;    // 0 keeps the scenario default
};

class ChannelRealization {
public:
    std::vector<Cluster> clusters;
    LinkState link;
    ArrayConfig array;
    int n_rx = 2;
    double applied_amplitude = 1.0;

    // Dense N_R x N_T element-domain coefficient matrix.
    Eigen::MatrixXcd coefficient_matrix() const;

    // N_R x L TXRU-domain channel, i.e. coefficient_matrix() * W_T, computed
    // per cluster through the ports' separable weight blocks.
    Eigen::MatrixXcd port_channel(const TxruArchitecture& arch) const;
};

// Draws LOS condition, shadowing and large-scale quantities for one link.
LinkState draw_link_state(const Scenario& scenario, const UePosition& ue, Philox4x32& rng);

// Draws one small-scale realization (cluster angles, gains, polarization).
// When `link` is null a fresh LinkState is drawn from the same stream first.
ChannelRealization generate_channel(const ArrayGeometry& geometry, const Scenario& scenario,
                                    const UePosition& ue, Philox4x32& rng,
                                    const ChannelOptions& options = ChannelOptions{},
                                    const LinkState* link = nullptr);

} // namespace fdmimo

#endif // FDMIMO_CHANNEL_HPP
