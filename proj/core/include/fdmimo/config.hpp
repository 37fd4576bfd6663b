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

#ifndef FDMIMO_CONFIG_HPP
#define FDMIMO_CONFIG_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "fdmimo/array.hpp"
#include "fdmimo/channel.hpp"
#include "fdmimo/feedback.hpp"
#include "fdmimo/txru.hpp"

namespace fdmimo {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct TxruConfig {
    TxruKind kind = TxruKind::Partitioned;
    int l_txru = 16;
    int l_prime = 2;       // connected architecture fan-in
    TxruGrid grid{2, 8};
    double downtilt_deg = 12.0; // sub-array virtualization steering
};

struct FeedbackConfig {
    FeedbackClass cls = FeedbackClass::A;
    int n_b = 4;
    int report_period_ms = 5;
    int delay_ms = 6;
    int v_oversampling = 2;    // class A vertical codebook oversampling
    int h_oversampling = 2;    // class A horizontal codebook oversampling
    int cophase_bits = 2;      // 0 or 2 (QPSK) polarization co-phase
    int long_term_period_ms = 50;
    BeamGridConfig beam_grid;
};

struct TrafficConfig {
    enum class Model { FullBuffer, Ftp };
    Model model = Model::FullBuffer;
    double packet_bytes = 500000.0;
    double arrival_rate_hz = 0.5; // per-UE Poisson packet arrivals
};

struct HarqConfig {
    int max_retx = 3;
    int retx_delay_ms = 8;
};

struct EngineConfig {
    int subframes = 2000;
    int subbands = 6;
    int rb_total = 50;         // 10 MHz
    double bandwidth_hz = 1.0e7;
    int ue_per_cell = 10;
    int rx_antennas = 2;
    double tx_power_dbm = 46.0;
    double noise_figure_db = 9.0;
    bool wraparound = true;
    bool ideal_feedback = false;           // eNB precodes on the true channel
    bool ideal_channel_estimation = false; // no CSI-RS / DM-RS estimation noise
    bool quantize_cqi = true;
    double mcs_backoff = 0.9;
    int pf_window = 100;
    int max_layers = 4;
    int max_rank_per_ue = 2;
    double pairing_corr_threshold = 0.5;
    bool redraw_channel_per_period = false; // independent aging per feedback period
    int control_symbols = 3;
    int dmrs_re_per_rb = 12;
    int crs_re_per_rb = 16;
    HarqConfig harq;
};

struct DebugConfig {
    bool single_cell = false;
    bool disable_interference = false;
    bool fixed_ue = false;
    double ue_x_m = 100.0;
    double ue_y_m = 0.0;
    double ue_height_m = 1.5;
    bool force_los = false;
    bool check_energy = false; // per-subframe SINR energy ledger assertions
};

struct TraceConfig {
    bool feedback = false;
    bool scheduler = false;
    bool channel = false;
    std::string dir = ".";
};

struct SimConfig {
    Scenario scenario = Scenario::uma3d();
    ArrayConfig array;
    TxruConfig txru;
    ElementPattern element_pattern; // sim default is the 3GPP sector pattern
    FeedbackConfig feedback;
    TrafficConfig traffic;
    EngineConfig engine;
    DebugConfig debug;
    TraceConfig trace;

    static SimConfig defaults();
    static SimConfig from_json(const nlohmann::json& j);
    static SimConfig from_file(const std::string& path);
    nlohmann::json to_json() const;

    // FNV-1a over the canonical JSON dump; stable across runs.
    uint64_t hash() const;

    // Cross-field consistency; throws ConfigError.
    void validate() const;
};

uint64_t fnv1a64(const std::string& data);

} // namespace fdmimo

#endif // FDMIMO_CONFIG_HPP
