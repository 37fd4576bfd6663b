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

#ifndef FDMIMO_FEEDBACK_HPP
#define FDMIMO_FEEDBACK_HPP

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "fdmimo/codebook.hpp"

namespace fdmimo {

// Class A: codebook feedback on non-precoded CSI-RS. Class B: beam index
// feedback on beamformed CSI-RS. B2 adds the long-term/short-term split where
// the beam grid follows the wideband PMI.
enum class FeedbackClass { A, B, B2 };

enum class PilotScheme { NonPrecoded, Beamformed };

constexpr int kRePerRbSubframe = 168; // 12 subcarriers x 14 symbols
constexpr int kFixedRsRePerRb = 16;   // 2-port CRS

// (n_resources + fixed RS) / 168, clamped to [0, 1).
double pilot_overhead_fraction(PilotScheme scheme, int n_resources);

struct PilotBudget {
    PilotScheme scheme = PilotScheme::NonPrecoded;
    int resources = 0;          // N_T (non-precoded) or N_B (beamformed)
    double per_pilot_power = 0; // P/N_T or P/N_B
    double overhead_fraction = 0;

    static PilotBudget make(PilotScheme scheme, int n_resources, double total_power);
};

// min(log2(1 + SINR), cap) in b/s/Hz.
double spectral_efficiency(double sinr_db, double cap = 6.0);

// 4-bit CQI with LTE transport-format efficiencies.
struct CqiTable {
    std::array<double, 16> efficiency;
    double cap = 6.0;

    static const CqiTable& lte();
};

struct CqiResult {
    int index = 0;
    double efficiency = 0.0; // quantized table value
};

CqiResult compute_cqi(double sinr_db, const CqiTable& table = CqiTable::lte());

// Linear SINR that exactly supports a spectral efficiency.
double efficiency_to_sinr(double efficiency);

// Uplink feedback cost. Class A follows the quantization scaling law
// ceil((N_T - 1) * SNR_dB / 3); class B costs ceil(log2 N_B) plus 2 bits of
// co-phase at rank 2.
int feedback_bits(FeedbackClass cls, int n_t, int n_b, double snr_db, int rank = 1);

struct FeedbackReport {
    int rank = 1;
    int pmi = -1;                  // class A, composite index
    int beam_index = -1;           // class B
    cplx co_phase = cplx(1.0, 0.0);
    std::vector<int> cqi;          // per subband
    int bit_cost = 0;
    int age_subframes = 0;
};

// Long-term statistics fed back from wideband non-precoded measurements.
struct LongTermStats {
    bool valid = false;
    int v_pmi = -1;
    double v_dircos = 0.0; // vertical directional cosine of the PMI beam
};

struct BeamGridConfig {
    int n_beams = 4;
    double el_min_deg = -35.0;
    double el_max_deg = 5.0;
    double adaptive_span_deg = 12.0;
};

// Scheme-I grid: n_beams elevations uniformly placed inside [el_min, el_max]
// at the centers of equal sub-intervals.
std::vector<double> uniform_beam_elevations(const BeamGridConfig& cfg);

// Scheme-II grid: n_beams elevations spanning adaptive_span_deg around the
// center, clamped into [el_min, el_max].
std::vector<double> recentered_beam_elevations(const BeamGridConfig& cfg,
                                               double center_el_deg);

struct AdaptiveStepResult {
    std::vector<double> beam_elevations_deg; // grid for the next period
    FeedbackReport report;                   // short-term BI + wideband CQI
};

// One adaptive (scheme II) feedback step: re-centers the beam grid around the
// long-term PMI direction (uniform fallback when no long-term state exists)
// and emits the short-term beam index and CQI measured on the current beams.
AdaptiveStepResult adaptive_feedback_step(const LongTermStats& long_term,
                                          const BeamGridConfig& cfg,
                                          const Eigen::MatrixXcd& beam_port_channel,
                                          double data_power, double noise_plus_interference,
                                          const CqiTable& table = CqiTable::lte());

} // namespace fdmimo

#endif // FDMIMO_FEEDBACK_HPP
