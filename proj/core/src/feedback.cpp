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

#include "fdmimo/feedback.hpp"

#include <cmath>
#include <stdexcept>

namespace fdmimo {

double pilot_overhead_fraction(PilotScheme scheme, int n_resources) {
    (void)scheme; // both schemes share the per-RB accounting
    if (n_resources < 0) {
        throw std::invalid_argument("pilot_overhead_fraction: negative resource count");
    }
    const double f =
        static_cast<double>(n_resources + kFixedRsRePerRb) / kRePerRbSubframe;
    return std::min(f, std::nextafter(1.0, 0.0));
}

PilotBudget PilotBudget::make(PilotScheme scheme, int n_resources, double total_power) {
    if (n_resources < 1) {
        throw std::invalid_argument("PilotBudget: need at least one CSI-RS resource");
    }
    PilotBudget b;
    b.scheme = scheme;
    b.resources = n_resources;
    b.per_pilot_power = total_power / n_resources;
    b.overhead_fraction = pilot_overhead_fraction(scheme, n_resources);
    return b;
}

double spectral_efficiency(double sinr_db, double cap) {
    const double sinr = std::pow(10.0, sinr_db / 10.0);
    return std::min(std::log2(1.0 + sinr), cap);
}

const CqiTable& CqiTable::lte() {
    static const CqiTable table = [] {
        CqiTable t;
        t.efficiency = {0.0,    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766,
                        1.9141, 2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547};
        t.cap = 6.0;
        return t;
    }();
    return table;
}

CqiResult compute_cqi(double sinr_db, const CqiTable& table) {
    const double eff = spectral_efficiency(sinr_db, table.cap);
    CqiResult r;
    for (int i = 0; i < static_cast<int>(table.efficiency.size()); ++i) {
        if (table.efficiency[static_cast<size_t>(i)] <= eff) {
            r.index = i;
        }
    }
    r.efficiency = table.efficiency[static_cast<size_t>(r.index)];
    return r;
}

double efficiency_to_sinr(double efficiency) {
    return std::pow(2.0, efficiency) - 1.0;
}

int feedback_bits(FeedbackClass cls, int n_t, int n_b, double snr_db, int rank) {
    if (n_t < 1 || n_b < 1) {
        throw std::invalid_argument("feedback_bits: counts must be >= 1");
    }
    if (cls == FeedbackClass::A) {
        const double bits = (n_t - 1) * snr_db / 3.0;
        return bits <= 0.0 ? 0 : static_cast<int>(std::ceil(bits));
    }
    int bits = 0;
    while ((1 << bits) < n_b) ++bits;
    if (rank == 2) {
        bits += 2; // QPSK co-phase
    }
    return bits;
}

std::vector<double> uniform_beam_elevations(const BeamGridConfig& cfg) {
    if (cfg.n_beams < 1) {
        throw std::invalid_argument("beam grid: need at least one beam");
    }
    const double span = cfg.el_max_deg - cfg.el_min_deg;
    std::vector<double> out(static_cast<size_t>(cfg.n_beams));
    for (int i = 0; i < cfg.n_beams; ++i) {
        out[static_cast<size_t>(i)] = cfg.el_min_deg + span * (i + 0.5) / cfg.n_beams;
    }
    return out;
}

std::vector<double> recentered_beam_elevations(const BeamGridConfig& cfg,
                                               double center_el_deg) {
    std::vector<double> out(static_cast<size_t>(cfg.n_beams));
    for (int i = 0; i < cfg.n_beams; ++i) {
        const double frac = (cfg.n_beams == 1)
                                ? 0.0
                                : (i + 0.5) / cfg.n_beams - 0.5;
        double el = center_el_deg + cfg.adaptive_span_deg * frac;
        el = std::min(cfg.el_max_deg, std::max(cfg.el_min_deg, el));
        out[static_cast<size_t>(i)] = el;
    }
    return out;
}

AdaptiveStepResult adaptive_feedback_step(const LongTermStats& long_term,
                                          const BeamGridConfig& cfg,
                                          const Eigen::MatrixXcd& beam_port_channel,
                                          double data_power, double noise_plus_interference,
                                          const CqiTable& table) {
    AdaptiveStepResult out;
    if (long_term.valid) {
        const double dircos = std::min(1.0, std::max(-1.0, long_term.v_dircos));
        out.beam_elevations_deg =
            recentered_beam_elevations(cfg, std::asin(dircos) * 180.0 / M_PI);
    } else {
        out.beam_elevations_deg = uniform_beam_elevations(cfg);
    }

    Selection best;
    best.metric = -1.0;
    for (int j = 0; j < beam_port_channel.cols(); ++j) {
        const double m = beam_port_channel.col(j).squaredNorm();
        if (m > best.metric) {
            best.metric = m;
            best.index = j;
        }
    }
    out.report.beam_index = best.index;
    out.report.rank = 1;
    const double sinr = data_power * best.metric / noise_plus_interference;
    const CqiResult cqi = compute_cqi(10.0 * std::log10(std::max(sinr, 1e-30)), table);
    out.report.cqi = {cqi.index};
    out.report.bit_cost = feedback_bits(FeedbackClass::B, 1,
                                        static_cast<int>(beam_port_channel.cols()), 0.0) +
                          4;
    return out;
}

} // namespace fdmimo
