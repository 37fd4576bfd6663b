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

#include "fdmimo/analysis.hpp"

#include <cmath>
#include <stdexcept>

#include "fdmimo/feedback.hpp"
#include "fdmimo/precoding.hpp"

namespace fdmimo {

Table overhead_curve(int nt_min, int nt_max, double snr_db, int n_b) {
    if (nt_min < 1 || nt_max < nt_min) {
        throw std::invalid_argument("overhead_curve: bad N_T range");
    }
    Table t;
    t.columns = {"n_t", "class_a_bits", "class_b_bits", "class_b_rank2_bits"};
    for (int nt = nt_min; nt <= nt_max; ++nt) {
        t.rows.push_back({static_cast<double>(nt),
                          static_cast<double>(feedback_bits(FeedbackClass::A, nt, n_b, snr_db)),
                          static_cast<double>(feedback_bits(FeedbackClass::B, nt, n_b, snr_db)),
                          static_cast<double>(
                              feedback_bits(FeedbackClass::B, nt, n_b, snr_db, 2))});
    }
    return t;
}

Table capacity_curve(const std::vector<int>& nt_list, double snr_db, int n_users,
                     int n_draws, int n_b_fixed, uint64_t seed) {
    Table t;
    t.columns = {"n_t",           "overhead_nonprecoded", "overhead_beamformed",
                 "cap_no_overhead", "cap_nonprecoded",    "cap_beamformed"};
    for (int nt : nt_list) {
        const double ov_np = pilot_overhead_fraction(PilotScheme::NonPrecoded, nt);
        const double ov_bf = pilot_overhead_fraction(PilotScheme::Beamformed, n_b_fixed);
        const double c0 = effective_sum_capacity(nt, n_users, snr_db, 0.0, n_draws, seed);
        t.rows.push_back({static_cast<double>(nt), ov_np, ov_bf, c0, c0 * (1.0 - ov_np),
                          c0 * (1.0 - ov_bf)});
    }
    return t;
}

Table pattern_cut(const ArrayConfig& config, char plane, double step_deg,
                  const ElementPattern& pattern) {
    if (step_deg <= 0.0) {
        throw std::invalid_argument("pattern_cut: step must be positive");
    }
    if (plane != 'h' && plane != 'v') {
        throw std::invalid_argument("pattern_cut: plane must be 'h' or 'v'");
    }
    const ArrayGeometry geometry = build_array(config);
    const int n_pos = config.n_positions();
    const Eigen::VectorXcd weights = Eigen::VectorXcd::Ones(n_pos);
    const int n = static_cast<int>(std::round(180.0 / step_deg));

    Table t;
    t.columns = {"angle_deg", "gain_re", "gain_im", "gain_abs", "gain_db"};
    for (int i = 0; i <= n; ++i) {
        const double angle = -90.0 + i * step_deg;
        Direction dir;
        if (plane == 'h') {
            dir.azimuth_deg = angle;
        } else {
            dir.elevation_deg = angle;
        }
        const cplx g = array_factor(geometry, weights, dir, pattern);
        const double mag = std::abs(g);
        t.rows.push_back({angle, g.real(), g.imag(), mag,
                          20.0 * std::log10(std::max(mag, 1e-12))});
    }
    return t;
}

void write_table_csv(const std::string& path, const Table& table,
                     const std::string& provenance) {
    CsvWriter csv(path);
    csv.comment(provenance);
    csv.header(table.columns);
    for (const auto& row : table.rows) {
        csv.row_numeric(row);
    }
}

} // namespace fdmimo
