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

#ifndef FDMIMO_ANALYSIS_HPP
#define FDMIMO_ANALYSIS_HPP

#include <string>
#include <vector>

#include "fdmimo/array.hpp"
#include "fdmimo/metrics.hpp"

namespace fdmimo {

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

// Uplink feedback bits vs N_T: class A quantization scaling law against the
// constant class-B beam-index cost.
Table overhead_curve(int nt_min, int nt_max, double snr_db, int n_b);

// Effective ZF sum capacity vs N_T with three pilot-overhead models: none,
// non-precoded (resources = N_T) and beamformed (resources = n_b_fixed).
Table capacity_curve(const std::vector<int>& nt_list, double snr_db, int n_users,
                     int n_draws, int n_b_fixed, uint64_t seed);

// Horizontal ('h') or vertical ('v') array-factor cut with uniform weights,
// -90..90 degrees. Columns: angle_deg, gain_re, gain_im, gain_abs, gain_db.
Table pattern_cut(const ArrayConfig& config, char plane, double step_deg,
                  const ElementPattern& pattern = ElementPattern{});

void write_table_csv(const std::string& path, const Table& table,
                     const std::string& provenance);

} // namespace fdmimo

#endif // FDMIMO_ANALYSIS_HPP
