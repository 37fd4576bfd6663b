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

#ifndef FDMIMO_ENGINE_HPP
#define FDMIMO_ENGINE_HPP

#include <cstdint>

#include "fdmimo/config.hpp"
#include "fdmimo/metrics.hpp"

namespace fdmimo {

// Per-RB resource accounting per Table-style line items. The CSI-RS term is
// the per-subframe average of the periodic transmission.
struct OverheadLedger {
    double control = 0.0;
    double crs = 0.0;
    double dmrs = 0.0;
    double csirs = 0.0;

    double data_fraction() const { return 1.0 - (control + crs + dmrs + csirs); }

    static OverheadLedger make(const EngineConfig& engine, int csirs_resources,
                               int csirs_period_ms, double amortized_extra_re = 0.0);
};

// One multi-cell drop. Deterministic: metrics are a pure function of
// (config, seed) regardless of the caller's threading.
SimMetrics run_drop(const SimConfig& config, uint64_t seed);

} // namespace fdmimo

#endif // FDMIMO_ENGINE_HPP
