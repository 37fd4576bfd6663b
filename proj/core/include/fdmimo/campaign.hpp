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

#ifndef FDMIMO_CAMPAIGN_HPP
#define FDMIMO_CAMPAIGN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fdmimo/config.hpp"
#include "fdmimo/metrics.hpp"

namespace fdmimo {

struct CampaignRow {
    std::string label;
    int config_index = 0;
    uint64_t seed = 0;
    bool ok = false;
    std::string error;
    SimMetrics metrics;
};

struct CampaignAggregate {
    std::string label;
    int config_index = 0;
    int n_ok = 0;
    double mean_cell_avg_se = 0.0;
    double ci95_cell_avg_se = 0.0;
    double mean_edge_ue_se = 0.0;
    double mean_packet_tput_mbps = 0.0;
    double mean_edge_packet_tput_mbps = 0.0;
    double mean_resource_utilization = 0.0;
};

struct CampaignResult {
    std::vector<CampaignRow> rows;           // one per (config, seed)
    std::vector<CampaignAggregate> aggregates; // one per config
};

// Runs every (config, seed) cell. Results are identical for any parallelism
// degree; a failing cell is reported in its row without aborting the rest.
CampaignResult run_campaign(const std::vector<SimConfig>& configs,
                            const std::vector<uint64_t>& seeds, int parallelism,
                            const std::vector<std::string>& labels = {});

// results CSV (one row per drop) and the aggregate JSON summary
void write_campaign_csv(const std::string& path, const CampaignResult& result,
                        const std::vector<SimConfig>& configs,
                        const std::vector<uint64_t>& seeds);
void write_campaign_summary_json(const std::string& path, const CampaignResult& result);

// Re-derives aggregates from rows (used by the summarize subcommand).
std::vector<CampaignAggregate> aggregate_rows(const std::vector<CampaignRow>& rows);

} // namespace fdmimo

#endif // FDMIMO_CAMPAIGN_HPP
