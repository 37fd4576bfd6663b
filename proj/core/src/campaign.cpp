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

#include "fdmimo/campaign.hpp"

#include <atomic>
#include <cmath>
#include <map>
#include <thread>

#include "fdmimo/engine.hpp"

namespace fdmimo {

CampaignResult run_campaign(const std::vector<SimConfig>& configs,
                            const std::vector<uint64_t>& seeds, int parallelism,
                            const std::vector<std::string>& labels) {
    if (configs.empty() || seeds.empty()) {
        throw std::invalid_argument("run_campaign: empty config matrix or seed list");
    }
    const int n_cells = static_cast<int>(configs.size() * seeds.size());
    CampaignResult result;
    result.rows.resize(static_cast<size_t>(n_cells));

    std::atomic<int> next(0);
    const int n_threads = std::max(1, std::min(parallelism, n_cells));
    auto worker = [&]() {
        while (true) {
            const int task = next.fetch_add(1);
            if (task >= n_cells) {
                return;
            }
            const int ci = task / static_cast<int>(seeds.size());
            const int si = task % static_cast<int>(seeds.size());
            CampaignRow& row = result.rows[static_cast<size_t>(task)];
            row.config_index = ci;
            row.seed = seeds[static_cast<size_t>(si)];
            row.label = (static_cast<size_t>(ci) < labels.size())
                            ? labels[static_cast<size_t>(ci)]
                            : "config" + std::to_string(ci);
            try {
                row.metrics = run_drop(configs[static_cast<size_t>(ci)], row.seed);
                row.ok = true;
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
            }
        }
    };

    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }

    result.aggregates = aggregate_rows(result.rows);
    return result;
}

std::vector<CampaignAggregate> aggregate_rows(const std::vector<CampaignRow>& rows) {
    std::map<int, std::vector<const CampaignRow*>> by_config;
    for (const CampaignRow& r : rows) {
        by_config[r.config_index].push_back(&r);
    }
    std::vector<CampaignAggregate> out;
    for (const auto& [ci, group] : by_config) {
        CampaignAggregate agg;
        agg.config_index = ci;
        agg.label = group.front()->label;
        std::vector<double> cell_se;
        std::vector<double> edge_se;
        std::vector<double> tput;
        std::vector<double> edge_tput;
        std::vector<double> util;
        for (const CampaignRow* r : group) {
            if (!r->ok) {
                continue;
            }
            ++agg.n_ok;
            cell_se.push_back(r->metrics.cell_avg_se);
            edge_se.push_back(r->metrics.edge_ue_se);
            tput.push_back(r->metrics.mean_packet_tput_mbps);
            edge_tput.push_back(r->metrics.edge_packet_tput_mbps);
            util.push_back(r->metrics.resource_utilization);
        }
        agg.mean_cell_avg_se = mean(cell_se);
        agg.mean_edge_ue_se = mean(edge_se);
        agg.mean_packet_tput_mbps = mean(tput);
        agg.mean_edge_packet_tput_mbps = mean(edge_tput);
        agg.mean_resource_utilization = mean(util);
        if (cell_se.size() > 1) {
            agg.ci95_cell_avg_se = 1.96 * sample_stddev(cell_se) /
                                   std::sqrt(static_cast<double>(cell_se.size()));
        }
        out.push_back(agg);
    }
    return out;
}

void write_campaign_csv(const std::string& path, const CampaignResult& result,
                        const std::vector<SimConfig>& configs,
                        const std::vector<uint64_t>& seeds) {
    CsvWriter csv(path);
    std::string seed_list;
    for (size_t i = 0; i < seeds.size(); ++i) {
        if (i > 0) {
            seed_list += "|";
        }
        seed_list += std::to_string(seeds[i]);
    }
    char hash_buf[32];
    std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                  static_cast<unsigned long long>(configs.front().hash()));
    csv.comment("fdmimo results v0.1.0 config_hash=" + std::string(hash_buf) +
                " seeds=" + seed_list);
    csv.header({"label", "config_index", "seed", "ok", "cell_avg_se", "edge_ue_se",
                "mean_ue_se", "mean_packet_tput_mbps", "edge_packet_tput_mbps",
                "packets_completed", "packets_unfinished", "resource_utilization",
                "mean_feedback_bits_per_report"});
    for (const CampaignRow& r : result.rows) {
        csv.row({r.label, std::to_string(r.config_index), std::to_string(r.seed),
                 r.ok ? "1" : "0", format_double(r.metrics.cell_avg_se),
                 format_double(r.metrics.edge_ue_se), format_double(r.metrics.mean_ue_se),
                 format_double(r.metrics.mean_packet_tput_mbps),
                 format_double(r.metrics.edge_packet_tput_mbps),
                 std::to_string(r.metrics.packets_completed),
                 std::to_string(r.metrics.packets_unfinished),
                 format_double(r.metrics.resource_utilization),
                 format_double(r.metrics.mean_feedback_bits_per_report)});
    }
    for (const CampaignAggregate& a : result.aggregates) {
        csv.row({a.label + "/aggregate", std::to_string(a.config_index), "-",
                 std::to_string(a.n_ok), format_double(a.mean_cell_avg_se),
                 format_double(a.mean_edge_ue_se), "-",
                 format_double(a.mean_packet_tput_mbps),
                 format_double(a.mean_edge_packet_tput_mbps), "-", "-",
                 format_double(a.mean_resource_utilization), "-"});
    }
}

void write_campaign_summary_json(const std::string& path, const CampaignResult& result) {
    nlohmann::json j;
    j["rows"] = nlohmann::json::array();
    for (const CampaignRow& r : result.rows) {
        nlohmann::json rj;
        rj["label"] = r.label;
        rj["config_index"] = r.config_index;
        rj["seed"] = r.seed;
        rj["ok"] = r.ok;
        if (!r.ok) {
            rj["error"] = r.error;
        }
        rj["cell_avg_se"] = r.metrics.cell_avg_se;
        rj["edge_ue_se"] = r.metrics.edge_ue_se;
        rj["mean_packet_tput_mbps"] = r.metrics.mean_packet_tput_mbps;
        rj["resource_utilization"] = r.metrics.resource_utilization;
        j["rows"].push_back(rj);
    }
    j["aggregates"] = nlohmann::json::array();
    for (const CampaignAggregate& a : result.aggregates) {
        nlohmann::json aj;
        aj["label"] = a.label;
        aj["config_index"] = a.config_index;
        aj["n_ok"] = a.n_ok;
        aj["mean_cell_avg_se"] = a.mean_cell_avg_se;
        aj["ci95_cell_avg_se"] = a.ci95_cell_avg_se;
        aj["mean_edge_ue_se"] = a.mean_edge_ue_se;
        aj["mean_packet_tput_mbps"] = a.mean_packet_tput_mbps;
        aj["mean_edge_packet_tput_mbps"] = a.mean_edge_packet_tput_mbps;
        aj["mean_resource_utilization"] = a.mean_resource_utilization;
        j["aggregates"].push_back(aj);
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << j.dump(2) << "\n";
}

} // namespace fdmimo
