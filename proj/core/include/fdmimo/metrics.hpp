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

#ifndef FDMIMO_METRICS_HPP
#define FDMIMO_METRICS_HPP

#include <string>
#include <vector>

namespace fdmimo {

struct SimMetrics {
    double cell_avg_se = 0.0;      // b/s/Hz/cell
    double edge_ue_se = 0.0;       // 5th-percentile UE spectral efficiency
    double mean_ue_se = 0.0;
    double mean_packet_tput_mbps = 0.0; // FTP user packet throughput
    double edge_packet_tput_mbps = 0.0; // 5th percentile
    long packets_completed = 0;
    long packets_unfinished = 0;
    double resource_utilization = 0.0;
    double mean_feedback_bits_per_report = 0.0;
    double energy_ledger_max_rel_err = 0.0;

    std::vector<double> ue_se;            // per UE, b/s/Hz
    std::vector<double> packet_tput_mbps; // per completed packet
};

// p in [0,1]; empirical percentile: element at index ceil(p*n)-1 of the
// sorted sample (0 for an empty sample).
double percentile(std::vector<double> values, double p);

double mean(const std::vector<double>& values);

// Sample standard deviation (n-1 denominator); 0 for fewer than two points.
double sample_stddev(const std::vector<double>& values);

// Minimal CSV writer. Every file starts with provenance comment lines
// followed by a header row.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);
    ~CsvWriter();

    void comment(const std::string& line);
    void header(const std::vector<std::string>& columns);
    void row(const std::vector<std::string>& values);
    void row_numeric(const std::vector<double>& values);
    void flush();

private:
    struct Impl;
    Impl* impl_;
};

std::string format_double(double v);

} // namespace fdmimo

#endif // FDMIMO_METRICS_HPP
