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

#ifndef FDMIMO_SCHEDULER_HPP
#define FDMIMO_SCHEDULER_HPP

#include <Eigen/Dense>
#include <vector>

namespace fdmimo {

// Proportional-fair state: exponentially smoothed per-UE throughput.
class SchedulingState {
public:
    SchedulingState() = default;
    SchedulingState(int n_ue, int window_subframes, double floor_eps = 1e-9);

    int n_ue() const { return static_cast<int>(avg_rate_.size()); }
    double average(int ue) const { return avg_rate_[static_cast<size_t>(ue)]; }
    double smoothing() const { return alpha_; }

    // One subframe tick: avg <- (1-a)*avg + a*rate_this_subframe (zero for
    // unscheduled UEs), floored away from zero.
    void update(const std::vector<double>& rate_this_subframe);

private:
    std::vector<double> avg_rate_;
    double alpha_ = 0.01;
    double floor_eps_ = 1e-9;
};

// Co-scheduled UE set with per-UE ranks (layers).
struct MuGroup {
    std::vector<int> ue_ids;
    std::vector<int> ranks;

    int total_layers() const;
};

// Per subband, picks the candidate group maximizing sum(rate/average) and
// then applies one smoothing update with the scheduled rates. Rates are in
// group-major order: group_rates(g, s) is group g's sum rate estimate on
// subband s; ue_rates[g](i, s) the rate of group member i. Ties break to the
// lowest candidate index. Returns the chosen group per subband.
std::vector<int> pf_schedule(SchedulingState& state, const std::vector<MuGroup>& candidates,
                             const Eigen::MatrixXd& group_rates,
                             const std::vector<Eigen::MatrixXd>& ue_rates);

} // namespace fdmimo

#endif // FDMIMO_SCHEDULER_HPP
