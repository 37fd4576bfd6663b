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

#include "fdmimo/scheduler.hpp"

#include <numeric>
#include <stdexcept>

namespace fdmimo {

SchedulingState::SchedulingState(int n_ue, int window_subframes, double floor_eps)
    : avg_rate_(static_cast<size_t>(n_ue), floor_eps),
      alpha_(1.0 / std::max(1, window_subframes)),
      floor_eps_(floor_eps) {
    if (n_ue < 1) {
        throw std::invalid_argument("SchedulingState: need at least one UE");
    }
}

void SchedulingState::update(const std::vector<double>& rate_this_subframe) {
    if (rate_this_subframe.size() != avg_rate_.size()) {
        throw std::invalid_argument("SchedulingState: rate vector size mismatch");
    }
    for (size_t u = 0; u < avg_rate_.size(); ++u) {
        avg_rate_[u] = (1.0 - alpha_) * avg_rate_[u] + alpha_ * rate_this_subframe[u];
        if (avg_rate_[u] < floor_eps_) {
            avg_rate_[u] = floor_eps_;
        }
    }
}

int MuGroup::total_layers() const {
    return std::accumulate(ranks.begin(), ranks.end(), 0);
}

std::vector<int> pf_schedule(SchedulingState& state, const std::vector<MuGroup>& candidates,
                             const Eigen::MatrixXd& group_rates,
                             const std::vector<Eigen::MatrixXd>& ue_rates) {
    if (candidates.empty()) {
        throw std::invalid_argument("pf_schedule: empty candidate set");
    }
    const int n_groups = static_cast<int>(candidates.size());
    const int n_subbands = static_cast<int>(group_rates.cols());
    if (group_rates.rows() != n_groups ||
        ue_rates.size() != static_cast<size_t>(n_groups)) {
        throw std::invalid_argument("pf_schedule: rate table shape mismatch");
    }

    std::vector<int> chosen(static_cast<size_t>(n_subbands), 0);
    std::vector<double> scheduled(static_cast<size_t>(state.n_ue()), 0.0);
    for (int s = 0; s < n_subbands; ++s) {
        double best_metric = -1.0;
        int best_g = 0;
        for (int g = 0; g < n_groups; ++g) {
            const MuGroup& grp = candidates[static_cast<size_t>(g)];
            double metric = 0.0;
            for (size_t i = 0; i < grp.ue_ids.size(); ++i) {
                metric += ue_rates[static_cast<size_t>(g)](static_cast<Eigen::Index>(i), s) /
                          state.average(grp.ue_ids[i]);
            }
            if (metric > best_metric) {
                best_metric = metric;
                best_g = g;
            }
        }
        chosen[static_cast<size_t>(s)] = best_g;
        const MuGroup& grp = candidates[static_cast<size_t>(best_g)];
        for (size_t i = 0; i < grp.ue_ids.size(); ++i) {
            scheduled[static_cast<size_t>(grp.ue_ids[i])] +=
                ue_rates[static_cast<size_t>(best_g)](static_cast<Eigen::Index>(i), s);
        }
    }
    state.update(scheduled);
    return chosen;
}

} // namespace fdmimo
