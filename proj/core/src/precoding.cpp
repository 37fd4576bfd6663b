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

#include "fdmimo/precoding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "fdmimo/rng.hpp"

namespace fdmimo {

namespace {

// ZF over an active user subset; returns false when the subset is rank
// deficient (then `weakest` holds the active user with the smallest norm).
bool try_zf(const Eigen::MatrixXcd& h, const std::vector<int>& active,
            Eigen::MatrixXcd& w_out, int& weakest) {
    const int k = static_cast<int>(active.size());
    Eigen::MatrixXcd hs(k, h.cols());
    for (int i = 0; i < k; ++i) {
        hs.row(i) = h.row(active[static_cast<size_t>(i)]);
    }
    const Eigen::MatrixXcd gram = hs * hs.adjoint();
    const Eigen::FullPivLU<Eigen::MatrixXcd> lu(gram);
    const double rcond = lu.rcond();
    if (!lu.isInvertible() || rcond < 1e-12) {
        double min_norm = -1.0;
        weakest = active[0];
        for (int idx : active) {
            const double n = h.row(idx).norm();
            if (min_norm < 0.0 || n < min_norm) {
                min_norm = n;
                weakest = idx;
            }
        }
        return false;
    }
    w_out = hs.adjoint() * lu.inverse();
    return true;
}

} // namespace

Eigen::MatrixXcd zf_precoder(const Eigen::MatrixXcd& channel_rows, double total_power) {
    const int k = static_cast<int>(channel_rows.rows());
    const int n_t = static_cast<int>(channel_rows.cols());
    if (k == 0) {
        throw std::invalid_argument("zf_precoder: no users");
    }
    if (k > n_t) {
        throw std::invalid_argument("zf_precoder: user count exceeds antenna count");
    }

    std::vector<int> active(static_cast<size_t>(k));
    std::iota(active.begin(), active.end(), 0);

    Eigen::MatrixXcd w_active;
    int weakest = -1;
    while (!try_zf(channel_rows, active, w_active, weakest)) {
        active.erase(std::remove(active.begin(), active.end(), weakest), active.end());
        if (active.empty()) {
            return Eigen::MatrixXcd::Zero(n_t, k);
        }
    }

    Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(n_t, k);
    const double per_user = total_power / static_cast<double>(active.size());
    for (size_t i = 0; i < active.size(); ++i) {
        Eigen::VectorXcd col = w_active.col(static_cast<Eigen::Index>(i));
        const double n = col.norm();
        if (n > 0.0) {
            w.col(active[i]) = std::sqrt(per_user) * col / n;
        }
    }
    return w;
}

Eigen::MatrixXcd slnr_precoder(const Eigen::MatrixXcd& channel_rows, double noise_power,
                               double total_power) {
    const int k = static_cast<int>(channel_rows.rows());
    const int n_t = static_cast<int>(channel_rows.cols());
    if (k == 0) {
        throw std::invalid_argument("slnr_precoder: no users");
    }
    if (noise_power <= 0.0) {
        throw std::invalid_argument("slnr_precoder: noise power must be positive");
    }

    Eigen::MatrixXcd w(n_t, k);
    const double per_user = total_power / k;
    for (int u = 0; u < k; ++u) {
        // B_u^-1 h_u^H with B_u = sigma^2 I + U U^H, U = other users' columns
        Eigen::MatrixXcd others(n_t, k - 1);
        int c = 0;
        for (int j = 0; j < k; ++j) {
            if (j != u) {
                others.col(c++) = channel_rows.row(j).adjoint();
            }
        }
        const Eigen::VectorXcd hu = channel_rows.row(u).adjoint();
        Eigen::VectorXcd col;
        if (k == 1) {
            col = hu / noise_power;
        } else {
            const Eigen::MatrixXcd small =
                noise_power * Eigen::MatrixXcd::Identity(k - 1, k - 1) +
                others.adjoint() * others;
            col = (hu - others * small.ldlt().solve(others.adjoint() * hu)) / noise_power;
        }
        const double n = col.norm();
        w.col(u) = (n > 0.0) ? Eigen::VectorXcd(std::sqrt(per_user) * col / n)
                             : Eigen::VectorXcd(Eigen::VectorXcd::Zero(n_t));
    }
    return w;
}

double slnr_value(const Eigen::MatrixXcd& channel_rows, const Eigen::VectorXcd& w, int user,
                  double noise_power) {
    const double signal = std::norm(channel_rows.row(user) * w);
    double leakage = 0.0;
    for (int j = 0; j < channel_rows.rows(); ++j) {
        if (j != user) {
            leakage += std::norm(channel_rows.row(j) * w);
        }
    }
    return signal / (noise_power * w.squaredNorm() + leakage);
}

double effective_sum_capacity(int n_t, int n_users, double snr_db, double overhead_fraction,
                              int n_draws, uint64_t seed) {
    if (overhead_fraction >= 1.0) {
        throw std::invalid_argument("effective_sum_capacity: overhead must be < 1");
    }
    if (n_t < 1 || n_users < 1 || n_draws < 1) {
        throw std::invalid_argument("effective_sum_capacity: invalid sizes");
    }
    const double total_power = std::pow(10.0, snr_db / 10.0);
    const int served = std::min(n_users, n_t);

    double acc = 0.0;
    for (int draw = 0; draw < n_draws; ++draw) {
        auto rng = make_rng(seed, kStreamCapacityMc, static_cast<uint64_t>(draw));
        Eigen::MatrixXcd h(n_users, n_t);
        for (int r = 0; r < n_users; ++r) {
            for (int c = 0; c < n_t; ++c) {
                h(r, c) = rng.cnormal();
            }
        }
        Eigen::MatrixXcd hs = h;
        if (served < n_users) {
            std::vector<int> order(static_cast<size_t>(n_users));
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                const double na = h.row(a).squaredNorm();
                const double nb = h.row(b).squaredNorm();
                return na != nb ? na > nb : a < b;
            });
            hs.resize(served, n_t);
            for (int i = 0; i < served; ++i) {
                hs.row(i) = h.row(order[static_cast<size_t>(i)]);
            }
        }
        const Eigen::MatrixXcd w = zf_precoder(hs, total_power);
        double sum_rate = 0.0;
        for (int u = 0; u < served; ++u) {
            const double sinr = std::norm(hs.row(u) * w.col(u)); // unit noise
            sum_rate += std::log2(1.0 + sinr);
        }
        acc += sum_rate;
    }
    return (1.0 - overhead_fraction) * acc / n_draws;
}

int rank_adapt(int rank1_cqi, int rank2_cqi_a, int rank2_cqi_b, int n_rx,
               const CqiTable& table) {
    if (n_rx < 2) {
        return 1;
    }
    const auto eff = [&](int cqi) {
        const int i = std::min(std::max(cqi, 0), static_cast<int>(table.efficiency.size()) - 1);
        return table.efficiency[static_cast<size_t>(i)];
    };
    const double r1 = eff(rank1_cqi);
    const double r2 = eff(rank2_cqi_a) + eff(rank2_cqi_b);
    return r2 > r1 ? 2 : 1;
}

} // namespace fdmimo
