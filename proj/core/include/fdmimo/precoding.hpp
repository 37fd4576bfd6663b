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

#ifndef FDMIMO_PRECODING_HPP
#define FDMIMO_PRECODING_HPP

#include <Eigen/Dense>
#include <cstdint>

#include "fdmimo/feedback.hpp"

namespace fdmimo {

// Zero-forcing MU precoder from stacked user channel rows (K x N_T).
// Pseudo-inverse based, equal per-user power split; with ideal CSI the
// off-diagonal entries of H*W vanish. A rank-deficient user set is handled by
// dropping the weakest (smallest channel norm) of the dependent users and
// retrying; dropped users get an all-zero column.
Eigen::MatrixXcd zf_precoder(const Eigen::MatrixXcd& channel_rows, double total_power);

// SLNR MU precoder: column k maximizes the ratio of power towards user k to
// leakage-plus-noise, i.e. the dominant generalized eigenvector of
// (sigma^2 I + sum_{j != k} h_j^H h_j, h_k^H h_k). For the rank-1 per-user
// metric that eigenvector is (sigma^2 I + sum h_j^H h_j)^-1 h_k^H, computed
// here through the Woodbury identity. Equal per-user power split.
Eigen::MatrixXcd slnr_precoder(const Eigen::MatrixXcd& channel_rows, double noise_power,
                               double total_power);

// SLNR of weight w for user k: |h_k w|^2 / (sigma^2 ||w||^2 + leakage).
double slnr_value(const Eigen::MatrixXcd& channel_rows, const Eigen::VectorXcd& w, int user,
                  double noise_power);

// Monte Carlo mean of (1 - overhead) * sum_k log2(1 + SINR_k) for ZF on
// i.i.d. CN(0,1) channels; total power 10^(snr_db/10), unit noise. When
// n_users > n_t the strongest n_t users are served.
double effective_sum_capacity(int n_t, int n_users, double snr_db, double overhead_fraction,
                              int n_draws, uint64_t seed);

// Rank in {1,2} maximizing the estimated sum efficiency; a single receive
// antenna forces rank 1, ties prefer rank 1.
int rank_adapt(int rank1_cqi, int rank2_cqi_a, int rank2_cqi_b, int n_rx,
               const CqiTable& table = CqiTable::lte());

} // namespace fdmimo

#endif // FDMIMO_PRECODING_HPP
