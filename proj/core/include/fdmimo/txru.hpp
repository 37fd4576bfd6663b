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

#ifndef FDMIMO_TXRU_HPP
#define FDMIMO_TXRU_HPP

#include <Eigen/Dense>
#include <vector>

#include "fdmimo/array.hpp"

namespace fdmimo {

enum class TxruKind { Partitioned, Connected };

// TXRU counts in the vertical / horizontal dimension. NH counts horizontal
// ports including polarization (e.g. a dual-polarized 4-column panel mapped
// one TXRU per column per polarization has NH = 8).
struct TxruGrid {
    int n_v = 1;
    int n_h = 8;
};

// One TXRU's drive pattern: a weight block on an explicit (rows x cols)
// element subset of one polarization. Row lists may wrap around the panel in
// the connected architecture.
struct TxruPort {
    int pol = 0;
    std::vector<int> rows;
    std::vector<int> cols;
    Eigen::MatrixXcd weights; // rows.size() x cols.size()
};

// Radio distribution network between L TXRUs and the M*N*P element panel.
class TxruArchitecture {
public:
    TxruKind kind = TxruKind::Partitioned;
    int l_txru = 0;
    int l_prime = 1;      // per-element TXRU fan-in (connected architecture)
    double nc = 0.0;      // effective per-TXRU element count
    TxruGrid grid;
    ArrayConfig array;
    Eigen::MatrixXcd w_t; // N_T x L virtualization matrix
    std::vector<TxruPort> ports;

    int n_elements() const { return array.n_elements(); }
};

// Array partitioning: disjoint sub-arrays, one TXRU each, identical sub-array
// weight. The weight runs over the sub-array in element order (rows fastest).
// Port index = pol*(NV*NHgroups) + vgroup*NHgroups + hgroup, i.e. horizontal
// runs fastest so a composite (vertical kron horizontal) codeword lines up
// with the per-polarization port block.
TxruArchitecture build_partitioned(const ArrayGeometry& geometry, const TxruGrid& grid,
                                   const Eigen::VectorXcd& subarray_weight);

// Array connected: L beams (replicated over polarizations), each beam driving
// N_c = N_T*L'/L elements through cyclically overlapping row groups; every
// element sees exactly L' TXRUs of its polarization.
TxruArchitecture build_connected(const ArrayGeometry& geometry, int l_txru, int l_prime,
                                 const std::vector<Direction>& beam_directions);

// Convenience: DFT sub-array weight steering a K_v x K_h sub-array.
Eigen::VectorXcd subarray_dft_weight(const ArrayConfig& config, int k_v, int k_h,
                                     const Direction& dir);

struct PrecoderStack {
    Eigen::MatrixXcd w_t; // N_T x L
    Eigen::MatrixXcd w_p; // L x N_P  (CSI-RS port mapping)
    Eigen::MatrixXcd w_u; // N_P x r  (codebook precoder)
};

struct ComposedPrecoder {
    Eigen::MatrixXcd w_data; // N_T x r
    Eigen::MatrixXcd w_rs;   // L x r
};

// W_data = W_T * W_P * W_U, W_rs = W_P * W_U. Throws on shape mismatch.
ComposedPrecoder compose_precoder(const PrecoderStack& stack);

// Scales W so its total transmit power (squared Frobenius norm) equals
// p_total. A zero precoder is left untouched.
void normalize_total_power(Eigen::MatrixXcd& w, double p_total);

// Per-antenna transmit power, summed over precoder columns (ranks).
Eigen::VectorXd per_antenna_power(const Eigen::MatrixXcd& w);

} // namespace fdmimo

#endif // FDMIMO_TXRU_HPP
