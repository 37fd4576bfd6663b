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

#ifndef FDMIMO_CODEBOOK_HPP
#define FDMIMO_CODEBOOK_HPP

#include <Eigen/Dense>
#include <vector>

#include "fdmimo/array.hpp"

namespace fdmimo {

// Rank-1 codebook: unit-norm columns. A Kronecker composite codebook indexes
// codewords as index = v_index * h_count + h_index.
struct Codebook {
    Eigen::MatrixXcd codewords; // n_ports x count
    bool kronecker = false;
    int v_count = 0;
    int h_count = 0;

    int size() const { return static_cast<int>(codewords.cols()); }
    int n_ports() const { return static_cast<int>(codewords.rows()); }
    int bits() const;
    int v_index_of(int index) const { return kronecker ? index / h_count : index; }
    int h_index_of(int index) const { return kronecker ? index % h_count : index; }
};

// n_ports*oversampling DFT columns, w_i[k] = exp(j*2*pi*k*i/(n*o))/sqrt(n).
Codebook build_dft_codebook(int n_ports, int oversampling);

// All pairwise Kronecker products (vertical varies slowest).
Codebook kronecker_codebook(const Codebook& vertical, const Codebook& horizontal);

// Directional cosine of DFT codeword i for element spacing gamma, with the
// upper half of the grid folded to negative cosines.
double dft_index_to_dircos(int index, int n_ports, int oversampling, double gamma);

struct Selection {
    int index = 0;
    double metric = 0.0;
};

// argmax_i |h^H w_i|^2; ties break to the lowest index. Throws on an empty
// codebook. The winning index is invariant to positive scaling and global
// phase rotation of the channel.
Selection select_pmi(const Eigen::VectorXcd& channel, const Codebook& codebook);

// Beamformed CSI-RS weight set; columns are unit-norm beams.
struct BeamSet {
    Eigen::MatrixXcd beams; // dim x n_beams

    int size() const { return static_cast<int>(beams.cols()); }
    int bits() const;
};

// argmax_j |h^H v_j|^2, same conventions as select_pmi.
Selection select_beam(const Eigen::VectorXcd& channel, const BeamSet& beams);

// Multi-antenna variant: metric per column is ||H w||^2 summed over rows.
Selection select_beam(const Eigen::MatrixXcd& channel_rows, const BeamSet& beams);

// QPSK co-phase c in {1, j, -1, -j} maximizing |h_p1^H v + c * h_p2^H v|^2,
// i.e. the phase applied to the second polarization branch of the precoder
// [v; c v]. Throws when both projections vanish.
cplx select_co_phase(const Eigen::VectorXcd& h_pol1, const Eigen::VectorXcd& h_pol2,
                     const Eigen::VectorXcd& beam);

// Dual-polarized rank-1 codeword [w; c*w]/sqrt(2) over pol-major ports.
Eigen::VectorXcd dualpol_codeword(const Eigen::VectorXcd& copol, cplx co_phase);

} // namespace fdmimo

#endif // FDMIMO_CODEBOOK_HPP
