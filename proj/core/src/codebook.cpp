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

#include "fdmimo/codebook.hpp"

#include <cmath>
#include <stdexcept>

namespace fdmimo {

namespace {

int bits_for(int count) {
    int bits = 0;
    while ((1 << bits) < count) ++bits;
    return bits;
}

} // namespace

int Codebook::bits() const { return bits_for(size()); }
int BeamSet::bits() const { return bits_for(size()); }

Codebook build_dft_codebook(int n_ports, int oversampling) {
    if (n_ports < 1 || oversampling < 1) {
        throw std::invalid_argument("build_dft_codebook: n_ports and oversampling must be >= 1");
    }
    const int count = n_ports * oversampling;
    Codebook cb;
    cb.codewords.resize(n_ports, count);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_ports));
    for (int i = 0; i < count; ++i) {
        for (int k = 0; k < n_ports; ++k) {
            cb.codewords(k, i) = scale * std::polar(1.0, 2.0 * M_PI * k * i / count);
        }
    }
    return cb;
}

Codebook kronecker_codebook(const Codebook& vertical, const Codebook& horizontal) {
    Codebook cb;
    cb.kronecker = true;
    cb.v_count = vertical.size();
    cb.h_count = horizontal.size();
    const int n_ports = vertical.n_ports() * horizontal.n_ports();
    cb.codewords.resize(n_ports, cb.v_count * cb.h_count);
    for (int v = 0; v < cb.v_count; ++v) {
        for (int h = 0; h < cb.h_count; ++h) {
            Eigen::VectorXcd w(n_ports);
            for (int kv = 0; kv < vertical.n_ports(); ++kv) {
                w.segment(kv * horizontal.n_ports(), horizontal.n_ports()) =
                    vertical.codewords(kv, v) * horizontal.codewords.col(h);
            }
            cb.codewords.col(v * cb.h_count + h) = w;
        }
    }
    return cb;
}

double dft_index_to_dircos(int index, int n_ports, int oversampling, double gamma) {
    const int count = n_ports * oversampling;
    int folded = index % count;
    if (folded > count / 2) {
        folded -= count;
    }
    // codeword w_i[k] = exp(+j 2 pi k i / count) matches the conjugated
    // steering direction phi = -i/(count*gamma)
    return -static_cast<double>(folded) / (count * gamma);
}

Selection select_pmi(const Eigen::VectorXcd& channel, const Codebook& codebook) {
    if (codebook.size() == 0) {
        throw std::invalid_argument("select_pmi: empty codebook");
    }
    if (channel.size() != codebook.codewords.rows()) {
        throw std::invalid_argument("select_pmi: channel length must match port count");
    }
    Selection best;
    best.index = 0;
    best.metric = -1.0;
    for (int i = 0; i < codebook.size(); ++i) {
        const double m = std::norm(channel.dot(codebook.codewords.col(i)));
        if (m > best.metric) {
            best.metric = m;
            best.index = i;
        }
    }
    return best;
}

Selection select_beam(const Eigen::VectorXcd& channel, const BeamSet& beams) {
    if (beams.size() == 0) {
        throw std::invalid_argument("select_beam: empty beam set");
    }
    if (channel.size() != beams.beams.rows()) {
        throw std::invalid_argument("select_beam: channel length must match beam dimension");
    }
    Selection best;
    best.index = 0;
    best.metric = -1.0;
    for (int j = 0; j < beams.size(); ++j) {
        const double m = std::norm(channel.dot(beams.beams.col(j)));
        if (m > best.metric) {
            best.metric = m;
            best.index = j;
        }
    }
    return best;
}

Selection select_beam(const Eigen::MatrixXcd& channel_rows, const BeamSet& beams) {
    if (beams.size() == 0) {
        throw std::invalid_argument("select_beam: empty beam set");
    }
    Selection best;
    best.index = 0;
    best.metric = -1.0;
    for (int j = 0; j < beams.size(); ++j) {
        const double m = (channel_rows * beams.beams.col(j)).squaredNorm();
        if (m > best.metric) {
            best.metric = m;
            best.index = j;
        }
    }
    return best;
}

cplx select_co_phase(const Eigen::VectorXcd& h_pol1, const Eigen::VectorXcd& h_pol2,
                     const Eigen::VectorXcd& beam) {
    const cplx a1 = h_pol1.dot(beam);
    const cplx a2 = h_pol2.dot(beam);
    if (std::abs(a1) == 0.0 && std::abs(a2) == 0.0) {
        throw std::invalid_argument("select_co_phase: zero channel");
    }
    static const cplx qpsk[4] = {cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
    cplx best = qpsk[0];
    double best_metric = -1.0;
    for (const cplx& c : qpsk) {
        const double m = std::norm(a1 + c * a2);
        if (m > best_metric) {
            best_metric = m;
            best = c;
        }
    }
    return best;
}

Eigen::VectorXcd dualpol_codeword(const Eigen::VectorXcd& copol, cplx co_phase) {
    Eigen::VectorXcd w(2 * copol.size());
    const double s = 1.0 / std::sqrt(2.0);
    w.head(copol.size()) = s * copol;
    w.tail(copol.size()) = s * co_phase * copol;
    return w;
}

} // namespace fdmimo
