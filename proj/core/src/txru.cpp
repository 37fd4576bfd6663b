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

#include "fdmimo/txru.hpp"

#include <cmath>
#include <stdexcept>

namespace fdmimo {

namespace {

// Scatter a port's weight block into the element-domain column of W_T.
void fill_column(Eigen::MatrixXcd& w_t, const TxruPort& port, int column, int m, int n) {
    const int n_pos = m * n;
    for (size_t ci = 0; ci < port.cols.size(); ++ci) {
        for (size_t ri = 0; ri < port.rows.size(); ++ri) {
            const int idx = port.pol * n_pos + port.cols[ci] * m + port.rows[ri];
            w_t(idx, column) = port.weights(static_cast<Eigen::Index>(ri),
                                            static_cast<Eigen::Index>(ci));
        }
    }
}

} // namespace

TxruArchitecture build_partitioned(const ArrayGeometry& geometry, const TxruGrid& grid,
                                   const Eigen::VectorXcd& subarray_weight) {
    const ArrayConfig& cfg = geometry.config();
    const int m = cfg.m_vertical;
    const int n = cfg.n_horizontal;
    const int p = cfg.polarization;

    if (grid.n_v < 1 || grid.n_h < 1) {
        throw std::invalid_argument("txru: grid counts must be >= 1");
    }
    if (grid.n_h % p != 0) {
        throw std::invalid_argument("txru: NH must be divisible by the polarization degree");
    }
    const int nh_groups = grid.n_h / p;
    if (m % grid.n_v != 0 || n % nh_groups != 0) {
        throw std::invalid_argument("txru: panel is not divisible into the requested grid");
    }
    const int k_v = m / grid.n_v;
    const int k_h = n / nh_groups;
    if (subarray_weight.size() != static_cast<Eigen::Index>(k_v) * k_h) {
        throw std::invalid_argument("txru: sub-array weight length must be Kv*Kh");
    }

    TxruArchitecture arch;
    arch.kind = TxruKind::Partitioned;
    arch.grid = grid;
    arch.array = cfg;
    arch.l_txru = grid.n_v * grid.n_h;
    arch.l_prime = 1;
    arch.nc = static_cast<double>(cfg.n_elements()) / arch.l_txru;

    Eigen::MatrixXcd block(k_v, k_h);
    for (int c = 0; c < k_h; ++c) {
        block.col(c) = subarray_weight.segment(c * k_v, k_v);
    }

    arch.w_t = Eigen::MatrixXcd::Zero(cfg.n_elements(), arch.l_txru);
    arch.ports.reserve(static_cast<size_t>(arch.l_txru));
    for (int pol = 0; pol < p; ++pol) {
        for (int vg = 0; vg < grid.n_v; ++vg) {
            for (int hg = 0; hg < nh_groups; ++hg) {
                TxruPort port;
                port.pol = pol;
                port.rows.resize(static_cast<size_t>(k_v));
                for (int r = 0; r < k_v; ++r) port.rows[static_cast<size_t>(r)] = vg * k_v + r;
                port.cols.resize(static_cast<size_t>(k_h));
                for (int c = 0; c < k_h; ++c) port.cols[static_cast<size_t>(c)] = hg * k_h + c;
                port.weights = block;
                const int column = static_cast<int>(arch.ports.size());
                fill_column(arch.w_t, port, column, m, n);
                arch.ports.push_back(std::move(port));
            }
        }
    }
    return arch;
}

TxruArchitecture build_connected(const ArrayGeometry& geometry, int l_txru, int l_prime,
                                 const std::vector<Direction>& beam_directions) {
    const ArrayConfig& cfg = geometry.config();
    const int m = cfg.m_vertical;
    const int n = cfg.n_horizontal;
    const int p = cfg.polarization;
    const int n_t = cfg.n_elements();

    if (l_txru < 1) {
        throw std::invalid_argument("txru: L must be >= 1");
    }
    if (l_prime < 1 || l_prime > l_txru) {
        throw std::invalid_argument("txru: L' must satisfy 1 <= L' <= L");
    }
    if (static_cast<int>(beam_directions.size()) != l_txru) {
        throw std::invalid_argument("txru: need one beam direction per TXRU");
    }
    if (l_txru % p != 0) {
        throw std::invalid_argument("txru: L must be divisible by the polarization degree");
    }
    const int beams_per_pol = l_txru / p;
    if ((static_cast<long>(n_t) * l_prime) % l_txru != 0) {
        throw std::invalid_argument("txru: N_T*L'/L must be an integer");
    }
    const int n_c = static_cast<int>(static_cast<long>(n_t) * l_prime / l_txru);
    if (n_c % n != 0) {
        throw std::invalid_argument("txru: per-beam element count must span whole columns");
    }
    const int rows_per_beam = n_c / n;
    if (rows_per_beam > m) {
        throw std::invalid_argument("txru: per-beam rows exceed the panel height");
    }
    if (m % beams_per_pol != 0 && rows_per_beam != m) {
        throw std::invalid_argument("txru: beam row offsets must tile the panel");
    }
    const int stride = (rows_per_beam == m) ? 0 : m / beams_per_pol;

    TxruArchitecture arch;
    arch.kind = TxruKind::Connected;
    arch.array = cfg;
    arch.l_txru = l_txru;
    arch.l_prime = l_prime;
    arch.nc = static_cast<double>(n_c);
    arch.grid = TxruGrid{1, l_txru};

    arch.w_t = Eigen::MatrixXcd::Zero(n_t, l_txru);
    arch.ports.reserve(static_cast<size_t>(l_txru));
    int column = 0;
    for (int pol = 0; pol < p; ++pol) {
        for (int b = 0; b < beams_per_pol; ++b, ++column) {
            const Direction& dir = beam_directions[static_cast<size_t>(column)];
            const double phi_v = dir.vertical_cosine();
            const double phi_h = dir.horizontal_cosine();

            TxruPort port;
            port.pol = pol;
            port.rows.resize(static_cast<size_t>(rows_per_beam));
            for (int r = 0; r < rows_per_beam; ++r) {
                port.rows[static_cast<size_t>(r)] = (b * stride + r) % m;
            }
            port.cols.resize(static_cast<size_t>(n));
            for (int c = 0; c < n; ++c) port.cols[static_cast<size_t>(c)] = c;

            // absolute-row phases keep beams from different supports coherent
            port.weights.resize(rows_per_beam, n);
            for (int c = 0; c < n; ++c) {
                const cplx wh = std::polar(1.0, -2.0 * M_PI * cfg.dh_lambda * phi_h * c);
                for (int r = 0; r < rows_per_beam; ++r) {
                    const int row = port.rows[static_cast<size_t>(r)];
                    port.weights(r, c) =
                        wh * std::polar(1.0, -2.0 * M_PI * cfg.dv_lambda * phi_v * row);
                }
            }
            fill_column(arch.w_t, port, column, m, n);
            arch.ports.push_back(std::move(port));
        }
    }
    return arch;
}

Eigen::VectorXcd subarray_dft_weight(const ArrayConfig& config, int k_v, int k_h,
                                     const Direction& dir) {
    const auto ev = steering_vector(dir.vertical_cosine(), config.dv_lambda, k_v).entries;
    const auto eh = steering_vector(dir.horizontal_cosine(), config.dh_lambda, k_h).entries;
    Eigen::VectorXcd out(static_cast<Eigen::Index>(k_v) * k_h);
    for (int c = 0; c < k_h; ++c) {
        out.segment(c * k_v, k_v) = eh[c] * ev;
    }
    return out;
}

ComposedPrecoder compose_precoder(const PrecoderStack& stack) {
    if (stack.w_t.cols() != stack.w_p.rows() || stack.w_p.cols() != stack.w_u.rows()) {
        throw std::invalid_argument("compose_precoder: shape chain N_TxL, LxN_P, N_Pxr mismatch");
    }
    ComposedPrecoder out;
    out.w_rs = stack.w_p * stack.w_u;
    out.w_data = stack.w_t * out.w_rs;
    return out;
}

void normalize_total_power(Eigen::MatrixXcd& w, double p_total) {
    const double norm2 = w.squaredNorm();
    if (norm2 > 0.0) {
        w *= std::sqrt(p_total / norm2);
    }
}

Eigen::VectorXd per_antenna_power(const Eigen::MatrixXcd& w) {
    return w.rowwise().squaredNorm();
}

} // namespace fdmimo
