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

#include "fdmimo/array.hpp"

#include <cmath>
#include <stdexcept>

namespace fdmimo {

namespace {
constexpr double kDegToRad = M_PI / 180.0;
}

void ArrayConfig::validate() const {
    if (m_vertical < 1 || n_horizontal < 1) {
        throw std::invalid_argument("array: M and N must be >= 1");
    }
    if (polarization != 1 && polarization != 2) {
        throw std::invalid_argument("array: P must be 1 or 2");
    }
    if (dv_lambda <= 0.0 || dh_lambda <= 0.0) {
        throw std::invalid_argument("array: element spacings must be positive");
    }
    if (carrier_hz <= 0.0) {
        throw std::invalid_argument("array: carrier frequency must be positive");
    }
}

double Direction::vertical_cosine() const {
    return std::sin(elevation_deg * kDegToRad);
}

double Direction::horizontal_cosine() const {
    return std::cos(elevation_deg * kDegToRad) * std::sin(azimuth_deg * kDegToRad);
}

ArrayGeometry build_array(const ArrayConfig& config) {
    config.validate();
    const double lambda = config.wavelength_m();
    const double dv = config.dv_lambda * lambda;
    const double dh = config.dh_lambda * lambda;

    std::vector<ArrayElement> elements;
    elements.reserve(static_cast<size_t>(config.n_elements()));
    for (int pol = 0; pol < config.polarization; ++pol) {
        const double slant = (config.polarization == 2) ? (pol == 0 ? 45.0 : -45.0) : 0.0;
        for (int col = 0; col < config.n_horizontal; ++col) {
            for (int row = 0; row < config.m_vertical; ++row) {
                ArrayElement e;
                e.row = row;
                e.col = col;
                e.pol = pol;
                e.slant_deg = slant;
                // panel in the y-z plane, boresight along +x
                e.position_m = Eigen::Vector3d(0.0, col * dh, row * dv);
                elements.push_back(e);
            }
        }
    }

    const double height = (config.m_vertical - 1) * dv;
    const double width = (config.n_horizontal - 1) * dh;
    return ArrayGeometry(config, std::move(elements), height, width);
}

SteeringVector steering_vector(double phi, double gamma, int n) {
    if (n < 1) {
        throw std::invalid_argument("steering_vector: n must be >= 1");
    }
    SteeringVector sv;
    sv.gamma = gamma;
    sv.phi = phi;
    sv.entries.resize(n);
    const double step = -2.0 * M_PI * gamma * phi;
    for (int k = 0; k < n; ++k) {
        sv.entries[k] = std::polar(1.0, step * k);
    }
    return sv;
}

Eigen::VectorXcd panel_steering(const ArrayConfig& config, const Direction& dir) {
    const auto ev = steering_vector(dir.vertical_cosine(), config.dv_lambda,
                                    config.m_vertical).entries;
    const auto eh = steering_vector(dir.horizontal_cosine(), config.dh_lambda,
                                    config.n_horizontal).entries;
    Eigen::VectorXcd out(config.n_positions());
    for (int col = 0; col < config.n_horizontal; ++col) {
        out.segment(col * config.m_vertical, config.m_vertical) = eh[col] * ev;
    }
    return out;
}

double ElementPattern::gain_db(const Direction& dir) const {
    if (kind == Kind::Isotropic) {
        return 0.0;
    }
    const double az = dir.azimuth_deg;
    const double el = dir.elevation_deg - boresight_tilt_deg;
    const double a_h = -std::min(12.0 * (az / az_3db_deg) * (az / az_3db_deg), front_back_db);
    const double a_v = -std::min(12.0 * (el / el_3db_deg) * (el / el_3db_deg), sla_db);
    return max_gain_dbi - std::min(-(a_h + a_v), front_back_db);
}

double ElementPattern::amplitude(const Direction& dir) const {
    return std::pow(10.0, gain_db(dir) / 20.0);
}

cplx array_factor(const ArrayGeometry& geometry, const Eigen::VectorXcd& weights,
                  const Direction& dir, const ElementPattern& pattern) {
    const auto& cfg = geometry.config();
    const Eigen::VectorXcd sp = panel_steering(cfg, dir);
    const double elem_amp = pattern.amplitude(dir);

    const int n_pos = cfg.n_positions();
    cplx sum(0.0, 0.0);
    if (weights.size() == n_pos) {
        sum = (weights.transpose() * sp)(0);
    } else if (weights.size() == geometry.n_elements()) {
        for (int pol = 0; pol < cfg.polarization; ++pol) {
            sum += (weights.segment(pol * n_pos, n_pos).transpose() * sp)(0);
        }
    } else {
        throw std::invalid_argument("array_factor: weight length must match driven elements");
    }
    return elem_amp * sum;
}

double first_null_deg(int n, double spacing_lambda) {
    const double nd = n * spacing_lambda;
    if (nd <= 1.0) {
        throw std::domain_error("first_null: no null exists for n*spacing <= 1");
    }
    return std::asin(1.0 / nd) / kDegToRad;
}

} // namespace fdmimo
