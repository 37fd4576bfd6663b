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

#include "fdmimo/layout.hpp"

#include <cmath>
#include <stdexcept>

namespace fdmimo {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

double wrap_deg(double a) {
    while (a > 180.0) a -= 360.0;
    while (a < -180.0) a += 360.0;
    return a;
}

// Voronoi cell of the triangular site lattice: regular hexagon with inradius
// isd/2; membership tested against the three lattice axes.
bool inside_hex(const Eigen::Vector2d& p, double isd) {
    const double r = isd / 2.0;
    for (int k = 0; k < 3; ++k) {
        const double a = 60.0 * k * kDegToRad;
        const Eigen::Vector2d axis(std::cos(a), std::sin(a));
        if (std::abs(p.dot(axis)) > r + 1e-12) {
            return false;
        }
    }
    return true;
}

} // namespace

NetworkLayout NetworkLayout::build(const Scenario& scenario, bool wraparound) {
    NetworkLayout layout;
    layout.isd_m_ = scenario.isd_m;
    layout.bs_height_m_ = scenario.bs_height_m;

    const double isd = scenario.isd_m;
    std::vector<Eigen::Vector2d> sites;
    sites.emplace_back(0.0, 0.0);
    for (int k = 0; k < 6; ++k) {
        const double a = 60.0 * k * kDegToRad;
        sites.emplace_back(isd * std::cos(a), isd * std::sin(a));
    }
    for (int k = 0; k < 6; ++k) {
        const double a = 60.0 * k * kDegToRad;
        sites.emplace_back(2.0 * isd * std::cos(a), 2.0 * isd * std::sin(a));
    }
    for (int k = 0; k < 6; ++k) {
        const double a = (30.0 + 60.0 * k) * kDegToRad;
        const double d = std::sqrt(3.0) * isd;
        sites.emplace_back(d * std::cos(a), d * std::sin(a));
    }

    layout.n_sites_ = static_cast<int>(sites.size());
    for (int s = 0; s < layout.n_sites_; ++s) {
        for (int sec = 0; sec < 3; ++sec) {
            CellGeometry cell;
            cell.site = s;
            cell.sector = sec;
            cell.site_xy = sites[static_cast<size_t>(s)];
            cell.bearing_deg = 120.0 * sec;
            layout.cells_.push_back(cell);
        }
    }

    if (wraparound) {
        // 19-site cluster translation 3*a1 + 2*a2 and its 60-degree rotations
        const Eigen::Vector2d t(4.0 * isd, std::sqrt(3.0) * isd);
        for (int k = 0; k < 6; ++k) {
            const double a = 60.0 * k * kDegToRad;
            const Eigen::Rotation2D<double> rot(a);
            layout.wrap_shifts_.push_back(rot * t);
        }
    }
    return layout;
}

NetworkLayout NetworkLayout::single_cell(const Scenario& scenario) {
    NetworkLayout layout;
    layout.isd_m_ = scenario.isd_m;
    layout.bs_height_m_ = scenario.bs_height_m;
    layout.n_sites_ = 1;
    CellGeometry cell;
    layout.cells_.push_back(cell);
    return layout;
}

RelativeGeometry NetworkLayout::relative(int cell, const Eigen::Vector2d& ue_xy) const {
    const CellGeometry& c = cells_[static_cast<size_t>(cell)];
    Eigen::Vector2d best = ue_xy - c.site_xy;
    double best_d2 = best.squaredNorm();
    for (const Eigen::Vector2d& shift : wrap_shifts_) {
        for (double sign : {1.0, -1.0}) {
            const Eigen::Vector2d d = ue_xy + sign * shift - c.site_xy;
            const double d2 = d.squaredNorm();
            if (d2 < best_d2) {
                best_d2 = d2;
                best = d;
            }
        }
    }

    RelativeGeometry rel;
    rel.distance_2d_m = std::sqrt(best_d2);
    const double b = c.bearing_deg * kDegToRad;
    rel.local_xy = Eigen::Vector2d(std::cos(b) * best.x() + std::sin(b) * best.y(),
                                   -std::sin(b) * best.x() + std::cos(b) * best.y());
    rel.azimuth_deg = wrap_deg(std::atan2(rel.local_xy.y(), rel.local_xy.x()) / kDegToRad);
    return rel;
}

Eigen::Vector2d NetworkLayout::drop_in_sector(int cell, double min_distance_m,
                                              Philox4x32& rng) const {
    const CellGeometry& c = cells_[static_cast<size_t>(cell)];
    const bool lone_cell = (n_sites_ == 1);
    const double radius = isd_m_ / std::sqrt(3.0);
    for (int attempt = 0; attempt < 10000; ++attempt) {
        const Eigen::Vector2d p(rng.uniform(-radius, radius), rng.uniform(-radius, radius));
        if (p.norm() < min_distance_m) {
            continue;
        }
        if (!lone_cell && !inside_hex(p, isd_m_)) {
            continue;
        }
        if (lone_cell && p.norm() > radius) {
            continue;
        }
        const double az = wrap_deg(std::atan2(p.y(), p.x()) / kDegToRad - c.bearing_deg);
        if (std::abs(az) > 60.0) {
            continue;
        }
        return c.site_xy + p;
    }
    throw std::runtime_error("drop_in_sector: rejection sampling failed");
}

} // namespace fdmimo
