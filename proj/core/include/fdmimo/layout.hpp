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

#ifndef FDMIMO_LAYOUT_HPP
#define FDMIMO_LAYOUT_HPP

#include <Eigen/Dense>
#include <vector>

#include "fdmimo/channel.hpp"
#include "fdmimo/rng.hpp"

namespace fdmimo {

struct CellGeometry {
    int site = 0;
    int sector = 0;
    Eigen::Vector2d site_xy = Eigen::Vector2d::Zero();
    double bearing_deg = 0.0;
};

// Geometry of a UE relative to one cell, after the wraparound shift that
// minimizes the 2D distance: local coordinates are in the sector frame
// (boresight +x), azimuth measured from the sector bearing.
struct RelativeGeometry {
    double distance_2d_m = 0.0;
    double azimuth_deg = 0.0;
    Eigen::Vector2d local_xy = Eigen::Vector2d::Zero();
};

// 19-site, 3-sector hexagonal deployment. Site 0 sits at the origin; sector
// bearings are {0, 120, 240} degrees. Wraparound maps every UE-cell pair to
// the closest of the 7 cluster images.
class NetworkLayout {
public:
    static NetworkLayout build(const Scenario& scenario, bool wraparound = true);

    // Single-site single-sector layout for debugging.
    static NetworkLayout single_cell(const Scenario& scenario);

    int n_cells() const { return static_cast<int>(cells_.size()); }
    int n_sites() const { return n_sites_; }
    const CellGeometry& cell(int c) const { return cells_[static_cast<size_t>(c)]; }
    double isd_m() const { return isd_m_; }
    double bs_height_m() const { return bs_height_m_; }
    bool wraparound() const { return !wrap_shifts_.empty(); }

    RelativeGeometry relative(int cell, const Eigen::Vector2d& ue_xy) const;

    // Uniform position in the sector wedge of the cell's coverage hexagon,
    // at least min_distance from the site.
    Eigen::Vector2d drop_in_sector(int cell, double min_distance_m, Philox4x32& rng) const;

private:
    std::vector<CellGeometry> cells_;
    std::vector<Eigen::Vector2d> wrap_shifts_; // excludes the zero shift
    int n_sites_ = 0;
    double isd_m_ = 0.0;
    double bs_height_m_ = 0.0;
};

NetworkLayout build_layout(const Scenario& scenario, bool wraparound = true);

} // namespace fdmimo

#endif // FDMIMO_LAYOUT_HPP
