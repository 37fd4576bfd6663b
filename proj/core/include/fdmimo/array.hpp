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

#ifndef FDMIMO_ARRAY_HPP
#define FDMIMO_ARRAY_HPP

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace fdmimo {

using cplx = std::complex<double>;

constexpr double kSpeedOfLight = 299792458.0;

// 2D dual-polarized antenna panel: M rows (vertical) x N columns (horizontal),
// P polarizations per position (P=2 means co-located +/-45 deg slants).
struct ArrayConfig {
    int m_vertical = 8;
    int n_horizontal = 4;
    int polarization = 2;       // P in {1,2}
    double dv_lambda = 0.8;     // vertical spacing in wavelengths
    double dh_lambda = 0.5;     // horizontal spacing in wavelengths
    double carrier_hz = 2.0e9;

    int n_elements() const { return m_vertical * n_horizontal * polarization; }
    int n_positions() const { return m_vertical * n_horizontal; }
    double wavelength_m() const { return kSpeedOfLight / carrier_hz; }

    // Throws std::invalid_argument when any invariant is violated.
    void validate() const;
};

struct ArrayElement {
    int row = 0;
    int col = 0;
    int pol = 0;            // 0 or 1
    double slant_deg = 0.0; // +45 / -45 for dual polarization
    Eigen::Vector3d position_m = Eigen::Vector3d::Zero();
};

// Direction convention: azimuth in degrees from array boresight (positive
// towards +y), elevation in degrees from the horizontal plane (positive up).
// Directional cosines: vertical sin(el), horizontal cos(el)*sin(az).
struct Direction {
    double azimuth_deg = 0.0;
    double elevation_deg = 0.0;

    double vertical_cosine() const;
    double horizontal_cosine() const;
};

class ArrayGeometry {
public:
    ArrayGeometry() = default;
    ArrayGeometry(ArrayConfig config, std::vector<ArrayElement> elements,
                  double bbox_height_m, double bbox_width_m)
        : config_(config), elements_(std::move(elements)),
          bbox_height_m_(bbox_height_m), bbox_width_m_(bbox_width_m) {}

    const ArrayConfig& config() const { return config_; }
    const std::vector<ArrayElement>& elements() const { return elements_; }
    int n_elements() const { return static_cast<int>(elements_.size()); }
    double bounding_box_height_m() const { return bbox_height_m_; }
    double bounding_box_width_m() const { return bbox_width_m_; }

private:
    ArrayConfig config_;
    std::vector<ArrayElement> elements_;
    double bbox_height_m_ = 0.0;
    double bbox_width_m_ = 0.0;
};

// Lays elements on the regular grid. Element index = pol*(M*N) + col*M + row,
// i.e. rows run fastest, then columns, then polarization.
ArrayGeometry build_array(const ArrayConfig& config);

struct SteeringVector {
    Eigen::VectorXcd entries;
    double gamma = 0.0; // normalized antenna spacing (wavelengths)
    double phi = 0.0;   // directional cosine
};

// Entry k = exp(-j*2*pi*k*gamma*phi), k = 0..n-1.
SteeringVector steering_vector(double phi, double gamma, int n);

// Spatial steering vector of the full panel for one polarization:
// kron(horizontal, vertical), length M*N, matching the element index order.
Eigen::VectorXcd panel_steering(const ArrayConfig& config, const Direction& dir);

// 3GPP-style parabolic element pattern; Isotropic ignores all parameters.
struct ElementPattern {
    enum class Kind { Isotropic, Sector3gpp };
    Kind kind = Kind::Isotropic;
    double max_gain_dbi = 8.0;
    double az_3db_deg = 65.0;
    double el_3db_deg = 65.0;
    double front_back_db = 30.0; // horizontal attenuation floor Am
    double sla_db = 30.0;        // vertical sidelobe attenuation floor
    double boresight_tilt_deg = 0.0;

    double gain_db(const Direction& dir) const;
    double amplitude(const Direction& dir) const;
};

// Coherent sum of weighted element responses toward the direction.
// Weights of length M*N drive one polarization; length M*N*P drives all
// elements. Any other length throws std::invalid_argument.
cplx array_factor(const ArrayGeometry& geometry, const Eigen::VectorXcd& weights,
                  const Direction& dir,
                  const ElementPattern& pattern = ElementPattern{});

// First null of a uniform linear array, arcsin(1/(n*d)) in degrees.
// Throws std::domain_error when n*d <= 1 (no null exists).
double first_null_deg(int n, double spacing_lambda);

} // namespace fdmimo

#endif // FDMIMO_ARRAY_HPP
