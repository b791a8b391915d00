// radiomap - indoor radio map construction and trajectory recovery toolkit
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

#ifndef RADIOMAP_CHANNEL_HPP
#define RADIOMAP_CHANNEL_HPP

#include <armadillo>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "radiomap/scene.hpp"

namespace rmap
{

constexpr double kSpeedOfLight = 3.0e8; // m/s

struct RadioConfig
{
    double carrier_freq = 2.4e9; // Hz
    double bandwidth = 20.0e6;   // Hz
    int num_subcarriers = 64;

    double wavelength() const { return kSpeedOfLight / carrier_freq; }

    // Also checks M > N_t for every AP in the environment.
    void validate(const Environment &env) const;
};

struct MultipathComponent
{
    std::complex<double> gain; // kappa
    double delay = 0.0;        // seconds, >= 0
    double aod_global = 0.0;   // radians, global frame
};

struct CsiMatrix
{
    arma::cx_mat entries; // N_t x M
    int ap_index = 0;
    int slot_index = 0;
};

// ULA response for a local departure angle in (-pi/2, pi/2); element n gets
// phase -(2*pi/lambda) * n * spacing * sin(aod_local). Element 0 is 1.
arma::cx_vec steering_vector(double aod_local, int num_antennas, double spacing, double wavelength);

// Geometric multipath synthesis: direct path when visible plus one
// single-bounce image-method path per obstacle whose mirror geometry is
// valid and unblocked. Paths outside the AP's ULA field of view are
// dropped. Per-path phases are uniform on [0, 2*pi) from the seed.
// Throws std::runtime_error("radio silence") when no path survives.
std::vector<MultipathComponent> synth_paths(const Environment &env, const AccessPoint &ap,
                                            const Point2 &x, const RadioConfig &config,
                                            double path_loss_exponent, std::uint64_t seed,
                                            double ref_gain = 1.0);

// Render a path list into the N_t x M CSI matrix:
// column m = sum_l kappa_l * exp(-j*2*pi*(m/M)*B*tau_l) * a(theta_l - phi_q).
CsiMatrix synth_csi(const std::vector<MultipathComponent> &paths, const AccessPoint &ap,
                    const RadioConfig &config);

// Adds i.i.d. circular complex Gaussian noise (variance split across the
// real and imaginary parts) to every entry.
CsiMatrix add_noise(const CsiMatrix &H, double variance, std::uint64_t seed);

// Binary record stream: {t:u32, q:u16, N_t:u16, M:u16} then N_t*M
// little-endian complex64 pairs, antenna-major. Files ending in .jsonl use
// the JSON-lines debug variant; load_csi sniffs the format.
void save_csi(const std::vector<CsiMatrix> &records, const std::string &path);
std::vector<CsiMatrix> load_csi(const std::string &path);

} // namespace rmap

#endif
