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

#ifndef RADIOMAP_FEATURES_HPP
#define RADIOMAP_FEATURES_HPP

#include <string>
#include <vector>

#include "radiomap/channel.hpp"

namespace rmap
{

constexpr double kDefaultMusicGridStep = 0.5 * M_PI / 180.0; // radians
constexpr double kDelayVarianceFloor = 1e-12;                // linear, before the log

// Per-(slot, AP) feature triple: RSS, MUSIC dominant-path AoD (global
// frame), normalized-magnitude variance.
struct FeatureVec
{
    double rss_db = 0.0;
    double aod = 0.0;          // radians in (-pi, pi]
    double delay_var_db = 0.0; // floored at 10*log10(kDelayVarianceFloor)
    int slot_index = 0;
    int ap_index = 0;
};

// 10*log10 of the squared Frobenius norm.
double rss(const CsiMatrix &H);

// R = H * H^H / M.
arma::cx_mat spatial_covariance(const CsiMatrix &H);

// MUSIC pseudospectrum 1/(a^H U U^H a) on the local grid of multiples of
// grid_step inside (-pi/2, pi/2); the noise subspace spans the N_t - 1
// weakest eigenvectors of the spatial covariance.
struct MusicSpectrum
{
    std::vector<double> angles; // local frame
    std::vector<double> values;
};
MusicSpectrum music_spectrum(const CsiMatrix &H, const AccessPoint &ap, const RadioConfig &config,
                             double grid_step = kDefaultMusicGridStep);

// Dominant-path AoD in the global frame: spectrum argmax plus the AP
// orientation, wrapped to (-pi, pi].
double music_aod(const CsiMatrix &H, const AccessPoint &ap, const RadioConfig &config,
                 double grid_step = kDefaultMusicGridStep);

// 10*log10 of the population variance of the Frobenius-normalized entry
// magnitudes, floored before the log.
double delay_variance(const CsiMatrix &H);

FeatureVec extract(const CsiMatrix &H, const AccessPoint &ap, const RadioConfig &config,
                   double grid_step = kDefaultMusicGridStep);

// JSON-lines feature records {t, q, s_db, aod_rad, nu_db}.
void save_features(const std::vector<FeatureVec> &features, const std::string &path);
std::vector<FeatureVec> load_features(const std::string &path);

} // namespace rmap

#endif
