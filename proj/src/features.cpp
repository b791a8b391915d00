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

#include "radiomap/features.hpp"

#include <fstream>
#include <iostream>
#include <stdexcept>

#include <json.hpp>

#include "radiomap/io_detail.hpp"

namespace rmap
{

double rss(const CsiMatrix &H)
{
    const double energy = arma::accu(arma::square(arma::abs(H.entries)));
    if (energy <= 0.0)
        throw std::runtime_error("zero channel");
    return 10.0 * std::log10(energy);
}

arma::cx_mat spatial_covariance(const CsiMatrix &H)
{
    return H.entries * H.entries.t() / double(H.entries.n_cols);
}

MusicSpectrum music_spectrum(const CsiMatrix &H, const AccessPoint &ap, const RadioConfig &config,
                             double grid_step)
{
    if (H.entries.n_rows < 2)
        throw std::invalid_argument("need at least 2 antennas");
    if (grid_step <= 0.0)
        throw std::invalid_argument("grid step must be positive");

    const arma::cx_mat R = spatial_covariance(H);
    arma::vec eigval;
    arma::cx_mat eigvec;
    if (!arma::eig_sym(eigval, eigvec, R)) // ascending eigenvalues
        throw std::runtime_error("eigendecomposition failed");

    const arma::uword nt = R.n_rows;
    if (eigval(nt - 1) > 0.0 && eigval(nt - 1) < eigval(nt - 2) * (1.0 + 1e-9))
        std::cerr << "warning: ambiguous dominant path (slot " << H.slot_index << ", ap "
                  << H.ap_index << ")\n";

    // Noise subspace: everything but the strongest eigenvector.
    const arma::cx_mat U = eigvec.cols(0, nt - 2);
    const arma::cx_mat P = U * U.t();

    MusicSpectrum spec;
    const double lambda = config.wavelength();
    const int k_max = int(std::floor((M_PI / 2.0 - 1e-12) / grid_step));
    spec.angles.reserve(2 * k_max + 1);
    spec.values.reserve(2 * k_max + 1);
    for (int k = -k_max; k <= k_max; ++k)
    {
        const double phi = k * grid_step;
        const arma::cx_vec a = steering_vector(phi, int(nt), ap.element_spacing, lambda);
        const double denom = std::real(arma::cdot(a, P * a));
        spec.angles.push_back(phi);
        spec.values.push_back(1.0 / std::max(denom, 1e-300));
    }
    return spec;
}

double music_aod(const CsiMatrix &H, const AccessPoint &ap, const RadioConfig &config,
                 double grid_step)
{
    const MusicSpectrum spec = music_spectrum(H, ap, config, grid_step);
    std::size_t best = 0;
    for (std::size_t i = 1; i < spec.values.size(); ++i)
        if (spec.values[i] > spec.values[best])
            best = i;
    return wrap_pi(spec.angles[best] + ap.orientation);
}

double delay_variance(const CsiMatrix &H)
{
    const double fro = arma::norm(H.entries, "fro");
    if (fro <= 0.0)
        throw std::runtime_error("zero channel");
    const arma::mat mags = arma::abs(H.entries) / fro;
    const double n = double(mags.n_elem);
    const double mean = arma::accu(mags) / n;
    const double var = arma::accu(arma::square(mags)) / n - mean * mean;
    return 10.0 * std::log10(std::max(var, kDelayVarianceFloor));
}

FeatureVec extract(const CsiMatrix &H, const AccessPoint &ap, const RadioConfig &config,
                   double grid_step)
{
    FeatureVec y;
    y.rss_db = rss(H);
    y.aod = music_aod(H, ap, config, grid_step);
    y.delay_var_db = delay_variance(H);
    y.slot_index = H.slot_index;
    y.ap_index = H.ap_index;
    return y;
}

// ---------------------------------------------------------------- file I/O

using nlohmann::json;

void save_features(const std::vector<FeatureVec> &features, const std::string &path)
{
    std::ofstream out(path);
    if (!out)
        throw io_error("cannot write feature file: " + path);
    for (const auto &f : features)
    {
        json j{{"t", f.slot_index}, {"q", f.ap_index}, {"s_db", f.rss_db}, {"aod_rad", f.aod},
               {"nu_db", f.delay_var_db}};
        out << j.dump() << "\n";
    }
}

std::vector<FeatureVec> load_features(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open feature file: " + path);
    std::vector<FeatureVec> features;
    std::string line;
    while (std::getline(in, line))
    {
        if (line.empty())
            continue;
        json j;
        try
        {
            j = json::parse(line);
        }
        catch (const json::exception &e)
        {
            throw io_error("malformed feature record in " + path + ": " + e.what());
        }
        FeatureVec f;
        f.slot_index = j.at("t").get<int>();
        f.ap_index = j.at("q").get<int>();
        f.rss_db = j.at("s_db").get<double>();
        f.aod = j.at("aod_rad").get<double>();
        f.delay_var_db = j.at("nu_db").get<double>();
        features.push_back(f);
    }
    return features;
}

} // namespace rmap
