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

#ifndef RADIOMAP_LOCALIZE_HPP
#define RADIOMAP_LOCALIZE_HPP

#include <string>
#include <vector>

#include "radiomap/inference.hpp"

namespace rmap
{

struct RadioMap
{
    PropagationParams params;
    Grid grid;
    std::vector<AccessPoint> aps;
};

enum class Region
{
    nlos = 0,       // no AP visible
    single_los = 1, // exactly one
    double_los = 2  // two or more
};

struct EvalReport
{
    double mean_error = 0.0;
    std::vector<double> per_slot_errors;
    std::vector<Region> regions;
    std::array<double, 3> region_mean{0.0, 0.0, 0.0}; // indexed by Region
    std::array<int, 3> region_count{0, 0, 0};
    double los_accuracy = -1.0; // fraction, or -1 when indicators were not supplied
};

// Grid cell maximizing sum_q max_k of the class emission log-densities.
// Ties break toward the lowest cell index.
Point2 ml_localize(const std::vector<FeatureVec> &slot_features, const RadioMap &map);

// Weighted centroid of the AP positions with weights 10^(s/20), normalized.
Point2 wcl(const std::vector<double> &rss_db, const std::vector<AccessPoint> &aps);

// Per-slot WCL over a feature set; slots without measurements fall back to
// the AP centroid.
Trajectory wcl_trajectory(const std::vector<FeatureVec> &features,
                          const std::vector<AccessPoint> &aps, double slot_duration);

// KNN fingerprint baseline over per-slot concatenated features,
// standardized per dimension from the training set.
struct KnnModel
{
    arma::mat train;            // n x d, standardized
    arma::rowvec mean;
    arma::rowvec sdev;
    std::vector<Point2> labels; // n
    int num_aps = 0;
};

KnnModel knn_train(const std::vector<FeatureVec> &features, const Trajectory &positions,
                   int num_aps);
Point2 knn_localize(const KnnModel &model, const std::vector<FeatureVec> &slot_features, int k = 8);

// Per-slot errors, region split from ground-truth visibility counts, and
// the LOS/NLOS indicator accuracy when labels are supplied.
EvalReport evaluate(const Trajectory &estimates, const Trajectory &truth, const Environment &env,
                    const std::vector<FeatureVec> &features = {},
                    const std::vector<std::uint8_t> &labels = {});

// Geometric class truth (0 = LOS, 1 = NLOS) per feature record.
std::vector<std::uint8_t> geometric_labels(const std::vector<FeatureVec> &features,
                                           const Trajectory &truth, const Environment &env);

// Radio-map artifact JSON: params, grid metadata and the AP roster.
void save_radio_map(const RadioMap &map, const std::string &path);
RadioMap load_radio_map(const std::string &path);

void save_eval_csv(const EvalReport &report, const std::string &path);
void save_eval_json(const EvalReport &report, const std::string &path);

} // namespace rmap

#endif
