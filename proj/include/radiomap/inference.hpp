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

#ifndef RADIOMAP_INFERENCE_HPP
#define RADIOMAP_INFERENCE_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "radiomap/features.hpp"
#include "radiomap/scene.hpp"

namespace rmap
{

constexpr int kClassLos = 0;
constexpr int kClassNlos = 1;
constexpr double kAngleVarFloor = 1e-6; // rad^2
constexpr double kVarianceFloor = 1e-6; // generic positive-variance floor

// Emission-model parameters. Per-AP path loss and RSS variance are indexed
// [ap][class] with class 0 = LOS, 1 = NLOS; the RSS mean is
// beta - alpha * log10(d). labels[i] holds the class indicator of the i-th
// feature record (the one-hot u with u0 + u1 = 1 collapses to one label).
struct PropagationParams
{
    std::vector<std::array<double, 2>> beta;    // dB
    std::vector<std::array<double, 2>> alpha;   // dB per decade
    std::vector<std::array<double, 2>> rss_var; // dB^2
    std::array<double, 2> angle_var{1.0, 1.0};  // rad^2
    std::array<double, 2> delay_intercept{0.0, 0.0}; // b_k, dB
    double delay_slope = 0.0;                   // a
    double delay_var = 1.0;                     // dB^2
    std::vector<std::uint8_t> labels;
};

// Candidate-location lattice with nodes origin + (col, row) * resolution.
struct Grid
{
    Point2 origin;
    double resolution = 0.1;
    int rows = 0;
    int cols = 0;

    static Grid cover(const Bounds &bounds, double resolution);
    int size() const { return rows * cols; }
    Point2 center(int idx) const
    {
        return {origin.x + (idx % cols) * resolution, origin.y + (idx / cols) * resolution};
    }
    // Index of the nearest grid node.
    int snap(const Point2 &p) const;
};

struct FitReport
{
    std::vector<double> objective_trace;
    int iterations = 0;
    bool converged = false;
    PropagationParams params;
    MobilityParams mobility;
    Trajectory trajectory;
};

struct DelayBlockFit
{
    double b0 = 0.0;
    double b1 = 0.0;
    double slope = 0.0;
    double variance = 0.0;
    std::vector<std::uint8_t> labels;
    std::vector<double> objective_trace; // negative SSR, non-decreasing
};

struct AlternateConfig
{
    double slot_duration = 0.2; // seconds
    double v_max = 5.0;         // m/s, Viterbi transition radius
    int max_outer_iters = 50;
    double objective_tol = 1e-4;
};

// Log-density of one feature triple under the class-k emission model.
double emission_logpdf(const FeatureVec &y, const Point2 &x, const AccessPoint &ap, int k,
                       const PropagationParams &params);

// Log-density of the Gauss-Markov transition x_t | x_{t-1}, x_{t-2}.
double mobility_logpdf(const Point2 &x_t, const Point2 &x_prev, const Point2 &x_prev2,
                       const MobilityParams &mob);

// MLE of (gamma, mean velocity, sigma_v) from a trajectory: gamma by a
// bracketed golden-section search of the profiled likelihood, the rest in
// closed form.
MobilityParams fit_mobility(const Trajectory &X);

struct DelayParams
{
    double b0 = 0.0;
    double b1 = 0.0;
    double slope = 0.0;
    double variance = 0.0;
};

// Joint weighted least squares of nu on (class intercepts, shared slope on
// s) via the 3x3 normal equations; variance is the mean squared residual
// over all measurements.
DelayParams fit_delay_params(const std::vector<FeatureVec> &features,
                             const std::vector<std::uint8_t> &labels);

// Nearest-line classification of each measurement; ties go to class 0.
std::vector<std::uint8_t> classify_los(const std::vector<FeatureVec> &features, double b0, double b1,
                                       double slope, double delay_var);

// Alternates fit_delay_params and classify_los from a median split on nu
// until the labels stop changing.
DelayBlockFit fit_delay_block(const std::vector<FeatureVec> &features);

struct PowerFit
{
    std::vector<std::array<double, 2>> beta;
    std::vector<std::array<double, 2>> alpha;
    std::vector<std::array<double, 2>> rss_var;
};

// Per-(AP, class) regression of s on log10 distance. Cells with fewer than
// 3 measurements inherit the other class's line with variance inflated x4.
PowerFit fit_power_params(const std::vector<FeatureVec> &features, const Trajectory &X,
                          const std::vector<std::uint8_t> &labels,
                          const std::vector<AccessPoint> &aps);

// Per-class mean squared wrapped angle residual, floored at kAngleVarFloor.
std::array<double, 2> fit_angle_vars(const std::vector<FeatureVec> &features, const Trajectory &X,
                                     const std::vector<std::uint8_t> &labels,
                                     const std::vector<AccessPoint> &aps);

// Exact second-order Viterbi decode on the grid: maximizes the emission sum
// plus the mobility sum over trajectories whose steps are at most
// v_max * slot_duration long. The first two slots are scored by emissions
// only; ties break toward the lowest cell index.
Trajectory viterbi2(const std::vector<FeatureVec> &features, const PropagationParams &params,
                    const MobilityParams &mob, const Grid &grid, double v_max,
                    const std::vector<AccessPoint> &aps);

// Full joint log-likelihood of (trajectory, params, mobility) given the
// features.
double objective(const Trajectory &X, const PropagationParams &params, const MobilityParams &mob,
                 const std::vector<FeatureVec> &features, const std::vector<AccessPoint> &aps);

// Alternating optimization: delay block, Viterbi decode, power fit, angle
// fit, mobility fit, until the objective improvement drops below the
// tolerance. The provisional trajectory for the initial propagation fits
// comes from per-slot weighted centroid localization.
FitReport alternate(const std::vector<FeatureVec> &features, const Environment &env,
                    const Grid &grid, const AlternateConfig &config);

// Genie-aided variant: propagation parameters are fit once against the true
// trajectory and geometric visibility labels, then only the trajectory and
// mobility parameters alternate.
FitReport alternate_genie(const std::vector<FeatureVec> &features, const Environment &env,
                          const Grid &grid, const AlternateConfig &config, const Trajectory &truth);

// Fit report JSON: objective_trace[], params{...}, trajectory[],
// indicators[][], converged.
void save_fit_report(const FitReport &report, const std::vector<FeatureVec> &features,
                     const std::string &path);

} // namespace rmap

#endif
