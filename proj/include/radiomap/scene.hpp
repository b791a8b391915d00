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

#ifndef RADIOMAP_SCENE_HPP
#define RADIOMAP_SCENE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "radiomap/geometry.hpp"

namespace rmap
{

struct AccessPoint
{
    Point2 position;
    double orientation = 0.0;    // array normal direction, radians, wrapped to [0, 2*pi)
    int num_antennas = 8;        // >= 2
    double element_spacing = 0.15; // meters, > 0

    void validate() const;
};

// A wall segment with a power reflection coefficient in [0, 1].
struct Obstacle
{
    Point2 a;
    Point2 b;
    double reflectivity = 0.7;

    void validate() const;
};

struct Environment
{
    std::vector<AccessPoint> aps;
    std::vector<Obstacle> obstacles;
    Bounds bounds;

    void validate() const;
    bool contains(const Point2 &p) const { return bounds.contains(p); }
};

struct Trajectory
{
    std::vector<Point2> points;
    double slot_duration = 0.2; // seconds

    std::size_t size() const { return points.size(); }
};

// Gauss-Markov mobility parameters: velocity AR(1) with memory gamma,
// stationary mean mean_velocity and stationary std velocity_sigma per axis.
struct MobilityParams
{
    double gamma = 0.9;            // (0, 1]
    Point2 mean_velocity{0.0, 0.0}; // m/s
    double velocity_sigma = 0.3;   // m/s, >= 0
    double slot_duration = 0.2;    // seconds, > 0

    void validate() const;
};

// True iff no obstacle blocks the open segment between o and x.
// Throws std::invalid_argument("degenerate pair") when o == x.
bool los_visible(const Environment &env, const Point2 &o, const Point2 &x);

// Departure azimuth from o toward x, in (-pi, pi].
double geometric_azimuth(const Point2 &x, const Point2 &o);

// Generate a trajectory following the Gauss-Markov recursion. Steps that
// would leave the bounds are re-drawn up to 100 times, then reflected off
// the boundary. Deterministic given the seed.
Trajectory gen_trajectory(const MobilityParams &mob, int num_slots, const Environment &env,
                          std::uint64_t seed, const Point2 &start, const Point2 &start_velocity);

// Scene / trajectory file formats.
Environment load_scene(const std::string &path);
void save_scene(const Environment &env, const std::string &path);
Trajectory load_trajectory(const std::string &path, double slot_duration);
void save_trajectory(const Trajectory &traj, const std::string &path);

} // namespace rmap

#endif
