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

#include "radiomap/scene.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "radiomap/io_detail.hpp"
#include "radiomap/rng.hpp"

namespace rmap
{

void AccessPoint::validate() const
{
    if (!std::isfinite(position.x) || !std::isfinite(position.y))
        throw std::invalid_argument("AP position must be finite");
    if (num_antennas < 2)
        throw std::invalid_argument("AP needs at least 2 antennas");
    if (element_spacing <= 0.0)
        throw std::invalid_argument("element spacing must be positive");
    if (orientation < 0.0 || orientation >= 2.0 * M_PI)
        throw std::invalid_argument("orientation must lie in [0, 2*pi)");
}

void Obstacle::validate() const
{
    if (a == b)
        throw std::invalid_argument("obstacle endpoints must be distinct");
    if (reflectivity < 0.0 || reflectivity > 1.0)
        throw std::invalid_argument("reflectivity must lie in [0, 1]");
}

void Environment::validate() const
{
    if (aps.empty())
        throw std::invalid_argument("environment needs at least one AP");
    if (bounds.min.x >= bounds.max.x || bounds.min.y >= bounds.max.y)
        throw std::invalid_argument("bounds are empty");
    for (const auto &ap : aps)
    {
        ap.validate();
        if (!bounds.contains(ap.position))
            throw std::invalid_argument("AP position outside bounds");
    }
    for (const auto &ob : obstacles)
        ob.validate();
}

void MobilityParams::validate() const
{
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("gamma must lie in (0, 1]");
    if (velocity_sigma < 0.0)
        throw std::invalid_argument("velocity sigma must be non-negative");
    if (slot_duration <= 0.0)
        throw std::invalid_argument("slot duration must be positive");
}

bool los_visible(const Environment &env, const Point2 &o, const Point2 &x)
{
    if (o == x)
        throw std::invalid_argument("degenerate pair");
    for (const auto &ob : env.obstacles)
        if (wall_blocks_segment(o, x, ob.a, ob.b))
            return false;
    return true;
}

double geometric_azimuth(const Point2 &x, const Point2 &o)
{
    if (o == x)
        throw std::invalid_argument("degenerate pair");
    return std::atan2(x.y - o.y, x.x - o.x); // atan2 already yields (-pi, pi]
}

namespace
{

// Fold a point back into the bounds by mirror reflection off the violated
// edges.
Point2 reflect_into_bounds(Point2 p, const Bounds &b, bool &ok)
{
    for (int pass = 0; pass < 64; ++pass)
    {
        if (b.contains(p))
        {
            ok = true;
            return p;
        }
        if (p.x < b.min.x)
            p.x = 2.0 * b.min.x - p.x;
        else if (p.x > b.max.x)
            p.x = 2.0 * b.max.x - p.x;
        if (p.y < b.min.y)
            p.y = 2.0 * b.min.y - p.y;
        else if (p.y > b.max.y)
            p.y = 2.0 * b.max.y - p.y;
    }
    ok = b.contains(p);
    return p;
}

} // namespace

Trajectory gen_trajectory(const MobilityParams &mob, int num_slots, const Environment &env,
                          std::uint64_t seed, const Point2 &start, const Point2 &start_velocity)
{
    mob.validate();
    if (num_slots < 3)
        throw std::invalid_argument("need at least 3 slots");
    if (!env.contains(start))
        throw std::invalid_argument("start outside bounds");

    const double delta = mob.slot_duration;
    const double noise_scale = std::sqrt(std::max(0.0, 1.0 - mob.gamma * mob.gamma)) * delta;

    auto rng = make_rng(mix_seed(seed, stream::trajectory));
    std::normal_distribution<double> gauss(0.0, 1.0);

    Trajectory traj;
    traj.slot_duration = delta;
    traj.points.reserve(num_slots);
    traj.points.push_back(start);

    Point2 second = start + start_velocity * delta;
    if (!env.contains(second))
    {
        bool ok = false;
        second = reflect_into_bounds(second, env.bounds, ok);
        if (!ok)
            throw std::runtime_error("trajectory stuck");
    }
    traj.points.push_back(second);

    const bool deterministic = noise_scale * mob.velocity_sigma == 0.0;
    for (int t = 2; t < num_slots; ++t)
    {
        const Point2 &prev = traj.points[t - 1];
        const Point2 &prev2 = traj.points[t - 2];
        const Point2 drift =
            (prev - prev2) * mob.gamma + mob.mean_velocity * ((1.0 - mob.gamma) * delta);

        Point2 next;
        bool accepted = false;
        const int attempts = deterministic ? 1 : 100;
        for (int k = 0; k < attempts && !accepted; ++k)
        {
            const Point2 eps{gauss(rng) * mob.velocity_sigma, gauss(rng) * mob.velocity_sigma};
            next = prev + drift + eps * noise_scale;
            accepted = env.contains(next);
        }
        if (!accepted)
        {
            bool ok = false;
            next = reflect_into_bounds(next, env.bounds, ok);
            if (!ok)
                throw std::runtime_error("trajectory stuck");
        }
        traj.points.push_back(next);
    }
    return traj;
}

// ---------------------------------------------------------------- file I/O

using nlohmann::json;

Environment load_scene(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open scene file: " + path);
    json j;
    try
    {
        in >> j;
    }
    catch (const json::exception &e)
    {
        throw io_error("malformed scene file " + path + ": " + e.what());
    }

    Environment env;
    try
    {
        env.bounds.min = {j.at("bounds").at("min").at(0), j.at("bounds").at("min").at(1)};
        env.bounds.max = {j.at("bounds").at("max").at(0), j.at("bounds").at("max").at(1)};
        for (const auto &ja : j.at("aps"))
        {
            AccessPoint ap;
            ap.position = {ja.at("position").at(0), ja.at("position").at(1)};
            ap.orientation = wrap_2pi(ja.at("orientation_deg").get<double>() * M_PI / 180.0);
            ap.num_antennas = ja.at("num_antennas").get<int>();
            ap.element_spacing = ja.at("element_spacing_m").get<double>();
            env.aps.push_back(ap);
        }
        for (const auto &jo : j.value("obstacles", json::array()))
        {
            Obstacle ob;
            ob.a = {jo.at("a").at(0), jo.at("a").at(1)};
            ob.b = {jo.at("b").at(0), jo.at("b").at(1)};
            ob.reflectivity = jo.at("reflectivity").get<double>();
            env.obstacles.push_back(ob);
        }
    }
    catch (const json::exception &e)
    {
        throw io_error("scene file " + path + " missing fields: " + e.what());
    }
    env.validate();
    return env;
}

void save_scene(const Environment &env, const std::string &path)
{
    json j;
    j["bounds"]["min"] = {env.bounds.min.x, env.bounds.min.y};
    j["bounds"]["max"] = {env.bounds.max.x, env.bounds.max.y};
    j["aps"] = json::array();
    for (const auto &ap : env.aps)
        j["aps"].push_back({{"position", {ap.position.x, ap.position.y}},
                            {"orientation_deg", ap.orientation * 180.0 / M_PI},
                            {"num_antennas", ap.num_antennas},
                            {"element_spacing_m", ap.element_spacing}});
    j["obstacles"] = json::array();
    for (const auto &ob : env.obstacles)
        j["obstacles"].push_back({{"a", {ob.a.x, ob.a.y}},
                                  {"b", {ob.b.x, ob.b.y}},
                                  {"reflectivity", ob.reflectivity}});
    std::ofstream out(path);
    if (!out)
        throw io_error("cannot write scene file: " + path);
    out << j.dump(2) << "\n";
}

Trajectory load_trajectory(const std::string &path, double slot_duration)
{
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open trajectory file: " + path);
    Trajectory traj;
    traj.slot_duration = slot_duration;
    std::string line;
    std::size_t expected = 0;
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
            throw io_error("malformed trajectory record in " + path + ": " + e.what());
        }
        if (j.at("t").get<std::size_t>() != expected)
            throw io_error("trajectory records out of order in " + path);
        traj.points.push_back({j.at("x").get<double>(), j.at("y").get<double>()});
        ++expected;
    }
    return traj;
}

void save_trajectory(const Trajectory &traj, const std::string &path)
{
    std::ofstream out(path);
    if (!out)
        throw io_error("cannot write trajectory file: " + path);
    for (std::size_t t = 0; t < traj.points.size(); ++t)
    {
        json j{{"t", t}, {"x", traj.points[t].x}, {"y", traj.points[t].y}};
        out << j.dump() << "\n";
    }
}

} // namespace rmap
