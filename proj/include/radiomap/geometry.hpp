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

#ifndef RADIOMAP_GEOMETRY_HPP
#define RADIOMAP_GEOMETRY_HPP

#include <cmath>

namespace rmap
{

struct Point2
{
    double x = 0.0;
    double y = 0.0;

    Point2 operator+(const Point2 &o) const { return {x + o.x, y + o.y}; }
    Point2 operator-(const Point2 &o) const { return {x - o.x, y - o.y}; }
    Point2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Point2 &o) const { return x == o.x && y == o.y; }

    double norm() const { return std::hypot(x, y); }
    double norm_sq() const { return x * x + y * y; }
};

inline double dot(const Point2 &a, const Point2 &b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Point2 &a, const Point2 &b) { return a.x * b.y - a.y * b.x; }
inline double distance(const Point2 &a, const Point2 &b) { return (a - b).norm(); }

// Wrap an angle to (-pi, pi].
inline double wrap_pi(double a)
{
    double w = std::remainder(a, 2.0 * M_PI);
    if (w <= -M_PI)
        w += 2.0 * M_PI;
    return w;
}

// Wrap an angle to [0, 2*pi).
inline double wrap_2pi(double a)
{
    double w = std::fmod(a, 2.0 * M_PI);
    if (w < 0.0)
        w += 2.0 * M_PI;
    return w;
}

// True if the wall segment [w1,w2] (endpoints included) intersects the open
// sight segment (a,b) (endpoints excluded). Collinear overlap counts as an
// intersection.
bool wall_blocks_segment(const Point2 &a, const Point2 &b, const Point2 &w1, const Point2 &w2);

// Mirror a point across the infinite line through w1 and w2.
Point2 reflect_across_line(const Point2 &p, const Point2 &w1, const Point2 &w2);

struct Bounds
{
    Point2 min;
    Point2 max;

    bool contains(const Point2 &p) const
    {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
    }
    double width() const { return max.x - min.x; }
    double height() const { return max.y - min.y; }
};

} // namespace rmap

#endif
