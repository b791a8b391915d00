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

#include "radiomap/geometry.hpp"

#include <algorithm>

namespace rmap
{

bool wall_blocks_segment(const Point2 &a, const Point2 &b, const Point2 &w1, const Point2 &w2)
{
    const Point2 r = b - a;
    const Point2 s = w2 - w1;
    const Point2 qp = w1 - a;
    const double denom = cross(r, s);

    if (denom != 0.0)
    {
        const double t = cross(qp, s) / denom; // along the sight segment, open
        const double u = cross(qp, r) / denom; // along the wall, closed
        return t > 0.0 && t < 1.0 && u >= 0.0 && u <= 1.0;
    }

    // Parallel. Distinct lines never intersect; collinear overlap blocks.
    if (cross(qp, r) != 0.0)
        return false;

    const double rr = dot(r, r);
    if (rr == 0.0)
        return false;
    double t1 = dot(qp, r) / rr;
    double t2 = dot(w2 - a, r) / rr;
    if (t1 > t2)
        std::swap(t1, t2);
    return t2 > 0.0 && t1 < 1.0;
}

Point2 reflect_across_line(const Point2 &p, const Point2 &w1, const Point2 &w2)
{
    const Point2 d = w2 - w1;
    const double len_sq = d.norm_sq();
    const Point2 v = p - w1;
    const double along = dot(v, d) / len_sq;
    const Point2 foot = w1 + d * along;
    return foot * 2.0 - p;
}

} // namespace rmap
