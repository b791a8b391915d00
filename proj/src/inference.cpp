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

#include "radiomap/inference.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "radiomap/io_detail.hpp"
#include "radiomap/localize.hpp"

namespace rmap
{

namespace
{

constexpr double kNegInf = -1.0e300;
constexpr double kLog2Pi = 1.8378770664093454836; // log(2*pi)

// The three-term diagonal Gaussian log-density shared by emission_logpdf,
// the Viterbi emission tables and the ML localizer, so all paths produce
// bit-identical values.
inline double emission_core(const FeatureVec &y, double log10_d, double azimuth, int k,
                            const PropagationParams &p)
{
    const int q = y.ap_index;
    const double vs = p.rss_var[q][k];
    const double vth = p.angle_var[k];
    const double vnu = p.delay_var;
    const double ds = y.rss_db - (p.beta[q][k] - p.alpha[q][k] * log10_d);
    const double dth = wrap_pi(y.aod - azimuth);
    const double dnu = y.delay_var_db - (p.delay_intercept[k] + p.delay_slope * y.rss_db);
    return -0.5 * (std::log(vs * vth * vnu) + 3.0 * kLog2Pi + ds * ds / vs + dth * dth / vth +
                   dnu * dnu / vnu);
}

void check_params(const PropagationParams &p, int num_aps)
{
    if (int(p.beta.size()) < num_aps || int(p.alpha.size()) < num_aps ||
        int(p.rss_var.size()) < num_aps)
        throw std::invalid_argument("propagation params missing APs");
    for (int q = 0; q < num_aps; ++q)
        for (int k = 0; k < 2; ++k)
            if (!(p.rss_var[q][k] > 0.0))
                throw std::invalid_argument("non-positive RSS variance");
    for (int k = 0; k < 2; ++k)
        if (!(p.angle_var[k] > 0.0))
            throw std::invalid_argument("non-positive angle variance");
    if (!(p.delay_var > 0.0))
        throw std::invalid_argument("non-positive delay variance");
}

std::vector<std::vector<int>> group_by_slot(const std::vector<FeatureVec> &features, int num_slots)
{
    std::vector<std::vector<int>> slots(num_slots);
    for (std::size_t i = 0; i < features.size(); ++i)
        slots[features[i].slot_index].push_back(int(i));
    return slots;
}

int count_slots(const std::vector<FeatureVec> &features)
{
    int t_max = -1;
    for (const auto &f : features)
    {
        if (f.slot_index < 0)
            throw std::invalid_argument("negative slot index");
        t_max = std::max(t_max, f.slot_index);
    }
    return t_max + 1;
}

// Golden-section maximizer of a unimodal function on [lo, hi].
template <typename F> double golden_section_max(F f, double lo, double hi, double tol)
{
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol)
    {
        if (fc > fd)
        {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        }
        else
        {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

void parallel_over_rows(int rows, const std::function<void(int, int)> &body)
{
    unsigned n = std::thread::hardware_concurrency();
    if (n < 2 || rows < 8)
    {
        body(0, rows);
        return;
    }
    n = std::min<unsigned>(n, unsigned(rows));
    std::vector<std::thread> pool;
    pool.reserve(n);
    const int chunk = (rows + int(n) - 1) / int(n);
    for (unsigned i = 0; i < n; ++i)
    {
        const int r0 = int(i) * chunk;
        const int r1 = std::min(rows, r0 + chunk);
        if (r0 >= r1)
            break;
        pool.emplace_back(body, r0, r1);
    }
    for (auto &th : pool)
        th.join();
}

} // namespace

// ------------------------------------------------------------------- Grid

Grid Grid::cover(const Bounds &bounds, double resolution)
{
    if (resolution <= 0.0)
        throw std::invalid_argument("grid resolution must be positive");
    Grid g;
    g.origin = bounds.min;
    g.resolution = resolution;
    g.cols = int(std::floor(bounds.width() / resolution + 1e-9)) + 1;
    g.rows = int(std::floor(bounds.height() / resolution + 1e-9)) + 1;
    return g;
}

int Grid::snap(const Point2 &p) const
{
    int col = int(std::lround((p.x - origin.x) / resolution));
    int row = int(std::lround((p.y - origin.y) / resolution));
    col = std::clamp(col, 0, cols - 1);
    row = std::clamp(row, 0, rows - 1);
    return row * cols + col;
}

// -------------------------------------------------------------- densities

double emission_logpdf(const FeatureVec &y, const Point2 &x, const AccessPoint &ap, int k,
                       const PropagationParams &params)
{
    if (k != 0 && k != 1)
        throw std::invalid_argument("class must be 0 or 1");
    if (x == ap.position)
        throw std::invalid_argument("location coincides with the AP");
    check_params(params, y.ap_index + 1);

    const double d = distance(x, ap.position);
    return emission_core(y, std::log10(d), geometric_azimuth(x, ap.position), k, params);
}

double mobility_logpdf(const Point2 &x_t, const Point2 &x_prev, const Point2 &x_prev2,
                       const MobilityParams &mob)
{
    const double g = mob.gamma;
    if (!(g > 0.0 && g < 1.0))
        throw std::invalid_argument("degenerate mobility");
    if (!(mob.velocity_sigma > 0.0))
        throw std::invalid_argument("velocity sigma must be positive");

    const double delta = mob.slot_duration;
    const Point2 r = x_t - x_prev * (1.0 + g) + x_prev2 * g - mob.mean_velocity * ((1.0 - g) * delta);
    const double var = (1.0 - g * g) * delta * delta * mob.velocity_sigma * mob.velocity_sigma;
    return -std::log(2.0 * M_PI * var) - r.norm_sq() / (2.0 * var);
}

// -------------------------------------------------------------------- P1

MobilityParams fit_mobility(const Trajectory &X)
{
    const std::size_t T = X.size();
    if (T < 4)
        throw std::invalid_argument("need at least 4 slots");
    const double delta = X.slot_duration;

    std::vector<Point2> w(T - 1);
    bool moved = false;
    for (std::size_t i = 0; i + 1 < T; ++i)
    {
        w[i] = (X.points[i + 1] - X.points[i]) * (1.0 / delta);
        moved = moved || w[i].norm_sq() > 0.0;
    }
    if (!moved)
        throw std::runtime_error("static trajectory");

    // Residual terms e_i = w_i - gamma*w_{i-1} - (1-gamma)*vbar for
    // i = 1..T-2. With vbar profiled out, the SSR is an exact quadratic in
    // gamma over the centered velocity pairs.
    const std::size_t n = T - 2;
    Point2 mean_cur{0, 0}, mean_prev{0, 0};
    for (std::size_t i = 1; i <= n; ++i)
    {
        mean_cur = mean_cur + w[i];
        mean_prev = mean_prev + w[i - 1];
    }
    mean_cur = mean_cur * (1.0 / double(n));
    mean_prev = mean_prev * (1.0 / double(n));

    double sa = 0.0, sb = 0.0, sc = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
    {
        const Point2 p = w[i] - mean_cur;
        const Point2 r = w[i - 1] - mean_prev;
        sa += p.norm_sq();
        sb += dot(p, r);
        sc += r.norm_sq();
    }
    const auto ssr = [&](double g) { return sa - 2.0 * g * sb + g * g * sc; };

    const double lo = 1e-3, hi = 1.0 - 1e-6;
    double gamma = golden_section_max([&](double g) { return -ssr(g); }, lo, hi, 1e-6);
    if (sc > 0.0)
    {
        const double exact = std::clamp(sb / sc, lo, hi);
        if (ssr(exact) <= ssr(gamma))
            gamma = exact;
    }

    MobilityParams mob;
    mob.gamma = gamma;
    mob.mean_velocity = (mean_cur - mean_prev * gamma) * (1.0 / (1.0 - gamma));
    mob.velocity_sigma =
        std::max(std::sqrt(ssr(gamma) / (2.0 * double(n) * (1.0 - gamma * gamma))), 1e-6);
    mob.slot_duration = delta;
    return mob;
}

// ------------------------------------------------------------------ P2.1

DelayParams fit_delay_params(const std::vector<FeatureVec> &features,
                             const std::vector<std::uint8_t> &labels)
{
    if (features.size() != labels.size())
        throw std::invalid_argument("labels/features size mismatch");
    std::size_t n_class[2] = {0, 0};
    for (auto l : labels)
        ++n_class[l];
    if (n_class[0] < 3 || n_class[1] < 3)
        throw std::invalid_argument("each class needs at least 3 measurements");

    // Normal equations for columns [1{k=0}, 1{k=1}, s].
    arma::mat A(3, 3, arma::fill::zeros);
    arma::vec rhs(3, arma::fill::zeros);
    for (std::size_t i = 0; i < features.size(); ++i)
    {
        const double s = features[i].rss_db;
        const double nu = features[i].delay_var_db;
        const int k = labels[i];
        A(k, k) += 1.0;
        A(k, 2) += s;
        A(2, k) += s;
        A(2, 2) += s * s;
        rhs(k) += nu;
        rhs(2) += nu * s;
    }
    if (arma::rcond(A) < 1e-12)
        throw std::runtime_error("degenerate regression");
    arma::vec sol;
    if (!arma::solve(sol, A, rhs, arma::solve_opts::no_approx))
        throw std::runtime_error("degenerate regression");

    DelayParams out;
    out.b0 = sol(0);
    out.b1 = sol(1);
    out.slope = sol(2);
    double ssr = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i)
    {
        const double b = labels[i] == 0 ? out.b0 : out.b1;
        const double r = features[i].delay_var_db - b - out.slope * features[i].rss_db;
        ssr += r * r;
    }
    out.variance = ssr / double(features.size());
    return out;
}

std::vector<std::uint8_t> classify_los(const std::vector<FeatureVec> &features, double b0, double b1,
                                       double slope, double delay_var)
{
    (void)delay_var; // scale-free argmin; kept for the emission-model contract
    std::vector<std::uint8_t> labels(features.size());
    for (std::size_t i = 0; i < features.size(); ++i)
    {
        const double base = features[i].delay_var_db - slope * features[i].rss_db;
        const double r0 = base - b0;
        const double r1 = base - b1;
        labels[i] = (r1 * r1 < r0 * r0) ? 1 : 0;
    }
    return labels;
}

DelayBlockFit fit_delay_block(const std::vector<FeatureVec> &features)
{
    const std::size_t n = features.size();
    if (n < 6)
        throw std::invalid_argument("need at least 6 measurements");

    // Median split on nu: strictly above the median starts as NLOS.
    std::vector<double> nus(n);
    for (std::size_t i = 0; i < n; ++i)
        nus[i] = features[i].delay_var_db;
    std::vector<double> sorted = nus;
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    const double median = sorted[n / 2];

    DelayBlockFit fit;
    fit.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        fit.labels[i] = nus[i] > median ? 1 : 0;

    const std::size_t reseed_count = std::max<std::size_t>(1, std::size_t(std::ceil(0.05 * n)));
    int reseeds = 0;
    bool have_params = false;
    DelayParams params;

    for (int iter = 0; iter < 50; ++iter)
    {
        // Re-seed a depleted class from the most extreme residuals.
        for (int k = 0; k < 2; ++k)
        {
            std::size_t count = 0;
            for (auto l : fit.labels)
                count += (l == k);
            if (count >= 3)
                continue;
            if (++reseeds > 3)
                throw std::runtime_error("delay block failed to separate classes");
            std::vector<std::pair<double, std::size_t>> extremity(n);
            for (std::size_t i = 0; i < n; ++i)
            {
                const double r = have_params
                                     ? nus[i] - (k == 0 ? params.b1 : params.b0) -
                                           params.slope * features[i].rss_db
                                     : nus[i] - median;
                extremity[i] = {std::abs(r), i};
            }
            std::sort(extremity.rbegin(), extremity.rend());
            for (std::size_t j = 0; j < reseed_count && j < n; ++j)
                fit.labels[extremity[j].second] = std::uint8_t(k);
        }

        params = fit_delay_params(features, fit.labels);
        have_params = true;
        fit.objective_trace.push_back(-params.variance * double(n)); // -SSR

        auto next = classify_los(features, params.b0, params.b1, params.slope, params.variance);
        if (next == fit.labels)
            break;
        fit.labels = std::move(next);
    }

    fit.b0 = params.b0;
    fit.b1 = params.b1;
    fit.slope = params.slope;
    fit.variance = params.variance;
    return fit;
}

// ------------------------------------------------------------------ P2.2

PowerFit fit_power_params(const std::vector<FeatureVec> &features, const Trajectory &X,
                          const std::vector<std::uint8_t> &labels,
                          const std::vector<AccessPoint> &aps)
{
    if (features.size() != labels.size())
        throw std::invalid_argument("labels/features size mismatch");
    const int num_aps = int(aps.size());

    struct Cell
    {
        std::vector<double> z; // log10 distance
        std::vector<double> s;
    };
    std::vector<std::array<Cell, 2>> cells(num_aps);
    for (std::size_t i = 0; i < features.size(); ++i)
    {
        const auto &f = features[i];
        if (f.ap_index < 0 || f.ap_index >= num_aps)
            throw std::invalid_argument("AP index out of range");
        if (f.slot_index >= int(X.size()))
            throw std::invalid_argument("slot index beyond trajectory");
        const double d = distance(X.points[f.slot_index], aps[f.ap_index].position);
        if (d <= 0.0)
            throw std::runtime_error("zero AP distance");
        cells[f.ap_index][labels[i]].z.push_back(std::log10(d));
        cells[f.ap_index][labels[i]].s.push_back(f.rss_db);
    }

    PowerFit out;
    out.beta.resize(num_aps);
    out.alpha.resize(num_aps);
    out.rss_var.resize(num_aps);
    for (int q = 0; q < num_aps; ++q)
    {
        std::array<bool, 2> fitted{false, false};
        for (int k = 0; k < 2; ++k)
        {
            const auto &cell = cells[q][k];
            const std::size_t m = cell.z.size();
            if (m < 3)
                continue;
            const double mz = std::accumulate(cell.z.begin(), cell.z.end(), 0.0) / double(m);
            const double ms = std::accumulate(cell.s.begin(), cell.s.end(), 0.0) / double(m);
            double szz = 0.0, ssz = 0.0;
            for (std::size_t i = 0; i < m; ++i)
            {
                szz += (cell.z[i] - mz) * (cell.z[i] - mz);
                ssz += (cell.s[i] - ms) * (cell.z[i] - mz);
            }
            if (szz <= 1e-12)
                throw std::runtime_error("collinear design");
            const double slope = ssz / szz;
            const double intercept = ms - slope * mz;
            double ssr = 0.0;
            for (std::size_t i = 0; i < m; ++i)
            {
                const double r = cell.s[i] - intercept - slope * cell.z[i];
                ssr += r * r;
            }
            out.beta[q][k] = intercept;
            out.alpha[q][k] = -slope; // mean is beta - alpha*log10(d)
            out.rss_var[q][k] = ssr / double(m);
            fitted[k] = true;
        }
        if (!fitted[0] && !fitted[1])
            throw std::runtime_error("too few RSS measurements for AP " + std::to_string(q));
        for (int k = 0; k < 2; ++k)
            if (!fitted[k])
            {
                out.beta[q][k] = out.beta[q][1 - k];
                out.alpha[q][k] = out.alpha[q][1 - k];
                out.rss_var[q][k] = out.rss_var[q][1 - k] * 4.0;
            }
    }
    return out;
}

// ------------------------------------------------------------------ P2.3

std::array<double, 2> fit_angle_vars(const std::vector<FeatureVec> &features, const Trajectory &X,
                                     const std::vector<std::uint8_t> &labels,
                                     const std::vector<AccessPoint> &aps)
{
    if (features.size() != labels.size())
        throw std::invalid_argument("labels/features size mismatch");
    std::array<double, 2> sum{0.0, 0.0};
    std::array<std::size_t, 2> count{0, 0};
    for (std::size_t i = 0; i < features.size(); ++i)
    {
        const auto &f = features[i];
        if (f.slot_index >= int(X.size()))
            throw std::invalid_argument("slot index beyond trajectory");
        const double az = geometric_azimuth(X.points[f.slot_index], aps[f.ap_index].position);
        const double r = wrap_pi(f.aod - az);
        sum[labels[i]] += r * r;
        ++count[labels[i]];
    }
    if (count[0] == 0 || count[1] == 0)
        throw std::runtime_error("empty class in angle fit");
    return {std::max(sum[0] / double(count[0]), kAngleVarFloor),
            std::max(sum[1] / double(count[1]), kAngleVarFloor)};
}

// -------------------------------------------------------------- P3 decode

namespace
{

// Per-(cell, AP) geometry cache; cells coinciding with an AP are excluded
// from the candidate set.
struct CellApCache
{
    std::vector<double> log10_d; // [cell * Q + q]
    std::vector<double> azimuth;
    std::vector<std::uint8_t> degenerate; // per cell
    int num_aps = 0;

    CellApCache(const Grid &grid, const std::vector<AccessPoint> &aps)
    {
        num_aps = int(aps.size());
        const int G = grid.size();
        log10_d.resize(std::size_t(G) * num_aps);
        azimuth.resize(std::size_t(G) * num_aps);
        degenerate.assign(G, 0);
        for (int c = 0; c < G; ++c)
        {
            const Point2 x = grid.center(c);
            for (int q = 0; q < num_aps; ++q)
            {
                if (x == aps[q].position)
                {
                    degenerate[c] = 1;
                    continue;
                }
                const double d = distance(x, aps[q].position);
                log10_d[std::size_t(c) * num_aps + q] = std::log10(d);
                azimuth[std::size_t(c) * num_aps + q] = geometric_azimuth(x, aps[q].position);
            }
        }
    }
};

// Emission table: rows are slots, kNegInf marks excluded cells.
std::vector<double> build_emission_table(const std::vector<FeatureVec> &features,
                                         const std::vector<std::vector<int>> &slots,
                                         const PropagationParams &params, const Grid &grid,
                                         const CellApCache &cache)
{
    const int G = grid.size();
    const int T = int(slots.size());
    std::vector<double> emis(std::size_t(T) * G, 0.0);
    parallel_over_rows(T, [&](int t0, int t1) {
        for (int t = t0; t < t1; ++t)
            for (int c = 0; c < G; ++c)
            {
                double &e = emis[std::size_t(t) * G + c];
                if (cache.degenerate[c] && !slots[t].empty())
                {
                    e = kNegInf;
                    continue;
                }
                for (int idx : slots[t])
                {
                    const auto &y = features[idx];
                    const std::size_t at = std::size_t(c) * cache.num_aps + y.ap_index;
                    e += emission_core(y, cache.log10_d[at], cache.azimuth[at], params.labels[idx],
                                       params);
                }
            }
    });
    return emis;
}

} // namespace

Trajectory viterbi2(const std::vector<FeatureVec> &features, const PropagationParams &params,
                    const MobilityParams &mob, const Grid &grid, double v_max,
                    const std::vector<AccessPoint> &aps)
{
    if (features.empty())
        throw std::invalid_argument("no features");
    if (params.labels.size() != features.size())
        throw std::invalid_argument("labels/features size mismatch");
    check_params(params, int(aps.size()));
    mob.validate();
    if (!(mob.gamma < 1.0))
        throw std::invalid_argument("degenerate mobility");

    const int T = count_slots(features);
    const auto slots = group_by_slot(features, T);
    const int G = grid.size();
    const int cols = grid.cols;
    const int rows = grid.rows;

    // Step offsets within the speed limit.
    const double max_step = v_max * mob.slot_duration;
    const double max_cells = max_step / grid.resolution;
    if (max_cells < 1.0)
        throw std::runtime_error("disconnected state graph");
    const int reach = int(std::floor(max_cells + 1e-9));
    std::vector<std::pair<int, int>> offsets; // (di, dj)
    for (int dj = -reach; dj <= reach; ++dj)
        for (int di = -reach; di <= reach; ++di)
            if (double(di * di + dj * dj) <= max_cells * max_cells + 1e-9)
                offsets.emplace_back(di, dj);
    const int K = int(offsets.size());

    const std::size_t n_states = std::size_t(G) * K;
    if (T > 1 && n_states * std::size_t(T) * 2 > std::size_t(3) * 1024 * 1024 * 1024)
        throw std::runtime_error("state space too large; coarsen the grid or lower v_max");

    // Transition cost table: cost[u*K + w] for incoming offset u given the
    // previous incoming offset w. Matches mobility_logpdf arithmetic on the
    // grid step vectors.
    const double g = mob.gamma;
    const double delta = mob.slot_duration;
    const double var = (1.0 - g * g) * delta * delta * mob.velocity_sigma * mob.velocity_sigma;
    const double log_norm = -std::log(2.0 * M_PI * var);
    std::vector<double> trans(std::size_t(K) * K);
    for (int u = 0; u < K; ++u)
        for (int w = 0; w < K; ++w)
        {
            const Point2 step_u{offsets[u].first * grid.resolution, offsets[u].second * grid.resolution};
            const Point2 step_w{offsets[w].first * grid.resolution, offsets[w].second * grid.resolution};
            const Point2 r = step_u - step_w * g - mob.mean_velocity * ((1.0 - g) * delta);
            trans[std::size_t(u) * K + w] = log_norm - r.norm_sq() / (2.0 * var);
        }

    const auto emis = build_emission_table(features, slots, params, grid, CellApCache(grid, aps));

    // Degenerate horizon lengths.
    if (T == 1)
    {
        int best = 0;
        for (int c = 1; c < G; ++c)
            if (emis[c] > emis[best])
                best = c;
        Trajectory out;
        out.slot_duration = delta;
        out.points.push_back(grid.center(best));
        return out;
    }

    // State (c, u): position is cell c, previous position is c - offsets[u].
    std::vector<double> prev(n_states, kNegInf), cur(n_states, kNegInf);
    std::vector<std::uint16_t> back;
    if (T > 2)
        back.assign(std::size_t(T) * n_states, 0);

    // Second slot: emissions only.
    for (int row = 0; row < rows; ++row)
        for (int col = 0; col < cols; ++col)
        {
            const int c = row * cols + col;
            for (int u = 0; u < K; ++u)
            {
                const int bcol = col - offsets[u].first;
                const int brow = row - offsets[u].second;
                if (bcol < 0 || bcol >= cols || brow < 0 || brow >= rows)
                    continue;
                const int b = brow * cols + bcol;
                prev[std::size_t(c) * K + u] = emis[b] + emis[std::size_t(G) + c];
            }
        }

    for (int t = 2; t < T; ++t)
    {
        const double *emis_t = emis.data() + std::size_t(t) * G;
        std::uint16_t *back_t = back.data() + std::size_t(t) * n_states;
        parallel_over_rows(rows, [&](int r0, int r1) {
            for (int row = r0; row < r1; ++row)
                for (int col = 0; col < cols; ++col)
                {
                    const int c = row * cols + col;
                    for (int u = 0; u < K; ++u)
                    {
                        const std::size_t sid = std::size_t(c) * K + u;
                        const int bcol = col - offsets[u].first;
                        const int brow = row - offsets[u].second;
                        if (bcol < 0 || bcol >= cols || brow < 0 || brow >= rows)
                        {
                            cur[sid] = kNegInf;
                            continue;
                        }
                        const int b = brow * cols + bcol;
                        const double *prev_b = prev.data() + std::size_t(b) * K;
                        const double *cost_u = trans.data() + std::size_t(u) * K;
                        double best = kNegInf;
                        int best_w = 0;
                        for (int w = 0; w < K; ++w)
                        {
                            const double cand = prev_b[w] + cost_u[w];
                            if (cand > best)
                            {
                                best = cand;
                                best_w = w;
                            }
                        }
                        cur[sid] = best + emis_t[c];
                        back_t[sid] = std::uint16_t(best_w);
                    }
                }
        });
        std::swap(prev, cur);
    }

    // Final argmax; state iteration order makes ties fall to the lowest
    // cell index.
    std::size_t best_state = 0;
    for (std::size_t s = 1; s < n_states; ++s)
        if (prev[s] > prev[best_state])
            best_state = s;
    if (prev[best_state] <= kNegInf / 2.0)
        throw std::runtime_error("disconnected state graph");

    std::vector<int> cells(T);
    int c = int(best_state / K);
    int u = int(best_state % K);
    for (int t = T - 1; t >= 1; --t)
    {
        cells[t] = c;
        const int bcol = (c % cols) - offsets[u].first;
        const int brow = (c / cols) - offsets[u].second;
        const int b = brow * cols + bcol;
        if (t == 1)
        {
            cells[0] = b;
            break;
        }
        const int w = back[std::size_t(t) * n_states + std::size_t(c) * K + u];
        c = b;
        u = w;
    }

    Trajectory out;
    out.slot_duration = delta;
    out.points.reserve(T);
    for (int t = 0; t < T; ++t)
        out.points.push_back(grid.center(cells[t]));
    return out;
}

// ---------------------------------------------------------------- overall

double objective(const Trajectory &X, const PropagationParams &params, const MobilityParams &mob,
                 const std::vector<FeatureVec> &features, const std::vector<AccessPoint> &aps)
{
    if (params.labels.size() != features.size())
        throw std::invalid_argument("labels/features size mismatch");
    const int T = int(X.size());
    const auto slots = group_by_slot(features, std::max(T, count_slots(features)));
    if (int(slots.size()) > T)
        throw std::invalid_argument("features reference slots beyond the trajectory");

    double total = 0.0;
    for (int t = 0; t < T; ++t)
    {
        if (t >= int(slots.size()))
            break;
        double slot_sum = 0.0;
        for (int idx : slots[t])
            slot_sum += emission_logpdf(features[idx], X.points[t], aps[features[idx].ap_index],
                                        params.labels[idx], params);
        total += slot_sum;
    }
    for (int t = 2; t < T; ++t)
        total += mobility_logpdf(X.points[t], X.points[t - 1], X.points[t - 2], mob);
    return total;
}

namespace
{

PropagationParams assemble_params(const PowerFit &power, const std::array<double, 2> &angle_var,
                                  const DelayParams &delay, std::vector<std::uint8_t> labels)
{
    PropagationParams p;
    p.beta = power.beta;
    p.alpha = power.alpha;
    p.rss_var = power.rss_var;
    for (auto &qv : p.rss_var)
        for (auto &v : qv)
            v = std::max(v, kVarianceFloor);
    p.angle_var = {std::max(angle_var[0], kAngleVarFloor), std::max(angle_var[1], kAngleVarFloor)};
    p.delay_intercept = {delay.b0, delay.b1};
    p.delay_slope = delay.slope;
    p.delay_var = std::max(delay.variance, kVarianceFloor);
    p.labels = std::move(labels);
    return p;
}

} // namespace

FitReport alternate(const std::vector<FeatureVec> &features, const Environment &env,
                    const Grid &grid, const AlternateConfig &config)
{
    if (features.empty())
        throw std::invalid_argument("no features");
    const int T = count_slots(features);
    if (T < 4)
        throw std::invalid_argument("need at least 4 slots");

    const auto &aps = env.aps;
    auto delay_fit = fit_delay_block(features);

    // Provisional trajectory for the initial propagation fits.
    Trajectory X = wcl_trajectory(features, aps, config.slot_duration);
    PowerFit power = fit_power_params(features, X, delay_fit.labels, aps);
    std::array<double, 2> angles = fit_angle_vars(features, X, delay_fit.labels, aps);
    MobilityParams mob = fit_mobility(X);

    FitReport report;
    for (int iter = 1; iter <= config.max_outer_iters; ++iter)
    {
        delay_fit = fit_delay_block(features);
        DelayParams delay{delay_fit.b0, delay_fit.b1, delay_fit.slope, delay_fit.variance};
        PropagationParams params = assemble_params(power, angles, delay, delay_fit.labels);

        X = viterbi2(features, params, mob, grid, config.v_max, aps);

        power = fit_power_params(features, X, delay_fit.labels, aps);
        angles = fit_angle_vars(features, X, delay_fit.labels, aps);
        mob = fit_mobility(X);

        report.params = assemble_params(power, angles, delay, delay_fit.labels);
        const double obj = objective(X, report.params, mob, features, aps);
        report.objective_trace.push_back(obj);
        report.iterations = iter;
        if (iter >= 2)
        {
            const double gain = obj - report.objective_trace[iter - 2];
            if (gain < config.objective_tol)
            {
                report.converged = true;
                break;
            }
        }
    }
    report.mobility = mob;
    report.trajectory = X;
    return report;
}

FitReport alternate_genie(const std::vector<FeatureVec> &features, const Environment &env,
                          const Grid &grid, const AlternateConfig &config, const Trajectory &truth)
{
    if (features.empty())
        throw std::invalid_argument("no features");
    const auto &aps = env.aps;
    const auto labels = geometric_labels(features, truth, env);

    const PowerFit power = fit_power_params(features, truth, labels, aps);
    const auto angles = fit_angle_vars(features, truth, labels, aps);
    const DelayParams delay = fit_delay_params(features, labels);
    const PropagationParams params = assemble_params(power, angles, delay, labels);

    MobilityParams mob = fit_mobility(truth);

    FitReport report;
    report.params = params;
    Trajectory X = truth;
    for (int iter = 1; iter <= config.max_outer_iters; ++iter)
    {
        X = viterbi2(features, params, mob, grid, config.v_max, aps);
        mob = fit_mobility(X);
        const double obj = objective(X, params, mob, features, aps);
        report.objective_trace.push_back(obj);
        report.iterations = iter;
        if (iter >= 2)
        {
            const double gain = obj - report.objective_trace[iter - 2];
            if (gain < config.objective_tol)
            {
                report.converged = true;
                break;
            }
        }
    }
    report.mobility = mob;
    report.trajectory = X;
    return report;
}

// ---------------------------------------------------------------- reports

using nlohmann::json;

namespace
{

json params_to_json(const PropagationParams &p)
{
    json j;
    j["beta"] = p.beta;
    j["alpha"] = p.alpha;
    j["rss_var"] = p.rss_var;
    j["angle_var"] = p.angle_var;
    j["delay_intercept"] = p.delay_intercept;
    j["delay_slope"] = p.delay_slope;
    j["delay_var"] = p.delay_var;
    return j;
}

} // namespace

void save_fit_report(const FitReport &report, const std::vector<FeatureVec> &features,
                     const std::string &path)
{
    json j;
    j["converged"] = report.converged;
    j["iterations"] = report.iterations;
    j["objective_trace"] = report.objective_trace;
    j["params"] = params_to_json(report.params);
    j["mobility"] = {{"gamma", report.mobility.gamma},
                     {"mean_velocity", {report.mobility.mean_velocity.x, report.mobility.mean_velocity.y}},
                     {"velocity_sigma", report.mobility.velocity_sigma},
                     {"slot_duration", report.mobility.slot_duration}};
    j["trajectory"] = json::array();
    for (const auto &p : report.trajectory.points)
        j["trajectory"].push_back({p.x, p.y});

    int num_aps = 0;
    for (const auto &f : features)
        num_aps = std::max(num_aps, f.ap_index + 1);
    const int T = int(report.trajectory.size());
    std::vector<std::vector<int>> indicators(T, std::vector<int>(num_aps, -1));
    for (std::size_t i = 0; i < features.size() && i < report.params.labels.size(); ++i)
    {
        const auto &f = features[i];
        if (f.slot_index < T)
        {
            indicators[f.slot_index][f.ap_index] = report.params.labels[i];
            // one-hot constraint: exactly one class per measurement
        }
    }
    j["indicators"] = indicators;

    std::ofstream out(path);
    if (!out)
        throw io_error("cannot write fit report: " + path);
    out << j.dump(2) << "\n";
}

} // namespace rmap
