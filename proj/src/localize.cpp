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

#include "radiomap/localize.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>

#include <json.hpp>

#include "radiomap/io_detail.hpp"

namespace rmap
{

Point2 ml_localize(const std::vector<FeatureVec> &slot_features, const RadioMap &map)
{
    if (slot_features.empty())
        throw std::invalid_argument("no measurements");

    const int G = map.grid.size();
    double best_score = -std::numeric_limits<double>::infinity();
    int best_cell = 0;
    for (int c = 0; c < G; ++c)
    {
        const Point2 x = map.grid.center(c);
        double score = 0.0;
        bool valid = true;
        for (const auto &y : slot_features)
        {
            const auto &ap = map.aps.at(y.ap_index);
            if (x == ap.position)
            {
                valid = false;
                break;
            }
            const double e0 = emission_logpdf(y, x, ap, 0, map.params);
            const double e1 = emission_logpdf(y, x, ap, 1, map.params);
            score += std::max(e0, e1);
        }
        if (valid && score > best_score)
        {
            best_score = score;
            best_cell = c;
        }
    }
    return map.grid.center(best_cell);
}

Point2 wcl(const std::vector<double> &rss_db, const std::vector<AccessPoint> &aps)
{
    if (rss_db.empty() || rss_db.size() > aps.size())
        throw std::invalid_argument("RSS/AP count mismatch");

    double total = 0.0;
    Point2 acc{0.0, 0.0};
    for (std::size_t q = 0; q < rss_db.size(); ++q)
    {
        const double w = std::pow(10.0, rss_db[q] / 20.0);
        acc = acc + aps[q].position * w;
        total += w;
    }
    return acc * (1.0 / total);
}

Trajectory wcl_trajectory(const std::vector<FeatureVec> &features,
                          const std::vector<AccessPoint> &aps, double slot_duration)
{
    int T = 0;
    for (const auto &f : features)
        T = std::max(T, f.slot_index + 1);

    Point2 centroid{0.0, 0.0};
    for (const auto &ap : aps)
        centroid = centroid + ap.position;
    centroid = centroid * (1.0 / double(aps.size()));

    std::vector<double> weight_sum(T, 0.0);
    std::vector<Point2> acc(T, Point2{0.0, 0.0});
    for (const auto &f : features)
    {
        const double w = std::pow(10.0, f.rss_db / 20.0);
        acc[f.slot_index] = acc[f.slot_index] + aps.at(f.ap_index).position * w;
        weight_sum[f.slot_index] += w;
    }

    Trajectory traj;
    traj.slot_duration = slot_duration;
    traj.points.resize(T);
    for (int t = 0; t < T; ++t)
        traj.points[t] = weight_sum[t] > 0.0 ? acc[t] * (1.0 / weight_sum[t]) : centroid;
    return traj;
}

// --------------------------------------------------------------------- KNN

KnnModel knn_train(const std::vector<FeatureVec> &features, const Trajectory &positions,
                   int num_aps)
{
    if (num_aps <= 0)
        throw std::invalid_argument("need at least one AP");

    // One row per slot that carries all APs.
    std::map<int, std::vector<const FeatureVec *>> by_slot;
    for (const auto &f : features)
        by_slot[f.slot_index].push_back(&f);

    const int dims = 3 * num_aps;
    std::vector<arma::rowvec> rows;
    std::vector<Point2> labels;
    for (const auto &[t, fs] : by_slot)
    {
        if (int(fs.size()) != num_aps || t >= int(positions.size()))
            continue;
        arma::rowvec row(dims);
        bool complete = true;
        std::vector<bool> seen(num_aps, false);
        for (const auto *f : fs)
        {
            if (f->ap_index < 0 || f->ap_index >= num_aps || seen[f->ap_index])
            {
                complete = false;
                break;
            }
            seen[f->ap_index] = true;
            row(3 * f->ap_index + 0) = f->rss_db;
            row(3 * f->ap_index + 1) = f->aod;
            row(3 * f->ap_index + 2) = f->delay_var_db;
        }
        if (!complete)
            continue;
        rows.push_back(row);
        labels.push_back(positions.points[t]);
    }
    if (rows.empty())
        throw std::invalid_argument("no complete training slots");

    KnnModel model;
    model.num_aps = num_aps;
    model.train.set_size(rows.size(), dims);
    for (std::size_t i = 0; i < rows.size(); ++i)
        model.train.row(i) = rows[i];
    model.labels = std::move(labels);
    model.mean = arma::mean(model.train, 0);
    model.sdev = arma::stddev(model.train, 1, 0); // population std
    model.sdev.transform([](double s) { return s > 0.0 ? s : 1.0; });
    model.train.each_row() -= model.mean;
    model.train.each_row() /= model.sdev;
    return model;
}

Point2 knn_localize(const KnnModel &model, const std::vector<FeatureVec> &slot_features, int k)
{
    if (k <= 0)
        throw std::invalid_argument("k must be positive");
    if (std::size_t(k) > model.labels.size())
        throw std::invalid_argument("k exceeds training set size");

    arma::rowvec query(model.train.n_cols, arma::fill::zeros);
    std::vector<bool> present(model.num_aps, false);
    for (const auto &f : slot_features)
    {
        if (f.ap_index < 0 || f.ap_index >= model.num_aps)
            throw std::invalid_argument("AP index out of range");
        present[f.ap_index] = true;
        query(3 * f.ap_index + 0) = f.rss_db;
        query(3 * f.ap_index + 1) = f.aod;
        query(3 * f.ap_index + 2) = f.delay_var_db;
    }
    query -= model.mean;
    query /= model.sdev;
    // Missing APs contribute the (standardized) training mean.
    for (int q = 0; q < model.num_aps; ++q)
        if (!present[q])
            for (int d = 0; d < 3; ++d)
                query(3 * q + d) = 0.0;

    std::vector<std::pair<double, std::size_t>> dist(model.labels.size());
    for (std::size_t i = 0; i < model.labels.size(); ++i)
    {
        const arma::rowvec diff = model.train.row(i) - query;
        dist[i] = {arma::dot(diff, diff), i};
    }
    std::sort(dist.begin(), dist.end());

    Point2 acc{0.0, 0.0};
    for (int i = 0; i < k; ++i)
        acc = acc + model.labels[dist[i].second];
    return acc * (1.0 / double(k));
}

// -------------------------------------------------------------- evaluation

std::vector<std::uint8_t> geometric_labels(const std::vector<FeatureVec> &features,
                                           const Trajectory &truth, const Environment &env)
{
    std::vector<std::uint8_t> labels(features.size());
    for (std::size_t i = 0; i < features.size(); ++i)
    {
        const auto &f = features[i];
        if (f.slot_index >= int(truth.size()))
            throw std::invalid_argument("slot index beyond trajectory");
        const Point2 &x = truth.points[f.slot_index];
        const Point2 &o = env.aps.at(f.ap_index).position;
        labels[i] = (x == o || los_visible(env, o, x)) ? 0 : 1;
    }
    return labels;
}

EvalReport evaluate(const Trajectory &estimates, const Trajectory &truth, const Environment &env,
                    const std::vector<FeatureVec> &features, const std::vector<std::uint8_t> &labels)
{
    if (estimates.size() != truth.size())
        throw std::invalid_argument("trajectory length mismatch");
    if (!labels.empty() && labels.size() != features.size())
        throw std::invalid_argument("labels/features size mismatch");

    EvalReport report;
    const std::size_t T = truth.size();
    report.per_slot_errors.resize(T);
    report.regions.resize(T);

    std::array<double, 3> sum{0.0, 0.0, 0.0};
    for (std::size_t t = 0; t < T; ++t)
    {
        const double err = distance(estimates.points[t], truth.points[t]);
        report.per_slot_errors[t] = err;

        int visible = 0;
        for (const auto &ap : env.aps)
            if (truth.points[t] == ap.position || los_visible(env, ap.position, truth.points[t]))
                ++visible;
        const Region region = visible == 0 ? Region::nlos
                              : visible == 1 ? Region::single_los
                                             : Region::double_los;
        report.regions[t] = region;
        sum[int(region)] += err;
        ++report.region_count[int(region)];
    }
    for (int r = 0; r < 3; ++r)
        report.region_mean[r] = report.region_count[r] > 0 ? sum[r] / report.region_count[r] : 0.0;
    report.mean_error =
        std::accumulate(report.per_slot_errors.begin(), report.per_slot_errors.end(), 0.0) /
        double(T);

    if (!labels.empty())
    {
        const auto truth_labels = geometric_labels(features, truth, env);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < labels.size(); ++i)
            hits += (labels[i] == truth_labels[i]);
        report.los_accuracy = double(hits) / double(labels.size());
    }
    return report;
}

// ---------------------------------------------------------------- file I/O

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

PropagationParams params_from_json(const json &j)
{
    PropagationParams p;
    p.beta = j.at("beta").get<std::vector<std::array<double, 2>>>();
    p.alpha = j.at("alpha").get<std::vector<std::array<double, 2>>>();
    p.rss_var = j.at("rss_var").get<std::vector<std::array<double, 2>>>();
    p.angle_var = j.at("angle_var").get<std::array<double, 2>>();
    p.delay_intercept = j.at("delay_intercept").get<std::array<double, 2>>();
    p.delay_slope = j.at("delay_slope").get<double>();
    p.delay_var = j.at("delay_var").get<double>();
    return p;
}

const char *region_name(Region r)
{
    switch (r)
    {
    case Region::nlos:
        return "nlos";
    case Region::single_los:
        return "single_los";
    default:
        return "double_los";
    }
}

} // namespace

void save_radio_map(const RadioMap &map, const std::string &path)
{
    json j;
    j["grid"] = {{"origin", {map.grid.origin.x, map.grid.origin.y}},
                 {"resolution", map.grid.resolution},
                 {"rows", map.grid.rows},
                 {"cols", map.grid.cols}};
    j["params"] = params_to_json(map.params);
    j["aps"] = json::array();
    for (const auto &ap : map.aps)
        j["aps"].push_back({{"position", {ap.position.x, ap.position.y}},
                            {"orientation_deg", ap.orientation * 180.0 / M_PI},
                            {"num_antennas", ap.num_antennas},
                            {"element_spacing_m", ap.element_spacing}});
    std::ofstream out(path);
    if (!out)
        throw io_error("cannot write radio map: " + path);
    out << j.dump(2) << "\n";
}

RadioMap load_radio_map(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open radio map: " + path);
    json j;
    try
    {
        in >> j;
    }
    catch (const json::exception &e)
    {
        throw io_error("malformed radio map " + path + ": " + e.what());
    }

    RadioMap map;
    try
    {
        map.grid.origin = {j.at("grid").at("origin").at(0), j.at("grid").at("origin").at(1)};
        map.grid.resolution = j.at("grid").at("resolution").get<double>();
        map.grid.rows = j.at("grid").at("rows").get<int>();
        map.grid.cols = j.at("grid").at("cols").get<int>();
        map.params = params_from_json(j.at("params"));
        for (const auto &ja : j.at("aps"))
        {
            AccessPoint ap;
            ap.position = {ja.at("position").at(0), ja.at("position").at(1)};
            ap.orientation = wrap_2pi(ja.at("orientation_deg").get<double>() * M_PI / 180.0);
            ap.num_antennas = ja.at("num_antennas").get<int>();
            ap.element_spacing = ja.at("element_spacing_m").get<double>();
            map.aps.push_back(ap);
        }
    }
    catch (const json::exception &e)
    {
        throw io_error("radio map " + path + " missing fields: " + e.what());
    }
    return map;
}

void save_eval_csv(const EvalReport &report, const std::string &path)
{
    std::ofstream out(path);
    if (!out)
        throw io_error("cannot write eval CSV: " + path);
    out << "slot,err_m,region\n";
    for (std::size_t t = 0; t < report.per_slot_errors.size(); ++t)
        out << t << "," << report.per_slot_errors[t] << "," << region_name(report.regions[t])
            << "\n";
}

void save_eval_json(const EvalReport &report, const std::string &path)
{
    json j;
    j["mean_error_m"] = report.mean_error;
    j["region_mean_m"] = {{"nlos", report.region_mean[0]},
                          {"single_los", report.region_mean[1]},
                          {"double_los", report.region_mean[2]}};
    j["region_count"] = {{"nlos", report.region_count[0]},
                         {"single_los", report.region_count[1]},
                         {"double_los", report.region_count[2]}};
    if (report.los_accuracy >= 0.0)
        j["los_classification_accuracy"] = report.los_accuracy;
    std::ofstream out(path);
    if (!out)
        throw io_error("cannot write eval report: " + path);
    out << j.dump(2) << "\n";
}

} // namespace rmap
