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

#include "radiomap/channel.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "radiomap/io_detail.hpp"
#include "radiomap/rng.hpp"

namespace rmap
{

void RadioConfig::validate(const Environment &env) const
{
    if (carrier_freq <= 0.0)
        throw std::invalid_argument("carrier frequency must be positive");
    if (bandwidth <= 0.0)
        throw std::invalid_argument("bandwidth must be positive");
    for (const auto &ap : env.aps)
        if (num_subcarriers <= ap.num_antennas)
            throw std::invalid_argument("need more subcarriers than antennas");
}

arma::cx_vec steering_vector(double aod_local, int num_antennas, double spacing, double wavelength)
{
    if (!(aod_local > -M_PI / 2.0 && aod_local < M_PI / 2.0))
        throw std::invalid_argument("outside ULA field of view");
    if (spacing <= 0.0)
        throw std::invalid_argument("element spacing must be positive");

    const double phase_step = -2.0 * M_PI / wavelength * spacing * std::sin(aod_local);
    arma::cx_vec a(num_antennas);
    for (int n = 0; n < num_antennas; ++n)
        a(n) = std::polar(1.0, phase_step * n);
    a(0) = 1.0;
    return a;
}

namespace
{

bool segment_clear(const Environment &env, const Point2 &a, const Point2 &b)
{
    for (const auto &ob : env.obstacles)
        if (wall_blocks_segment(a, b, ob.a, ob.b))
            return false;
    return true;
}

bool within_fov(double aod_global, double orientation)
{
    const double local = wrap_pi(aod_global - orientation);
    return local > -M_PI / 2.0 && local < M_PI / 2.0;
}

} // namespace

std::vector<MultipathComponent> synth_paths(const Environment &env, const AccessPoint &ap,
                                            const Point2 &x, const RadioConfig &config,
                                            double path_loss_exponent, std::uint64_t seed,
                                            double ref_gain)
{
    if (x == ap.position)
        throw std::invalid_argument("degenerate pair");
    (void)config;

    auto rng = std::mt19937_64(seed);
    std::uniform_real_distribution<double> uniform_phase(0.0, 2.0 * M_PI);

    std::vector<MultipathComponent> paths;

    // Direct path.
    if (los_visible(env, ap.position, x))
    {
        const double d = distance(ap.position, x);
        const double mag = ref_gain * std::pow(d, -path_loss_exponent / 2.0);
        const double theta = geometric_azimuth(x, ap.position);
        if (within_fov(theta, ap.orientation) && mag > 0.0)
            paths.push_back({std::polar(mag, uniform_phase(rng)), d / kSpeedOfLight, theta});
    }

    // One image-method bounce per obstacle.
    for (const auto &ob : env.obstacles)
    {
        // AP and user must sit strictly on the same side of the wall line.
        const Point2 wall = ob.b - ob.a;
        const double side_ap = cross(wall, ap.position - ob.a);
        const double side_x = cross(wall, x - ob.a);
        if (side_ap == 0.0 || side_x == 0.0 || (side_ap > 0.0) != (side_x > 0.0))
            continue;

        const Point2 image = reflect_across_line(x, ob.a, ob.b);
        // Bounce point: intersection of (ap -> image) with the wall segment.
        const Point2 r = image - ap.position;
        const double denom = cross(r, wall);
        if (denom == 0.0)
            continue;
        const Point2 qp = ob.a - ap.position;
        const double t = cross(qp, wall) / denom;
        const double u = cross(qp, r) / denom;
        if (t <= 0.0 || t >= 1.0 || u < 0.0 || u > 1.0)
            continue;
        const Point2 bounce = ap.position + r * t;

        if (!segment_clear(env, ap.position, bounce) || !segment_clear(env, bounce, x))
            continue;

        const double total_len = distance(ap.position, image); // unfolded length
        const double mag = ref_gain * ob.reflectivity * std::pow(total_len, -path_loss_exponent / 2.0);
        if (mag <= 0.0)
            continue;
        const double theta = geometric_azimuth(bounce, ap.position);
        if (!within_fov(theta, ap.orientation))
            continue;
        paths.push_back({std::polar(mag, uniform_phase(rng)), total_len / kSpeedOfLight, theta});
    }

    if (paths.empty())
        throw std::runtime_error("radio silence");
    return paths;
}

CsiMatrix synth_csi(const std::vector<MultipathComponent> &paths, const AccessPoint &ap,
                    const RadioConfig &config)
{
    if (paths.empty())
        throw std::invalid_argument("empty path list");

    const int nt = ap.num_antennas;
    const int m_count = config.num_subcarriers;
    const double lambda = config.wavelength();

    CsiMatrix csi;
    csi.entries.zeros(nt, m_count);
    for (const auto &p : paths)
    {
        const double local = wrap_pi(p.aod_global - ap.orientation);
        const arma::cx_vec a = steering_vector(local, nt, ap.element_spacing, lambda);
        for (int m = 1; m <= m_count; ++m)
        {
            const std::complex<double> tone =
                p.gain * std::polar(1.0, -2.0 * M_PI * (double(m) / m_count) * config.bandwidth * p.delay);
            csi.entries.col(m - 1) += tone * a;
        }
    }
    return csi;
}

CsiMatrix add_noise(const CsiMatrix &H, double variance, std::uint64_t seed)
{
    if (variance < 0.0)
        throw std::invalid_argument("noise variance must be non-negative");

    CsiMatrix out = H;
    if (variance == 0.0)
        return out;

    auto rng = std::mt19937_64(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(variance / 2.0));
    for (arma::uword i = 0; i < out.entries.n_elem; ++i)
    {
        const double re = gauss(rng);
        const double im = gauss(rng);
        out.entries(i) += std::complex<double>(re, im);
    }
    return out;
}

// ---------------------------------------------------------------- file I/O

namespace
{

void put_u16(std::string &buf, std::uint16_t v)
{
    buf.push_back(char(v & 0xff));
    buf.push_back(char(v >> 8));
}

void put_u32(std::string &buf, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        buf.push_back(char((v >> (8 * i)) & 0xff));
}

void put_f32(std::string &buf, float v)
{
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

std::uint32_t get_u32(const unsigned char *p)
{
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char *p)
{
    return std::uint16_t(p[0]) | (std::uint16_t(p[1]) << 8);
}

float get_f32(const unsigned char *p)
{
    const std::uint32_t bits = get_u32(p);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

bool ends_with(const std::string &s, const std::string &suffix)
{
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

using nlohmann::json;

void save_csi_jsonl(const std::vector<CsiMatrix> &records, const std::string &path)
{
    std::ofstream out(path);
    if (!out)
        throw io_error("cannot write CSI file: " + path);
    for (const auto &rec : records)
    {
        json j;
        j["t"] = rec.slot_index;
        j["q"] = rec.ap_index;
        j["n_t"] = rec.entries.n_rows;
        j["m"] = rec.entries.n_cols;
        std::vector<double> re, im;
        re.reserve(rec.entries.n_elem);
        im.reserve(rec.entries.n_elem);
        for (arma::uword n = 0; n < rec.entries.n_rows; ++n)
            for (arma::uword m = 0; m < rec.entries.n_cols; ++m)
            {
                re.push_back(rec.entries(n, m).real());
                im.push_back(rec.entries(n, m).imag());
            }
        j["re"] = re;
        j["im"] = im;
        out << j.dump() << "\n";
    }
}

std::vector<CsiMatrix> load_csi_jsonl(std::istream &in, const std::string &path)
{
    std::vector<CsiMatrix> records;
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
            throw io_error("malformed CSI record in " + path + ": " + e.what());
        }
        CsiMatrix rec;
        rec.slot_index = j.at("t").get<int>();
        rec.ap_index = j.at("q").get<int>();
        const arma::uword nt = j.at("n_t").get<arma::uword>();
        const arma::uword m_count = j.at("m").get<arma::uword>();
        const auto &re = j.at("re");
        const auto &im = j.at("im");
        if (re.size() != nt * m_count || im.size() != nt * m_count)
            throw io_error("CSI record size mismatch in " + path);
        rec.entries.set_size(nt, m_count);
        for (arma::uword n = 0; n < nt; ++n)
            for (arma::uword m = 0; m < m_count; ++m)
                rec.entries(n, m) = {re[n * m_count + m].get<double>(), im[n * m_count + m].get<double>()};
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace

void save_csi(const std::vector<CsiMatrix> &records, const std::string &path)
{
    if (ends_with(path, ".jsonl"))
    {
        save_csi_jsonl(records, path);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw io_error("cannot write CSI file: " + path);
    std::string buf;
    for (const auto &rec : records)
    {
        buf.clear();
        put_u32(buf, std::uint32_t(rec.slot_index));
        put_u16(buf, std::uint16_t(rec.ap_index));
        put_u16(buf, std::uint16_t(rec.entries.n_rows));
        put_u16(buf, std::uint16_t(rec.entries.n_cols));
        for (arma::uword n = 0; n < rec.entries.n_rows; ++n)
            for (arma::uword m = 0; m < rec.entries.n_cols; ++m)
            {
                put_f32(buf, float(rec.entries(n, m).real()));
                put_f32(buf, float(rec.entries(n, m).imag()));
            }
        out.write(buf.data(), std::streamsize(buf.size()));
    }
}

std::vector<CsiMatrix> load_csi(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("cannot open CSI file: " + path);

    // Sniff the JSON-lines debug variant.
    const int first = in.peek();
    if (first == '{')
        return load_csi_jsonl(in, path);

    std::vector<CsiMatrix> records;
    unsigned char header[10];
    while (in.read(reinterpret_cast<char *>(header), 10))
    {
        CsiMatrix rec;
        rec.slot_index = int(get_u32(header));
        rec.ap_index = int(get_u16(header + 4));
        const arma::uword nt = get_u16(header + 6);
        const arma::uword m_count = get_u16(header + 8);
        if (nt == 0 || m_count == 0)
            throw io_error("corrupt CSI header in " + path);
        std::vector<unsigned char> payload(nt * m_count * 8);
        if (!in.read(reinterpret_cast<char *>(payload.data()), std::streamsize(payload.size())))
            throw io_error("truncated CSI record in " + path);
        rec.entries.set_size(nt, m_count);
        const unsigned char *p = payload.data();
        for (arma::uword n = 0; n < nt; ++n)
            for (arma::uword m = 0; m < m_count; ++m)
            {
                rec.entries(n, m) = {double(get_f32(p)), double(get_f32(p + 4))};
                p += 8;
            }
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace rmap
