#include "conewidth/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace conewidth {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {
void require(bool ok, const std::string& msg) {
    if (!ok) throw std::runtime_error(msg);
}

std::string vec_fields(const Vec& v) {
    std::string s;
    for (std::size_t i = 0; i < v.dim(); ++i) {
        if (i) s += ",";
        s += fmt(v[i]);
    }
    return s;
}
}  // namespace

bool make_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    return !ec;
}

void write_pbm(const GridSet& G, const std::string& path) {
    const GridDomain& dom = G.domain();
    require(dom.dim() == 2, "write_pbm: n = 2 only");
    const int nx = dom.dims()[0], ny = dom.dims()[1];
    std::ofstream os(path, std::ios::binary);
    require(os.good(), "write_pbm: cannot open " + path);
    os << "P4\n" << nx << " " << ny << "\n";
    // PBM rows top-to-bottom: write j = ny-1 .. 0
    std::vector<unsigned char> row((nx + 7) / 8);
    for (int j = ny - 1; j >= 0; --j) {
        std::fill(row.begin(), row.end(), 0);
        for (int i = 0; i < nx; ++i) {
            if (G.occupied(Index{i, j})) row[i / 8] |= static_cast<unsigned char>(0x80 >> (i % 8));
        }
        os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    std::ofstream hdr(path + ".hdr");
    require(hdr.good(), "write_pbm: cannot open sidecar");
    hdr << "origin = " << vec_fields(dom.origin()) << "\n";
    hdr << "spacing = " << fmt(dom.spacing()) << "\n";
    hdr << "dims = " << nx << "," << ny << "\n";
    hdr << "padding = " << dom.padding() << "\n";
}

GridSet read_pbm(const std::string& path) {
    std::ifstream hdr(path + ".hdr");
    require(hdr.good(), "read_pbm: missing sidecar " + path + ".hdr");
    double ox = 0, oy = 0, spacing = 0;
    int nx = 0, ny = 0, padding = 0;
    std::string line;
    while (std::getline(hdr, line)) {
        std::string key = line.substr(0, line.find('='));
        std::string val = line.substr(line.find('=') + 1);
        auto strip = [](std::string s) {
            while (!s.empty() && (s.front() == ' ')) s.erase(s.begin());
            while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.pop_back();
            return s;
        };
        key = strip(key);
        val = strip(val);
        if (key == "origin") std::sscanf(val.c_str(), "%lf,%lf", &ox, &oy);
        else if (key == "spacing") spacing = std::stod(val);
        else if (key == "dims") std::sscanf(val.c_str(), "%d,%d", &nx, &ny);
        else if (key == "padding") padding = std::stoi(val);
        else require(false, "read_pbm: unknown sidecar key '" + key + "'");
    }
    std::ifstream is(path, std::ios::binary);
    require(is.good(), "read_pbm: cannot open " + path);
    std::string magic;
    is >> magic;
    require(magic == "P4", "read_pbm: not a P4 bitmap");
    int w = 0, hrows = 0;
    is >> w >> hrows;
    is.get();  // single whitespace after the header
    require(w == nx && hrows == ny, "read_pbm: sidecar dims disagree with the bitmap");
    GridDomain dom(Vec{ox, oy}, spacing, std::vector<int>{nx, ny}, padding);
    GridSet G(dom);
    std::vector<unsigned char> row((nx + 7) / 8);
    for (int j = ny - 1; j >= 0; --j) {
        is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        require(is.good(), "read_pbm: truncated bitmap");
        for (int i = 0; i < nx; ++i)
            if (row[i / 8] & (0x80 >> (i % 8))) G.set_cell(Index{i, j}, true);
    }
    return G;
}

void write_pointcloud_csv(const PointCloud& E, const std::string& path) {
    std::ofstream os(path);
    require(os.good(), "write_pointcloud_csv: cannot open " + path);
    os << "# box," << vec_fields(E.box_lo()) << "," << vec_fields(E.box_hi()) << "\n";
    const std::size_t n = E.dim();
    const char* names = "xyz";
    for (std::size_t i = 0; i < n; ++i) os << (i ? "," : "") << names[std::min<std::size_t>(i, 2)];
    for (std::size_t i = 0; i < n; ++i) os << ",n" << names[std::min<std::size_t>(i, 2)];
    os << ",delta\n";
    for (std::size_t p = 0; p < E.size(); ++p) {
        os << vec_fields(E.point(p));
        const auto& nd = E.normal(p);
        if (!nd) {
            for (std::size_t i = 0; i <= n; ++i) os << ",";
        } else if (nd->full_space) {
            for (std::size_t i = 0; i < n; ++i) os << ",";
            os << "," << fmt(nd->delta);
        } else {
            os << "," << vec_fields(nd->direction) << "," << fmt(nd->delta);
        }
        os << "\n";
    }
}

PointCloud read_pointcloud_csv(const std::string& path) {
    std::ifstream is(path);
    require(is.good(), "read_pointcloud_csv: cannot open " + path);
    std::string line;
    std::vector<std::vector<std::string>> rows;
    Vec box_lo, box_hi;
    bool have_box = false;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# box,", 0) == 0) {
                std::vector<double> vals;
                std::stringstream ss(line.substr(6));
                std::string tok;
                while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
                n = vals.size() / 2;
                box_lo = Vec(n);
                box_hi = Vec(n);
                for (std::size_t i = 0; i < n; ++i) {
                    box_lo[i] = vals[i];
                    box_hi[i] = vals[n + i];
                }
                have_box = true;
            }
            continue;
        }
        if (line[0] == 'x') continue;  // header row
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) cells.push_back(tok);
        while (cells.size() < 2 * n + 1) cells.push_back("");
        rows.push_back(std::move(cells));
    }
    require(have_box, "read_pointcloud_csv: missing '# box' line");
    PointCloud E(n, box_lo, box_hi);
    for (const auto& cells : rows) {
        Vec p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = std::stod(cells[i]);
        bool has_delta = cells.size() > 2 * n && !cells[2 * n].empty();
        bool has_dir = !cells[n].empty();
        if (!has_delta && !has_dir) {
            E.add(p);
        } else {
            NormalData nd;
            nd.delta = has_delta ? std::stod(cells[2 * n]) : 1.0;
            if (has_dir) {
                nd.direction = Vec(n);
                for (std::size_t i = 0; i < n; ++i) nd.direction[i] = std::stod(cells[n + i]);
            } else {
                nd.full_space = true;
                nd.direction = Vec(n);
                nd.direction[0] = 1.0;
            }
            E.add(p, nd);
        }
    }
    return E;
}

namespace {
template <typename T>
void put(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}
}  // namespace

void write_field(const ScalarField& f, const std::string& path) {
    static_assert(std::endian::native == std::endian::little, "little-endian format");
    std::ofstream os(path, std::ios::binary);
    require(os.good(), "write_field: cannot open " + path);
    os.write("CWF1", 4);
    put<std::uint32_t>(os, 1);
    const GridDomain& dom = f.domain();
    put<std::uint32_t>(os, static_cast<std::uint32_t>(dom.dim()));
    for (int d : dom.dims()) put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < dom.dim(); ++i) put<double>(os, dom.origin()[i]);
    put<double>(os, dom.spacing());
    put<std::uint32_t>(os, static_cast<std::uint32_t>(dom.padding()));
    for (double v : f.samples()) put<double>(os, v);
}

ScalarField read_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(is.good(), "read_field: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    require(std::memcmp(magic, "CWF1", 4) == 0, "read_field: bad magic");
    require(get<std::uint32_t>(is) == 1, "read_field: unsupported version");
    std::uint32_t n = get<std::uint32_t>(is);
    std::vector<int> dims(n);
    for (auto& d : dims) d = static_cast<int>(get<std::uint32_t>(is));
    Vec origin(n);
    for (std::size_t i = 0; i < n; ++i) origin[i] = get<double>(is);
    double spacing = get<double>(is);
    int padding = static_cast<int>(get<std::uint32_t>(is));
    GridDomain dom(origin, spacing, dims, padding);
    std::vector<double> samples(dom.node_count());
    for (double& v : samples) v = get<double>(is);
    require(is.good(), "read_field: truncated samples");
    return ScalarField(dom, std::move(samples));
}

void write_field_csv(const ScalarField& f, const std::string& path) {
    std::ofstream os(path);
    require(os.good(), "write_field_csv: cannot open " + path);
    const GridDomain& dom = f.domain();
    os << "x,y,value\n";
    for (std::size_t fl = 0; fl < dom.node_count(); ++fl) {
        Vec x = dom.node(dom.node_at(fl));
        os << vec_fields(x) << "," << fmt(f.at(fl)) << "\n";
    }
}

void write_width_result(const WidthResult& w, std::ostream& os) {
    os << "value = " << fmt(w.value) << "\n";
    os << "aperture = " << fmt(w.aperture) << "\n";
    os << "s_max = " << w.s_max << "\n";
    os << "spacing = " << fmt(w.spacing) << "\n";
    os << "path =";
    for (const Index& iv : w.argmax_path.nodes) {
        os << " (";
        for (std::size_t i = 0; i < iv.size(); ++i) os << (i ? "," : "") << iv[i];
        os << ")";
    }
    os << "\n";
}

void write_width_result(const WidthResult& w, const std::string& path) {
    std::ofstream os(path);
    require(os.good(), "write_width_result: cannot open " + path);
    write_width_result(w, os);
}

void write_trace(const BuildTrace& trace, const std::string& dir, const std::string& extra) {
    require(make_directory(dir), "write_trace: cannot create " + dir);
    std::ofstream man(dir + "/manifest.txt");
    require(man.good(), "write_trace: cannot open manifest");
    man << "stages = " << trace.stages.size() << "\n";
    man << "aborted = " << (trace.aborted ? 1 : 0) << "\n";
    if (trace.aborted) man << "abort_reason = " << trace.abort_reason << "\n";
    for (std::size_t j = 0; j < trace.stages.size(); ++j) {
        const StageRecord& s = trace.stages[j];
        man << "stage." << j + 1 << ".sigma = " << fmt(s.sigma) << "\n";
        man << "stage." << j + 1 << ".direction = " << vec_fields(s.direction) << "\n";
        man << "stage." << j + 1 << ".width_measured = " << fmt(s.width_measured) << "\n";
        man << "stage." << j + 1 << ".width_ok = " << (s.width_ok ? 1 : 0) << "\n";
        man << "stage." << j + 1 << ".staircase_k = " << s.staircase_k << "\n";
        man << "stage." << j + 1 << ".distinct_stages = " << s.distinct_stages << "\n";
        man << "stage." << j + 1 << ".width_excess = " << fmt(s.width_excess) << "\n";
        man << "stage." << j + 1 << ".max_step_change = " << fmt(s.max_step_change) << "\n";
        man << "stage." << j + 1 << ".psi_phi_dev_on_H = " << fmt(s.psi_phi_dev_on_H) << "\n";
        man << "stage." << j + 1 << ".grad_increment_dev = " << fmt(s.grad_increment_dev) << "\n";
    }
    if (!extra.empty()) man << extra;
    for (std::size_t j = 0; j < trace.f.size(); ++j) {
        char name[32];
        std::snprintf(name, sizeof(name), "/f_%03zu.cwf", j);
        write_field(trace.f[j], dir + name);
    }
    for (std::size_t j = 0; j < trace.omega.size(); ++j) {
        char name[32];
        std::snprintf(name, sizeof(name), "/omega_%03zu.cwf", j);
        write_field(trace.omega[j], dir + name);
    }
    for (std::size_t j = 0; j < trace.psi.size(); ++j) {
        char name[32];
        std::snprintf(name, sizeof(name), "/psi_%03zu.cwf", j);
        write_field(trace.psi[j], dir + name);
    }
}

}  // namespace conewidth
