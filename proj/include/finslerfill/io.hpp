#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "finslerfill/filling.hpp"
#include "finslerfill/pu.hpp"

namespace finsler::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "finslerfill 0.1.0";

// configuration or schema problem; maps to the usage exit code
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- metric spec (de)serialization ------------------------------------------

inline MetricSpec metric_spec_from_json(const json& j) {
    if (!j.is_object() || !j.contains("family"))
        throw ConfigError("metric spec: object with a 'family' field required");
    std::string family = j.at("family").get<std::string>();
    json params = j.value("params", json::object());
    MetricSpec s;
    double scale = params.value("scale", 1.0);
    if (family == "euclidean") {
        s = euclidean_spec(scale);
    } else if (family == "hemisphere") {
        s = hemisphere_spec(scale);
    } else if (family == "conformal") {
        std::string base = params.value("base", "flat");
        std::vector<ConformalBump> bumps;
        for (const auto& b : params.value("bumps", json::array())) {
            ConformalBump bump;
            bump.amplitude = b.at("amplitude").get<double>();
            bump.center = {b.at("center").at(0).get<double>(), b.at("center").at(1).get<double>()};
            bump.sigma = b.at("sigma").get<double>();
            bumps.push_back(bump);
        }
        ConformalBase cb = base == "hemisphere" ? ConformalBase::Hemisphere : ConformalBase::Flat;
        if (base != "flat" && base != "hemisphere")
            throw ConfigError("metric spec: conformal base must be flat or hemisphere");
        s = conformal_bump_spec(cb, bumps, scale, j.value("name", "conformal"));
    } else if (family == "randers") {
        auto d = params.at("drift");
        s = randers_spec({d.at(0).get<double>(), d.at(1).get<double>()}, scale);
    } else if (family == "minkowski") {
        double p = params.value("p", 2.0);
        double frame[2][2] = {{1.0, 0.0}, {0.0, 1.0}};
        if (params.contains("frame")) {
            const auto& F = params.at("frame");
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) frame[a][b] = F.at(a).at(b).get<double>();
        }
        // scale folds into the frame
        s = minkowski_spec(p, scale * frame[0][0], scale * frame[0][1], scale * frame[1][0],
                           scale * frame[1][1]);
    } else {
        throw ConfigError("metric spec: unknown family '" + family + "'");
    }
    if (j.contains("name")) s.name = j.at("name").get<std::string>();
    return s;
}

inline json metric_spec_to_json(const MetricSpec& s) {
    json j;
    json params;
    params["scale"] = s.scale;
    switch (s.family) {
        case MetricFamily::Euclidean:
            j["family"] = "euclidean";
            break;
        case MetricFamily::Conformal: {
            j["family"] = s.bumps.empty() && s.base == ConformalBase::Hemisphere ? "hemisphere"
                                                                                 : "conformal";
            if (j["family"] == "conformal") {
                params["base"] = s.base == ConformalBase::Hemisphere ? "hemisphere" : "flat";
                json arr = json::array();
                for (const auto& b : s.bumps)
                    arr.push_back({{"amplitude", b.amplitude},
                                   {"center", {b.center.x, b.center.y}},
                                   {"sigma", b.sigma}});
                params["bumps"] = arr;
            }
            break;
        }
        case MetricFamily::Randers:
            j["family"] = "randers";
            params["drift"] = {s.drift.x, s.drift.y};
            break;
        case MetricFamily::Minkowski:
            j["family"] = "minkowski";
            params["p"] = s.p;
            params["frame"] = {{s.frame[0][0], s.frame[0][1]}, {s.frame[1][0], s.frame[1][1]}};
            break;
    }
    j["params"] = params;
    j["name"] = s.name;
    j["reversible"] = Metric(s).reversible();
    return j;
}

// ---- run configuration ------------------------------------------------------

struct RunConfig {
    std::vector<MetricSpec> metrics;  // one, or two for the verify command
    double h = 0.05;
    int stencil_radius = 3;
    int n = 16;
    std::vector<int> n_schedule;
    int m = 256;  // sphere/cosphere polygon resolution
    unsigned long long seed = 2024;
    std::string out_dir = ".";
    std::string render_what = "indicatrices";
    json raw;  // embedded verbatim in certificates
};

inline RunConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config: top-level object required");
    RunConfig cfg;
    cfg.raw = j;
    if (j.contains("metrics")) {
        for (const auto& m : j.at("metrics")) cfg.metrics.push_back(metric_spec_from_json(m));
    } else if (j.contains("metric")) {
        cfg.metrics.push_back(metric_spec_from_json(j.at("metric")));
    } else {
        throw ConfigError("config: 'metric' or 'metrics' required");
    }
    if (j.contains("mesh")) {
        cfg.h = j.at("mesh").value("h", cfg.h);
        cfg.stencil_radius = j.at("mesh").value("R", cfg.stencil_radius);
    }
    cfg.n = j.value("n", cfg.n);
    if (j.contains("n_schedule"))
        cfg.n_schedule = j.at("n_schedule").get<std::vector<int>>();
    cfg.m = j.value("m", cfg.m);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.out_dir = j.value("out", cfg.out_dir);
    cfg.render_what = j.value("render", cfg.render_what);
    if (!(cfg.h > 0.0) || cfg.h > 0.2) throw ConfigError("config: h must lie in (0, 0.2]");
    if (cfg.stencil_radius < 1 || cfg.stencil_radius > 4)
        throw ConfigError("config: R must lie in {1,2,3,4}");
    if (cfg.n < 2 || cfg.n > 4096) throw ConfigError("config: n must lie in [2, 4096]");
    if (cfg.m < 16 || cfg.m > 1 << 16) throw ConfigError("config: m must lie in [16, 65536]");
    for (int n : cfg.n_schedule)
        if (n < 2 || n > 4096) throw ConfigError("config: n_schedule entries must lie in [2, 4096]");
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: parse error: ") + e.what());
    }
    return parse_config(j);
}

// ---- serialization helpers --------------------------------------------------

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string config_hash(const json& raw) {
    std::ostringstream os;
    os << std::hex << fnv1a(raw.dump());
    return os.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// one header line, then rows
inline std::string csv_table(const std::string& header,
                             const std::vector<std::vector<double>>& rows) {
    std::ostringstream os;
    os << header << "\n";
    for (const auto& r : rows) {
        for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << fmt(r[i]);
        os << "\n";
    }
    return os.str();
}

inline json certificate_to_json(const FillingCertificate& cert, const json& raw_config) {
    json j;
    j["metrics"] = {cert.metric0, cert.metric};
    j["mesh"] = {{"h", cert.h}, {"R", cert.stencil_radius}};
    j["n"] = cert.n;
    j["I"] = cert.I;
    j["error_bar"] = cert.error_bar;
    j["ht_area"] = cert.ht;
    j["verdict"] = cert.verdict;
    j["provenance"] = cert.provenance;
    j["tool_version"] = kToolVersion;
    j["config"] = raw_config;
    j["config_hash"] = config_hash(raw_config);
    return j;
}

// ---- svg --------------------------------------------------------------------

// Fixed-size canvas mapping the square [-1.15, 1.15]^2; coordinates are
// printed with fixed precision so output is byte-stable.
class SvgCanvas {
  public:
    SvgCanvas(double world_half = 1.15, int px = 640) : half_(world_half), px_(px) {
        os_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px << "\" height=\"" << px
            << "\" viewBox=\"0 0 " << px << " " << px << "\">\n";
        os_ << "<rect width=\"" << px << "\" height=\"" << px << "\" fill=\"white\"/>\n";
    }

    void circle(Point2 c, double r, const std::string& stroke) {
        os_ << "<circle cx=\"" << X(c.x) << "\" cy=\"" << Y(c.y) << "\" r=\"" << S(r)
            << "\" fill=\"none\" stroke=\"" << stroke << "\"/>\n";
    }

    template <class V>
    void polyline(const std::vector<V>& pts, const std::string& stroke, bool closed = false) {
        os_ << (closed ? "<polygon" : "<polyline") << " points=\"";
        for (const auto& p : pts) os_ << X(p.x) << "," << Y(p.y) << " ";
        os_ << "\" fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1\"/>\n";
    }

    std::string finish() {
        os_ << "</svg>\n";
        return os_.str();
    }

  private:
    std::string X(double x) { return num((x + half_) / (2 * half_) * px_); }
    std::string Y(double y) { return num((half_ - y) / (2 * half_) * px_); }
    std::string S(double r) { return num(r / (2 * half_) * px_); }
    static std::string num(double v) {
        std::ostringstream o;
        o.setf(std::ios::fixed);
        o.precision(2);
        o << v;
        return o.str();
    }

    double half_;
    int px_;
    std::ostringstream os_;
};

// ---- commands ---------------------------------------------------------------

namespace detail {

inline std::string out_path(const RunConfig& cfg, const std::string& file) {
    return (std::filesystem::path(cfg.out_dir) / file).string();
}

}  // namespace detail

inline int cmd_area(const RunConfig& cfg) {
    Metric metric(cfg.metrics.at(0));
    DiscMesh mesh = build_mesh(metric, cfg.h, cfg.stencil_radius);
    json j;
    j["metric"] = metric_spec_to_json(cfg.metrics.at(0));
    j["mesh"] = {{"h", cfg.h}, {"R", cfg.stencil_radius}};
    j["m"] = cfg.m;
    j["ht_area"] = ht_area(metric, mesh, cfg.m);
    if (metric.reversible()) j["busemann_area"] = busemann_area(metric, mesh, cfg.m);
    j["tool_version"] = kToolVersion;
    j["config_hash"] = config_hash(cfg.raw);
    write_text(detail::out_path(cfg, "area.json"), j.dump(2) + "\n");
    return 0;
}

inline int cmd_distance(const RunConfig& cfg) {
    Metric metric(cfg.metrics.at(0));
    DiscMesh mesh = build_mesh(metric, cfg.h, cfg.stencil_radius);
    auto bd = boundary_distance_matrix(metric, mesh, cfg.n);
    std::ostringstream header;
    header << "source_angle";
    for (int j = 0; j < cfg.n; ++j) {
        Point2 p = mesh.vertices[bd.sample_vertices[j]];
        header << ",d_to_" << fmt(wrap_angle(std::atan2(p.y, p.x)));
    }
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < cfg.n; ++i) {
        Point2 p = mesh.vertices[bd.sample_vertices[i]];
        std::vector<double> row{wrap_angle(std::atan2(p.y, p.x))};
        row.insert(row.end(), bd.d[i].begin(), bd.d[i].end());
        rows.push_back(std::move(row));
    }
    write_text(detail::out_path(cfg, "distance_matrix.csv"), csv_table(header.str(), rows));
    return 0;
}

inline int cmd_lowerbound(const RunConfig& cfg) {
    Metric metric(cfg.metrics.at(0));
    DiscMesh mesh = build_mesh(metric, cfg.h, cfg.stencil_radius);
    StencilFitter fitter(mesh);
    std::vector<int> schedule = cfg.n_schedule;
    if (schedule.empty()) schedule = {cfg.n};
    LowerBoundOptions opt;
    opt.seed = static_cast<unsigned>(cfg.seed);
    auto res = lower_bound(metric, mesh, fitter, schedule, opt);
    std::vector<std::vector<double>> rows;
    for (const auto& e : res.entries)
        rows.push_back({double(e.n), e.I_int, e.I_int_bar, e.I_bnd, e.I_bnd_bar});
    write_text(detail::out_path(cfg, "convergence.csv"),
               csv_table("n,I_interior,I_interior_bar,I_boundary,I_boundary_bar", rows));
    write_text(detail::out_path(cfg, "certificate.json"),
               certificate_to_json(res.certificate, cfg.raw).dump(2) + "\n");
    return res.certificate.verdict == "inconsistent" ? 3 : 0;
}

inline int cmd_verify(const RunConfig& cfg) {
    if (cfg.metrics.size() != 2)
        throw ConfigError("verify: config needs 'metrics' with exactly two entries");
    Metric phi0(cfg.metrics.at(0));
    Metric phi(cfg.metrics.at(1));
    auto rep = verify_filling(phi0, phi, cfg.h, cfg.stencil_radius, cfg.n);
    json j = certificate_to_json(rep.certificate, cfg.raw);
    j["hypothesis_worst"] = rep.hypothesis_worst;
    j["boundary_agreement"] = rep.boundary_agreement;
    j["lipschitz_worst"] = rep.lipschitz_worst;
    write_text(detail::out_path(cfg, "verify_certificate.json"), j.dump(2) + "\n");
    if (!rep.hypothesis_holds) return 2;
    return rep.certificate.verdict == "inconsistent" ? 3 : 0;
}

inline int cmd_pu(const RunConfig& cfg) {
    Metric metric(cfg.metrics.at(0));
    if (!metric.reversible()) throw ConfigError("pu: reversible metrics only");
    DiscMesh mesh = build_mesh(metric, cfg.h, cfg.stencil_radius);
    auto res = pu_check(metric, mesh);
    json j;
    j["metric"] = metric_spec_to_json(cfg.metrics.at(0));
    j["mesh"] = {{"h", cfg.h}, {"R", cfg.stencil_radius}};
    j["area"] = res.area;
    j["systole"] = res.systole;
    j["ratio"] = res.ratio;
    j["verdict"] = res.verdict;
    j["hypotheses"] = {{"boundary_length", res.hypotheses.boundary_length},
                       {"antipodal_worst", res.hypotheses.antipodal_worst},
                       {"arc_worst", res.hypotheses.arc_worst},
                       {"glue_worst", res.hypotheses.glue_worst},
                       {"passed", res.hypotheses.passed}};
    j["tool_version"] = kToolVersion;
    j["config_hash"] = config_hash(cfg.raw);
    write_text(detail::out_path(cfg, "pu.json"), j.dump(2) + "\n");
    if (res.verdict == "inapplicable") return 2;
    return 0;
}

inline int cmd_render(const RunConfig& cfg) {
    Metric metric(cfg.metrics.at(0));
    SvgCanvas svg;
    svg.circle({0, 0}, 1.0, "black");
    if (cfg.render_what == "indicatrices") {
        for (double x = -0.8; x <= 0.85; x += 0.4)
            for (double y = -0.8; y <= 0.85; y += 0.4) {
                if (x * x + y * y > 0.9) continue;
                auto poly = unit_sphere_polygon(metric, {x, y}, 96);
                std::vector<Point2> pts;
                for (auto& v : poly) pts.push_back(Point2{x + 0.12 * v.x, y + 0.12 * v.y});
                svg.polyline(pts, "steelblue", true);
            }
    } else if (cfg.render_what == "geodesics") {
        for (int k = 0; k < 16; ++k) {
            Trajectory tr = shoot(metric, {0.0, 0.0}, unit_dir(kTwoPi * k / 16), 4e-3, 4.0);
            std::vector<Point2> pts;
            for (size_t i = 0; i < tr.states.size(); i += 4) pts.push_back(tr.states[i].x);
            pts.push_back(tr.end());
            svg.polyline(pts, "firebrick");
        }
    } else if (cfg.render_what == "hulls" || cfg.render_what == "traces") {
        DiscMesh mesh = build_mesh(metric, std::max(cfg.h, 0.05), cfg.stencil_radius);
        auto map = distance_cyclic_map(metric, mesh, std::min(cfg.n, 16));
        if (cfg.render_what == "traces") {
            // trace loops (f_i, f_{i+1}) drawn in distance coordinates
            int n = map.data.n();
            for (int i = 0; i < n; ++i) {
                std::vector<Point2> pts;
                const auto& fx = map.data.traces[i];
                const auto& fy = map.data.traces[(i + 1) % n];
                for (size_t k = 0; k < fx.size(); ++k)
                    pts.push_back({fx[k] / 2.0 - 1.0, fy[k] / 2.0 - 1.0});
                svg.polyline(pts, "seagreen", true);
            }
        } else {
            StencilFitter fitter(mesh);
            std::vector<CovectorField> grads(map.data.n());
            for (int i = 0; i < map.data.n(); ++i)
                grads[i] = gradient_field(map.data.fields[i], metric, mesh, fitter);
            for (double x = -0.6; x <= 0.65; x += 0.6)
                for (double y = -0.6; y <= 0.65; y += 0.6) {
                    int best = 0;
                    double bd = 1e300;
                    for (int v = 0; v < mesh.vertex_count(); ++v) {
                        double d = (mesh.vertices[v] - Point2{x, y}).euclid_norm();
                        if (d < bd) {
                            bd = d;
                            best = v;
                        }
                    }
                    std::vector<Point2> pts;
                    for (int i = 0; i < map.data.n(); ++i)
                        if (grads[i].reliable[best])
                            pts.push_back({x + 0.12 * grads[i].cov[best].x,
                                           y + 0.12 * grads[i].cov[best].y});
                    if (pts.size() >= 2) svg.polyline(pts, "darkorange", true);
                }
        }
    } else {
        throw ConfigError("render: unknown target '" + cfg.render_what + "'");
    }
    write_text(detail::out_path(cfg, "render_" + cfg.render_what + ".svg"), svg.finish());
    return 0;
}

}  // namespace finsler::io
