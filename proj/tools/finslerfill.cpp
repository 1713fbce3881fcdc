#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "finslerfill/io.hpp"

namespace {

struct Overrides {
    double h = -1.0;
    int R = -1;
    int n = -1;
    int m = -1;
    long long seed = -1;
    std::string out;
};

void apply(finsler::io::RunConfig& cfg, const Overrides& o) {
    if (o.h > 0.0) cfg.h = o.h;
    if (o.R > 0) cfg.stencil_radius = o.R;
    if (o.n > 0) cfg.n = o.n;
    if (o.m > 0) cfg.m = o.m;
    if (o.seed >= 0) cfg.seed = static_cast<unsigned long long>(o.seed);
    if (!o.out.empty()) cfg.out_dir = o.out;
    // overrides enter the embedded config so certificates stay self-describing
    cfg.raw["mesh"] = {{"h", cfg.h}, {"R", cfg.stencil_radius}};
    cfg.raw["n"] = cfg.n;
    cfg.raw["m"] = cfg.m;
    cfg.raw["seed"] = cfg.seed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finsler disc toolkit: areas, boundary distances, filling bounds"};
    app.require_subcommand(1);

    std::string config_path;
    std::string render_what = "indicatrices";
    Overrides ov;

    // the resolution flag --h needs the short help flag out of the way
    app.set_help_flag("--help", "print help");

    auto add_common = [&](CLI::App* sub) {
        sub->set_help_flag("--help", "print help");
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--h", ov.h, "mesh resolution override");
        sub->add_option("--R", ov.R, "stencil radius override");
        sub->add_option("--n", ov.n, "boundary sample count override");
        sub->add_option("--m", ov.m, "sphere polygon count override");
        sub->add_option("--seed", ov.seed, "RNG seed override");
        sub->add_option("--out", ov.out, "output directory override");
    };

    auto* area = app.add_subcommand("area", "Holmes-Thompson (and Busemann) area");
    auto* distance = app.add_subcommand("distance", "boundary distance matrix");
    auto* lowerbound = app.add_subcommand("lowerbound", "certified area lower bound");
    auto* verify = app.add_subcommand("verify", "filling verification for a metric pair");
    auto* pu = app.add_subcommand("pu", "projective-plane systolic ratio");
    auto* render = app.add_subcommand("render", "SVG figures");
    for (auto* sub : {area, distance, lowerbound, verify, pu, render}) add_common(sub);
    render->add_option("--what", render_what, "indicatrices|geodesics|hulls|traces");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        finsler::io::RunConfig cfg = finsler::io::load_config(config_path);
        apply(cfg, ov);
        if (render->parsed()) cfg.render_what = render_what;
        if (area->parsed()) return finsler::io::cmd_area(cfg);
        if (distance->parsed()) return finsler::io::cmd_distance(cfg);
        if (lowerbound->parsed()) return finsler::io::cmd_lowerbound(cfg);
        if (verify->parsed()) return finsler::io::cmd_verify(cfg);
        if (pu->parsed()) return finsler::io::cmd_pu(cfg);
        if (render->parsed()) return finsler::io::cmd_render(cfg);
        return 1;
    } catch (const finsler::io::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    }
}
