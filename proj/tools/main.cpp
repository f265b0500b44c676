#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "conewidth/acceptance.hpp"
#include "conewidth/analysis.hpp"
#include "conewidth/config.hpp"
#include "conewidth/generators.hpp"
#include "conewidth/io.hpp"
#include "conewidth/theorems.hpp"

using namespace conewidth;

namespace {

// Exit codes: 0 pass, 1 assertion/threshold failure, 2 usage/input error.
constexpr int kFail = 1;
constexpr int kUsage = 2;

const std::vector<std::string> kKnownKeys = {
    "grid.h",          "grid.padding",      "step.s_max",
    "cone.axis",       "cone.aperture",     "width.radii",
    "pipeline.eps",    "pipeline.stages",   "pipeline.i_max",
    "pipeline.width_threshold",             "pipeline.width_mode",
    "pipeline.k_max_bumps",                 "pipeline.bump_radius",
    "pipeline.staircase_levels",            "pipeline.staircase_distinct_cap",
    "pipeline.theorem9_max_bumps",          "pipeline.lemma1_radii",
    "pipeline.check_radii",                 "analysis.slack_gap",
    "analysis.slack_residual",              "analysis.j_min",
    "analysis.j_max",                       "analysis.ball_samples",
    "gen.kind",        "gen.depth",         "gen.ratio",
    "gen.y_samples",   "gen.k_max",         "gen.samples",
    "gen.lines",       "gen.eps",           "io.out",
};

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    RunConfig cfg = path.empty() ? RunConfig() : RunConfig::from_file(path);
    for (const std::string& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::runtime_error("override '" + kv + "' has no '='");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate(kKnownKeys);
    return cfg;
}

Vec parse_axis(const std::string& s) {
    double ax = 0, ay = 0;
    if (std::sscanf(s.c_str(), "%lf,%lf", &ax, &ay) != 2)
        throw std::runtime_error("axis must be 'x,y'");
    return Vec{ax, ay};
}

PipelineConfig pipeline_config(const RunConfig& cfg) {
    PipelineConfig pc;
    pc.s_max = cfg.get_int("step.s_max", pc.s_max);
    pc.width_threshold = cfg.get_double("pipeline.width_threshold", pc.width_threshold);
    pc.strict_width = cfg.get_string("pipeline.width_mode", "best-effort") == "strict";
    pc.k_max_bumps = cfg.get_int("pipeline.k_max_bumps", pc.k_max_bumps);
    pc.bump_radius = cfg.get_double("pipeline.bump_radius", pc.bump_radius);
    pc.staircase_phi_levels = cfg.get_int("pipeline.staircase_levels", pc.staircase_phi_levels);
    pc.staircase_distinct_cap =
        cfg.get_int("pipeline.staircase_distinct_cap", pc.staircase_distinct_cap);
    pc.theorem9_max_bumps = cfg.get_int("pipeline.theorem9_max_bumps", pc.theorem9_max_bumps);
    pc.lemma1_radii_cells = cfg.get_doubles("pipeline.lemma1_radii", pc.lemma1_radii_cells);
    pc.check_radii_cells = cfg.get_doubles("pipeline.check_radii", pc.check_radii_cells);
    return pc;
}

int cmd_gen_set(const RunConfig& cfg, const std::string& out) {
    std::string kind = cfg.get_string("gen.kind", "");
    if (kind == "four-corner") {
        PointCloud E = gen_four_corner_cantor(cfg.get_int("gen.depth", 3));
        write_pointcloud_csv(E, out);
        std::cout << "wrote " << E.size() << " points to " << out << "\n";
    } else if (kind == "cantor-product") {
        PointCloud E = gen_cantor_product(cfg.get_double("gen.ratio", 1.0 / 3.0),
                                          cfg.get_int("gen.depth", 3),
                                          cfg.get_int("gen.y_samples", 65));
        write_pointcloud_csv(E, out);
        std::cout << "wrote " << E.size() << " points to " << out << "\n";
    } else if (kind == "graph-family") {
        PointCloud E = gen_graph_family(cfg.get_int("gen.k_max", 4), cfg.get_int("gen.samples", 64));
        write_pointcloud_csv(E, out);
        std::cout << "wrote " << E.size() << " points to " << out << "\n";
    } else if (kind == "line-neighborhood") {
        GridDomain dom = GridDomain::cover(Vec{0.0, 0.0}, Vec{1.0, 1.0},
                                           cfg.get_double("grid.h", 1.0 / 128),
                                           cfg.get_int("grid.padding", 4));
        Cone cone(parse_axis(cfg.get_string("cone.axis", "0,1")),
                  cfg.get_double("cone.aperture", 0.6));
        auto res = gen_line_neighborhood_set(cfg.get_int("gen.lines", 8),
                                             cfg.get_double("gen.eps", 0.05), cone, dom);
        write_pbm(res.set, out);
        std::cout << "wrote " << res.set.count() << " cells (" << res.kept_lines
                  << " lines kept) to " << out << "\n";
    } else {
        std::cerr << "gen-set: unknown kind '" << kind << "'\n";
        return kUsage;
    }
    return 0;
}

int cmd_width(const RunConfig& cfg, const std::string& set_path, const std::string& pbm_path,
              bool oracle, const std::string& out) {
    Cone cone(parse_axis(cfg.get_string("cone.axis", "1,0")), cfg.get_double("cone.aperture", 0.5));
    int s_max = cfg.get_int("step.s_max", 3);
    WidthResult result;
    if (!pbm_path.empty()) {
        GridSet G = read_pbm(pbm_path);
        result = width_open(G, cone, s_max);
        if (oracle) {
            double bf = width_brute_force(G, cone, s_max);
            if (bf != result.value) {
                std::cerr << "oracle mismatch: dp " << fmt(result.value) << " bf " << fmt(bf)
                          << "\n";
                return kFail;
            }
        }
    } else {
        PointCloud E = read_pointcloud_csv(set_path);
        double h = cfg.get_double("grid.h", 1.0 / 128);
        int padding = cfg.get_int("grid.padding", 4);
        GridDomain dom = GridDomain::cover(E.box_lo(), E.box_hi(), h, padding);
        std::vector<double> radii = cfg.get_doubles("width.radii", {0.0625, 0.03125, 0.015625});
        WidthOfSet w = width_of_set(E, cone, radii, s_max, dom);
        std::ostringstream os;
        os << "# resolved config\n" << cfg.dump();
        for (const auto& e : w.entries)
            os << "radius " << fmt(e.radius) << " value " << fmt(e.value) << " under_resolved "
               << (e.under_resolved ? 1 : 0) << "\n";
        os << "value = " << fmt(w.value) << "\n";
        if (out.empty()) std::cout << os.str();
        else {
            std::ofstream f(out);
            f << os.str();
        }
        return 0;
    }
    std::ostringstream os;
    os << "# resolved config\n" << cfg.dump();
    write_width_result(result, out.empty() ? "width_result.txt" : out);
    std::cout << "value = " << fmt(result.value) << "\n";
    return 0;
}

int cmd_build(const RunConfig& cfg, const std::string& pipeline, const std::string& set_path,
              const std::string& out) {
    PointCloud E = read_pointcloud_csv(set_path);
    double h = cfg.get_double("grid.h", 1.0 / 256);
    int padding = cfg.get_int("grid.padding", 8);
    PipelineConfig pc = pipeline_config(cfg);
    std::string extra = "# resolved config\n" + cfg.dump();
    if (pipeline == "theorem4") {
        GridDomain dom = GridDomain::cover(E.box_lo(), E.box_hi(), h, padding);
        ScalarField omega(dom, 1.0);
        Theorem4Result r =
            theorem4_build(E, cfg.get_double("pipeline.eps", 0.3), omega,
                           cfg.get_int("pipeline.stages", 3), cfg.get_int("pipeline.i_max", 4), pc);
        std::ostringstream man;
        man << "pipeline = theorem4\n"
            << "lip_measured = " << fmt(r.lip_measured) << "\n"
            << "u_max = " << fmt(r.u_max) << "\n"
            << "tolerance = " << fmt(r.tolerance) << "\n"
            << extra;
        write_trace(r.trace, out, man.str());
        // u at samples
        std::ofstream ucsv(out + "/u.csv");
        ucsv << "x,y,ux,uy\n";
        for (std::size_t p = 0; p < r.sample_points.size(); ++p)
            ucsv << fmt(r.sample_points[p][0]) << "," << fmt(r.sample_points[p][1]) << ","
                 << fmt(r.u[p][0]) << "," << fmt(r.u[p][1]) << "\n";
        std::cout << "lip = " << fmt(r.lip_measured) << " u_max = " << fmt(r.u_max) << "\n";
        bool ok = !r.trace.aborted && r.lip_measured <= 1.0 + r.eps + r.tolerance &&
                  r.u_max <= r.eps;
        return ok ? 0 : kFail;
    }
    if (pipeline == "theorem9") {
        Theorem9Result r = theorem9_build(E, cfg.get_int("pipeline.stages", 4), h, padding, pc);
        double lip = r.trace.final_f().lipschitz();
        int K = cfg.get_int("pipeline.stages", 4);
        double sigma_min = std::pow(2.0, -(K + 1)) / 24.0;
        double tol = pc.tolerance(h, tau_of_sigma(sigma_min));
        std::ostringstream man;
        man << "pipeline = theorem9\n"
            << "lip_measured = " << fmt(lip) << "\n"
            << "lip_bound = " << fmt(1.0 - std::pow(2.0, -(K + 1)) + tol) << "\n"
            << extra;
        write_trace(r.trace, out, man.str());
        std::cout << "lip = " << fmt(lip) << "\n";
        bool ok = !r.trace.aborted && lip <= 1.0 - std::pow(2.0, -(K + 1)) + tol;
        return ok ? 0 : kFail;
    }
    std::cerr << "build: unknown pipeline '" << pipeline << "'\n";
    return kUsage;
}

int cmd_analyze(const RunConfig& cfg, const std::string& trace_dir, const std::string& set_path,
                const std::string& out) {
    PointCloud E = read_pointcloud_csv(set_path);
    // analyze the final field of the trace
    std::ifstream man(trace_dir + "/manifest.txt");
    if (!man.good()) {
        std::cerr << "analyze: missing trace manifest in " << trace_dir << "\n";
        return kUsage;
    }
    int stages = 0;
    std::string line;
    while (std::getline(man, line)) {
        if (line.rfind("stages = ", 0) == 0) stages = std::stoi(line.substr(9));
    }
    char name[32];
    std::snprintf(name, sizeof(name), "/f_%03d.cwf", stages);
    ScalarField f = read_field(trace_dir + name);

    make_directory(out);
    int j_min = cfg.get_int("analysis.j_min", 3), j_max = cfg.get_int("analysis.j_max", 10);
    double slack_gap = cfg.get_double("analysis.slack_gap", 0.2);
    double slack_res = cfg.get_double("analysis.slack_residual", 0.1);
    int ball_samples = cfg.get_int("analysis.ball_samples", 64);

    // probe scales are clamped per point to the available window margin
    const GridDomain& fdom = f.domain();
    auto margin_of = [&](const Vec& x) {
        double m = 1e300;
        for (std::size_t i = 0; i < fdom.dim(); ++i) {
            m = std::min(m, x[i] - fdom.box_lo()[i]);
            m = std::min(m, fdom.box_hi()[i] - x[i]);
        }
        return m;
    };

    VectorField grad = gradient_field(f);
    std::ofstream res_csv(out + "/residuals.csv");
    res_csv << "# resolved config\n";
    res_csv << "x,y,min_residual\n";
    std::size_t res_pass = 0, res_total = 0;
    for (std::size_t p = 0; p < E.size(); ++p) {
        double cap = 0.99 * margin_of(E.point(p)) / std::sqrt(2.0);
        std::vector<double> radii;
        for (int j = j_min; j <= std::min(j_max, 8); ++j)
            if (std::pow(2.0, -j) <= cap) radii.push_back(std::pow(2.0, -j));
        if (radii.empty()) continue;  // point too close to the window edge
        Vec target = grad.eval(E.point(p));
        ResidualProfile prof = residual_profile(f, E.point(p), target, radii, ball_samples);
        res_csv << fmt(E.point(p)[0]) << "," << fmt(E.point(p)[1]) << ","
                << fmt(prof.min_residual) << "\n";
        if (prof.min_residual <= slack_res) ++res_pass;
        ++res_total;
    }
    double res_rate = res_total ? double(res_pass) / res_total : 1.0;

    // gap probes need x + 2^-j y inside the window: raise j_min per point
    PointCloud E_gap(E.dim(), E.box_lo(), E.box_hi());
    for (std::size_t p = 0; p < E.size(); ++p) {
        if (margin_of(E.point(p)) > std::pow(2.0, -j_min) * std::sqrt(2.0)) {
            if (E.normal(p)) E_gap.add(E.point(p), *E.normal(p));
            else E_gap.add(E.point(p));
        }
    }
    GapReport gap = gap_report(f, E_gap, {Vec{1.0, 0.0}, Vec{0.0, 1.0}}, j_min, j_max, slack_gap);
    std::ofstream gap_csv(out + "/gap.csv");
    gap_csv << "sample,yx,yy,gap,bound,pass\n";
    for (const GapRow& r : gap.rows)
        gap_csv << r.sample << "," << fmt(r.y[0]) << "," << fmt(r.y[1]) << "," << fmt(r.gap) << ","
                << fmt(r.bound) << "," << (r.pass ? 1 : 0) << "\n";

    std::ofstream summary(out + "/summary.txt");
    summary << "# resolved config\n" << cfg.dump();
    summary << "residual_pass_rate = " << fmt(res_rate) << "\n";
    summary << "gap_pass_rate = " << fmt(gap.pass_rate) << "\n";
    summary << "lip = " << fmt(f.lipschitz()) << "\n";
    std::cout << "residual_pass_rate = " << fmt(res_rate)
              << " gap_pass_rate = " << fmt(gap.pass_rate) << "\n";
    double need_res = cfg.get_double("analysis.slack_residual", 0.1) >= 0 ? 0.9 : 0.9;
    return (res_rate >= need_res && gap.pass_rate >= 0.9) ? 0 : kFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cone-width toolkit: widths, constructions, certificates"};
    app.require_subcommand(1);
    app.fallthrough();  // --config / --set-key may follow the subcommand

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "flat key = value config file");
    app.add_option("--set-key", overrides, "override config entries (key=value)");

    auto* gen = app.add_subcommand("gen-set", "generate a point set or grid set");
    std::string gen_kind, gen_out = "set.csv";
    int gen_depth = 3, gen_lines = 8, gen_kmax = 4, gen_samples = 64, gen_ysamples = 65;
    double gen_ratio = 1.0 / 3.0, gen_eps = 0.05, gen_aperture = 0.6;
    std::string gen_axis = "0,1";
    gen->add_option("--kind", gen_kind, "four-corner|cantor-product|graph-family|line-neighborhood")
        ->required();
    gen->add_option("--depth", gen_depth);
    gen->add_option("--ratio", gen_ratio);
    gen->add_option("--y-samples", gen_ysamples);
    gen->add_option("--k-max", gen_kmax);
    gen->add_option("--samples", gen_samples);
    gen->add_option("--lines", gen_lines);
    gen->add_option("--eps", gen_eps);
    gen->add_option("--axis", gen_axis);
    gen->add_option("--aperture", gen_aperture);
    gen->add_option("--out", gen_out);

    auto* width = app.add_subcommand("width", "compute a width");
    std::string w_set, w_pbm, w_out, w_axis = "1,0";
    double w_aperture = 0.5;
    bool w_oracle = false;
    width->add_option("--set", w_set, "point cloud CSV");
    width->add_option("--pbm", w_pbm, "grid set PBM");
    width->add_option("--axis", w_axis);
    width->add_option("--aperture", w_aperture);
    width->add_flag("--oracle", w_oracle, "cross-check against the exhaustive oracle");
    width->add_option("--out", w_out);

    auto* build = app.add_subcommand("build", "run a construction pipeline");
    std::string b_pipeline, b_set, b_out = "trace";
    double b_eps = 0.3;
    int b_stages = -1;
    build->add_option("--pipeline", b_pipeline, "theorem4|theorem9")->required();
    build->add_option("--set", b_set)->required();
    build->add_option("--eps", b_eps);
    build->add_option("--stages", b_stages);
    build->add_option("--out", b_out);

    auto* analyze = app.add_subcommand("analyze", "run analysis certificates on a trace");
    std::string a_trace, a_set, a_out = "analysis";
    analyze->add_option("--trace", a_trace)->required();
    analyze->add_option("--set", a_set)->required();
    analyze->add_option("--out", a_out);

    auto* verify = app.add_subcommand("verify", "run the acceptance suite");
    std::string v_out = "acceptance_out";
    bool v_quick = false;
    verify->add_option("--out", v_out);
    verify->add_flag("--quick", v_quick, "skip the slow pipeline criteria (debug aid)");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(config_path, overrides);
        // the only environment override: thread count (execution is currently
        // single-threaded and deterministic; the value is validated and embedded)
        if (const char* tc = std::getenv("CONEWIDTH_THREADS")) {
            int threads = std::atoi(tc);
            if (threads < 1) {
                std::cerr << "error: CONEWIDTH_THREADS must be a positive integer\n";
                return kUsage;
            }
            cfg.note_resolved("env.threads", std::to_string(threads));
        }
        if (gen->parsed()) {
            cfg.set("gen.kind", gen_kind);
            if (gen->count("--depth")) cfg.set("gen.depth", std::to_string(gen_depth));
            if (gen->count("--ratio")) cfg.set("gen.ratio", fmt(gen_ratio));
            if (gen->count("--y-samples")) cfg.set("gen.y_samples", std::to_string(gen_ysamples));
            if (gen->count("--k-max")) cfg.set("gen.k_max", std::to_string(gen_kmax));
            if (gen->count("--samples")) cfg.set("gen.samples", std::to_string(gen_samples));
            if (gen->count("--lines")) cfg.set("gen.lines", std::to_string(gen_lines));
            if (gen->count("--eps")) cfg.set("gen.eps", fmt(gen_eps));
            if (gen->count("--axis")) cfg.set("cone.axis", gen_axis);
            if (gen->count("--aperture")) cfg.set("cone.aperture", fmt(gen_aperture));
            return cmd_gen_set(cfg, gen_out);
        }
        if (width->parsed()) {
            if (width->count("--axis")) cfg.set("cone.axis", w_axis);
            if (width->count("--aperture")) cfg.set("cone.aperture", fmt(w_aperture));
            if (w_set.empty() && w_pbm.empty()) {
                std::cerr << "width: need --set or --pbm\n";
                return kUsage;
            }
            return cmd_width(cfg, w_set, w_pbm, w_oracle, w_out);
        }
        if (build->parsed()) {
            if (build->count("--eps")) cfg.set("pipeline.eps", fmt(b_eps));
            if (b_stages >= 0) cfg.set("pipeline.stages", std::to_string(b_stages));
            return cmd_build(cfg, b_pipeline, b_set, b_out);
        }
        if (analyze->parsed()) return cmd_analyze(cfg, a_trace, a_set, a_out);
        if (verify->parsed()) {
            AcceptanceOptions opts;
            opts.out_dir = v_out;
            opts.skip_slow = v_quick;
            return run_acceptance(std::cout, opts) == 0 ? 0 : kFail;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
