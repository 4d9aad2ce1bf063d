#include "tlconv/cli.hpp"

#include "tlconv/eqconv.hpp"
#include "tlconv/filter.hpp"
#include "tlconv/group.hpp"
#include "tlconv/io.hpp"
#include "tlconv/lab.hpp"
#include "tlconv/symmetry.hpp"
#include "tlconv/trainer.hpp"
#include "tlconv/transforms.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>

namespace fs = std::filesystem;
using nlohmann::json;

namespace tlconv {

ConfigReader::ConfigReader(json j, std::string scope) : j_(std::move(j)), scope_(std::move(scope)) {
    if (j_.is_null()) j_ = json::object();
    if (!j_.is_object()) throw ConfigError("config " + (scope_.empty() ? std::string("root") : scope_) + " must be a JSON object");
}

ConfigReader ConfigReader::child(const std::string& key) {
    seen_.insert(key);
    return ConfigReader(j_.contains(key) ? j_.at(key) : json::object(), scope_ + key + ".");
}

void ConfigReader::finish() const {
    for (const auto& item : j_.items())
        if (!seen_.count(item.key())) throw ConfigError("unknown config key '" + scope_ + item.key() + "'");
}

namespace {

struct Context {
    ConfigReader cfg;
    fs::path out;
    std::optional<std::uint64_t> seed;
    int threads = 1;

    std::uint64_t seed_or(std::uint64_t fallback) {
        const auto s = cfg.get<std::uint64_t>("seed", fallback);
        return seed.value_or(s);
    }
    fs::path file(const std::string& name) const { return out / name; }
};

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

TransformParams read_w(ConfigReader& cfg, const std::string& key, TransformParams fallback) {
    const auto arr = cfg.get<std::vector<double>>(key, {fallback.alpha, fallback.sx, fallback.sy});
    if (arr.size() != 3) throw ConfigError("config key '" + key + "' must hold [alpha, s_x, s_y]");
    if (!(arr[1] > 0.0) || !(arr[2] > 0.0)) throw ConfigError("config key '" + key + "' needs positive scales");
    return {arr[0], arr[1], arr[2]};
}

json w_json(const TransformParams& w) { return json::array({w.alpha, w.sx, w.sy}); }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Rows are joined with commas; the first line names the schema.
class Csv {
public:
    Csv(std::string schema, std::vector<std::string> columns) : columns_(columns.size()) {
        text_ = "#schema=" + schema + "\n";
        for (std::size_t i = 0; i < columns.size(); ++i) text_ += (i ? "," : "") + columns[i];
        text_ += "\n";
    }
    void row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_) throw std::logic_error("csv row width mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
        text_ += "\n";
    }
    void save(const fs::path& path) const { write_text(path, text_); }

private:
    std::size_t columns_;
    std::string text_;
};

const std::vector<std::string> kLabColumns{"kind",   "t",      "k_tilde",   "h",          "n",    "w_alpha", "w_sx",
                                           "w_sy",   "dist_w", "error_inf", "error_mean", "mode", "series"};

std::vector<std::string> lab_cells(const EquivarianceReport& r, int series) {
    return {r.kind,          std::to_string(r.t), std::to_string(r.k_tilde), num(r.h),          std::to_string(r.n),
            num(r.w.alpha),  num(r.w.sx),         num(r.w.sy),               num(r.dist_w()),   num(r.error_inf),
            num(r.error_mean), to_string(r.mode), std::to_string(series)};
}

MixtureBounds read_mixture(ConfigReader cfg, MixtureBounds m) {
    m.extent = cfg.get("extent", m.extent);
    m.sigma_min = cfg.get("sigma_min", m.sigma_min);
    m.sigma_max = cfg.get("sigma_max", m.sigma_max);
    m.amplitude = cfg.get("amplitude", m.amplitude);
    cfg.finish();
    return m;
}

SweepSetup read_setup(ConfigReader& cfg, SweepSetup s, Context& ctx) {
    s.extent = cfg.get("extent", s.extent);
    s.t = cfg.get("t", s.t);
    s.k_tilde = cfg.get("k_tilde", s.k_tilde);
    s.w_hat = read_w(cfg, "w_hat", s.w_hat);
    s.p = cfg.get("p", s.p);
    s.q = cfg.get("q", s.q);
    s.n0 = cfg.get("n0", s.n0);
    s.fit_stretch = cfg.get("fit_stretch", s.fit_stretch);
    s.bumps = cfg.get("bumps", s.bumps);
    s.mixture = read_mixture(cfg.child("mixture"), s.mixture);
    s.seed = ctx.seed.value_or(cfg.get("seed", s.seed));
    s.threads = ctx.threads;
    return s;
}

SweepHConfig read_sweep_h(ConfigReader cfg, Context& ctx) {
    SweepHConfig c;
    c.setup = read_setup(cfg, c.setup, ctx);
    c.ns = cfg.get("ns", c.ns);
    cfg.finish();
    return c;
}

SweepWConfig read_sweep_w(ConfigReader cfg, Context& ctx) {
    SweepWConfig c;
    c.setup.q = 1;
    c.setup = read_setup(cfg, c.setup, ctx);
    c.n = cfg.get("n", c.n);
    c.eps = cfg.get("eps", c.eps);
    c.directions = cfg.get("directions", c.directions);
    cfg.finish();
    return c;
}

json certify_h(const SweepHResult& res, const SweepHConfig& c, Csv* csv, int& violations) {
    json rows = json::array();
    for (const SweepRow& row : res.table.rows) {
        const Sampling s = Sampling::refined(res.filter.spec, c.setup.refine_for(row.report.n));
        const Certificate cert = bound_certificate(row.report, res.image.bounds(), filter_bounds(res.filter), s,
                                                   LayerKind::input);
        if (!cert.ok) ++violations;
        if (csv) csv->row({"sweep_h", "-1", num(row.x), num(cert.measured), num(cert.bound), cert.ok ? "1" : "0"});
        rows.push_back({{"h", row.x}, {"measured", cert.measured}, {"bound", cert.bound}, {"ok", cert.ok}});
    }
    return rows;
}

json certify_w(const SweepWResult& res, const SweepWConfig& c, Csv* csv, int& violations) {
    json rows = json::array();
    const Sampling s = Sampling::refined(res.filter.spec, c.setup.refine_for(c.n));
    for (std::size_t d = 0; d < res.tables.size(); ++d)
        for (const SweepRow& row : res.tables[d].rows) {
            const Certificate cert = bound_certificate(row.report, res.image.bounds(), filter_bounds(res.filter), s,
                                                       LayerKind::input);
            if (!cert.ok) ++violations;
            if (csv)
                csv->row({"sweep_w", std::to_string(d), num(row.x), num(cert.measured), num(cert.bound),
                          cert.ok ? "1" : "0"});
            rows.push_back({{"direction", d}, {"eps", row.x}, {"measured", cert.measured}, {"bound", cert.bound},
                            {"ok", cert.ok}});
        }
    return rows;
}

int cmd_closure(Context& ctx) {
    const int t = ctx.cfg.get("t", 4);
    const TransformParams w = read_w(ctx.cfg, "w", TransformParams::identity());
    const double tol = ctx.cfg.get("tol", 1e-12);
    ctx.cfg.finish();
    const GroupSpec spec(t, w);
    const ClosureReport rep = verify_closure(spec, tol);
    json elements = json::array();
    for (const Mat2& m : group_elements(spec)) elements.push_back(m.to_array());
    write_json(ctx.file("closure.json"), {{"t", t},
                                          {"w", w_json(spec.params())},
                                          {"tol", tol},
                                          {"ok", rep.ok},
                                          {"max_deviation", rep.max_deviation},
                                          {"worst_pair", {rep.worst_i, rep.worst_j}},
                                          {"elements", elements}});
    if (!spec.in_recommended_range()) std::cerr << "warning: scales outside [0.5, 1.5]\n";
    if (!rep.ok) {
        std::cerr << "closure violated: deviation " << rep.max_deviation << " at pair (" << rep.worst_i << ", "
                  << rep.worst_j << ")\n";
        return kExitCheckFailed;
    }
    return kExitOk;
}

int cmd_gen_filters(Context& ctx) {
    const int t = ctx.cfg.get("t", 4);
    const TransformParams w = read_w(ctx.cfg, "w", TransformParams::identity());
    const int p = ctx.cfg.get("p", 5);
    const double h = ctx.cfg.get("h", 1.0);
    const int refine = ctx.cfg.get("refine", 1);
    const std::string role = ctx.cfg.get<std::string>("role", "input");
    const std::uint64_t seed = ctx.seed_or(1);
    ctx.cfg.finish();
    const GroupSpec group(t, w);
    const FilterSpec spec(p, h);
    const Sampling s = Sampling::refined(spec, refine);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto random_v = [&] {
        std::vector<double> v(spec.num_nodes());
        for (double& x : v) x = normal(rng);
        return v;
    };
    json doc;
    if (role == "input" || role == "output") {
        const ParamFilter pf(spec, random_v(), role == "input" ? FilterRole::input : FilterRole::output);
        const FilterStack st = role == "input" ? discretize_input(pf, group, s) : discretize_output(pf, group, s);
        doc = stack_to_json(st, spec, group, role.c_str());
        doc["v"] = pf.v;
    } else if (role == "intermediate") {
        std::vector<ParamFilter> pfs;
        json vs = json::array();
        for (int a = 0; a < t; ++a) {
            pfs.emplace_back(spec, random_v(), FilterRole::intermediate, a);
            vs.push_back(pfs.back().v);
        }
        doc = stack_to_json(discretize_mid(pfs, group, s), spec, group);
        doc["v"] = vs;
    } else {
        throw ConfigError("config key 'role' must be input, intermediate or output");
    }
    write_json(ctx.file("filters.json"), doc);
    return kExitOk;
}

int cmd_check_eq(Context& ctx) {
    NetworkShape shape;
    shape.t = ctx.cfg.get("t", 4);
    shape.w = read_w(ctx.cfg, "w", TransformParams::identity());
    const TransformParams w_hat = ctx.cfg.has("w_hat") ? read_w(ctx.cfg, "w_hat", shape.w) : shape.w;
    shape.channels = ctx.cfg.get("channels", std::vector<int>{1, 2, 2, 1});
    const int p = ctx.cfg.get("p", 5);
    const int n = ctx.cfg.get("n", 48);
    const double h = ctx.cfg.get("h", 1.0 / 16.0);
    const int refine = ctx.cfg.get("refine", 1);
    const double tol = ctx.cfg.get("tol", 1e-9);
    std::vector<int> ks = ctx.cfg.get("k_tilde", std::vector<int>{});
    const std::optional<int> crop = ctx.cfg.has("crop") ? std::optional<int>(ctx.cfg.get("crop", 0)) : std::nullopt;
    const MixtureBounds mixture = read_mixture(ctx.cfg.child("mixture"), {0.6, 0.1, 0.25, 1.0});
    const int bumps = ctx.cfg.get("bumps", 6);
    const std::uint64_t seed = ctx.seed_or(1);
    ctx.cfg.finish();
    shape.filter = FilterSpec(p, h);
    if (ks.empty())
        for (int k = 1; k < shape.t; ++k) ks.push_back(k);

    const EqNetwork net = make_random_network(shape, seed);
    const AnalyticImage r = make_gaussian_mixture(seed + 1, bumps, mixture);
    Csv csv("lab/1", kLabColumns);
    double worst = 0.0;
    for (int k : ks) {
        const TransformSpec ts{shape.t, k, w_hat, Interp::analytic};
        const LayerProbe probe{LayerKind::input, {net.layers.front().filters.front()}, shape.w, refine};
        const auto layer = layer_error(probe, {r}, ts, n, h, crop);
        const auto whole = network_error(net, r, ts, n, h, refine, crop);
        csv.row(lab_cells(layer, -1));
        csv.row(lab_cells(whole, -1));
        worst = std::max({worst, layer.error_inf, whole.error_inf});
    }
    csv.save(ctx.file("check_eq.csv"));
    write_json(ctx.file("check_eq.json"), {{"max_error", worst}, {"tol", tol}, {"ok", worst <= tol},
                                           {"param_count", param_count(net)},
                                           {"plain_equiv_count", plain_equiv_count(net)}});
    if (worst > tol) {
        std::cerr << "equivariance error " << worst << " exceeds " << tol << "\n";
        return kExitCheckFailed;
    }
    return kExitOk;
}

int cmd_sweep_h(Context& ctx) {
    const SweepHConfig c = read_sweep_h(std::move(ctx.cfg), ctx);
    const SweepHResult res = sweep_h(c);
    Csv csv("lab/1", kLabColumns);
    for (const SweepRow& row : res.table.rows) csv.row(lab_cells(row.report, -1));
    csv.save(ctx.file("sweep_h.csv"));
    int violations = 0;
    const json cert = certify_h(res, c, nullptr, violations);
    write_json(ctx.file("sweep_h.json"), {{"slope", res.table.slope},
                                          {"intercept", res.table.intercept},
                                          {"residual", res.table.residual},
                                          {"monotone", res.table.monotone},
                                          {"certificate", cert},
                                          {"image", to_json(res.image)},
                                          {"filter_v", res.filter.v}});
    if (!res.table.monotone) std::cerr << "warning: errors are not strictly decreasing in n\n";
    return kExitOk;
}

int cmd_sweep_w(Context& ctx) {
    const SweepWConfig c = read_sweep_w(std::move(ctx.cfg), ctx);
    const SweepWResult res = sweep_w(c);
    Csv csv("lab/1", kLabColumns);
    json checks = json::array();
    for (std::size_t d = 0; d < res.tables.size(); ++d) {
        for (const SweepRow& row : res.tables[d].rows) csv.row(lab_cells(row.report, static_cast<int>(d)));
        const SweepWCheck chk = check_sweep_w(res.tables[d]);
        checks.push_back({{"direction", res.directions[d]},
                          {"min_at_zero", chk.min_at_zero},
                          {"nondecreasing", chk.nondecreasing},
                          {"ratios", chk.ratios},
                          {"ratios_ok", chk.ratios_ok},
                          {"slope", res.tables[d].slope}});
    }
    csv.save(ctx.file("sweep_w.csv"));
    int violations = 0;
    write_json(ctx.file("sweep_w.json"), {{"directions", checks}, {"certificate", certify_w(res, c, nullptr, violations)}});
    return kExitOk;
}

int cmd_certificate(Context& ctx) {
    const SweepHConfig ch = read_sweep_h(ctx.cfg.child("sweep_h"), ctx);
    const SweepWConfig cw = read_sweep_w(ctx.cfg.child("sweep_w"), ctx);
    ctx.cfg.finish();
    Csv csv("certificate/1", {"sweep", "series", "x", "measured", "bound", "ok"});
    int violations = 0;
    const json h_rows = certify_h(sweep_h(ch), ch, &csv, violations);
    const json w_rows = certify_w(sweep_w(cw), cw, &csv, violations);
    csv.save(ctx.file("certificate.csv"));
    write_json(ctx.file("certificate.json"), {{"violations", violations}, {"sweep_h", h_rows}, {"sweep_w", w_rows}});
    if (violations > 0) {
        std::cerr << violations << " certificate violation(s)\n";
        return kExitCheckFailed;
    }
    return kExitOk;
}

Dataset read_dataset(ConfigReader cfg, Context& ctx) {
    const auto images = cfg.get("images", std::vector<std::string>{});
    const double h = cfg.get("h", 1.0 / 16.0);
    RingConfig rc;
    rc.n = cfg.get("n", rc.n);
    rc.h = h;
    rc.rings = cfg.get("rings", rc.rings);
    rc.center_extent = cfg.get("center_extent", rc.center_extent);
    rc.radius_min = cfg.get("radius_min", rc.radius_min);
    rc.radius_max = cfg.get("radius_max", rc.radius_max);
    rc.width_min = cfg.get("width_min", rc.width_min);
    rc.width_max = cfg.get("width_max", rc.width_max);
    const TransformParams w_star = read_w(cfg, "w_star", {0.4, 1.25, 0.8});
    const int count = cfg.get("count", 5);
    const std::uint64_t seed = ctx.seed.value_or(cfg.get<std::uint64_t>("seed", 11));
    cfg.finish();
    if (!images.empty()) {
        Dataset d;
        d.id = "pgm";
        for (const std::string& path : images) d.images.push_back(read_pgm(path, h));
        d.validate();
        return d;
    }
    return make_warped_dataset(w_star, seed, count, rc);
}

FeatureOptions read_feature(ConfigReader& cfg) {
    FeatureOptions f;
    f.crop = cfg.get("crop", f.crop);
    f.scale = cfg.get("scale", f.scale);
    const std::string kernel = cfg.get<std::string>("kernel", "sobel");
    if (kernel != "sobel") throw ConfigError("config key 'kernel' supports only 'sobel'");
    return f;
}

void save_profile(const SymmetryProfile& prof, const fs::path& path) {
    Csv csv("profile/1", {"theta", "mean_feature"});
    for (std::size_t m = 0; m < prof.theta.size(); ++m) csv.row({num(prof.theta[m]), num(prof.mean_feature[m])});
    csv.save(path);
}

json histogram(const std::vector<double>& values, int bins) {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    std::vector<int> counts(bins, 0);
    const double width = (*hi - *lo) / bins;
    for (double v : values) {
        int b = width > 0.0 ? static_cast<int>((v - *lo) / width) : 0;
        counts[std::clamp(b, 0, bins - 1)]++;
    }
    return {{"lo", *lo}, {"hi", *hi}, {"counts", counts}};
}

int cmd_symmetry(Context& ctx) {
    const TransformParams w = read_w(ctx.cfg, "w", TransformParams::identity());
    const int angles = ctx.cfg.get("angles", 36);
    const int bins = ctx.cfg.get("bins", 12);
    const FeatureOptions feat = read_feature(ctx.cfg);
    const Dataset data = read_dataset(ctx.cfg.child("dataset"), ctx);
    ctx.cfg.finish();
    const SymmetryProfile prof = variance_over_group(data, w, angles, feat);
    save_profile(prof, ctx.file("profile.csv"));
    write_json(ctx.file("symmetry.json"), {{"w", w_json(w)},
                                           {"variance", prof.variance},
                                           {"dataset", data.id},
                                           {"images", data.images.size()},
                                           {"histogram", histogram(prof.mean_feature, bins)}});
    return kExitOk;
}

int cmd_fit_w(Context& ctx) {
    FitConfig fc;
    fc.grid = ctx.cfg.get("grid", fc.grid);
    fc.s_lo = ctx.cfg.get("s_lo", fc.s_lo);
    fc.s_hi = ctx.cfg.get("s_hi", fc.s_hi);
    fc.angles = ctx.cfg.get("angles", fc.angles);
    fc.max_iterations = ctx.cfg.get("max_iterations", fc.max_iterations);
    fc.simplex_tol = ctx.cfg.get("simplex_tol", fc.simplex_tol);
    fc.feature = read_feature(ctx.cfg);
    const Dataset data = read_dataset(ctx.cfg.child("dataset"), ctx);
    ctx.cfg.finish();
    const FitResult fit = fit_w(data, fc);
    save_profile(fit.profile, ctx.file("fit_profile.csv"));
    const GaugeView g = canonical_gauge(fit.w_hat);
    write_json(ctx.file("fit_w.json"), {{"w_hat", w_json(fit.w_hat)},
                                        {"variance", fit.profile.variance},
                                        {"grid_best", w_json(fit.grid_best)},
                                        {"grid_variance", fit.grid_variance},
                                        {"identity_variance", fit.identity_variance},
                                        {"flat", fit.flat},
                                        {"evaluations", fit.evaluations},
                                        {"gauge", {{"ratio", g.ratio}, {"alpha", g.alpha}}}});
    if (fit.flat) std::cerr << "warning: flat symmetry landscape, returning identity\n";
    return kExitOk;
}

DenoiseDataConfig read_denoise(ConfigReader cfg) {
    DenoiseDataConfig d;
    d.count = cfg.get("count", d.count);
    d.n = cfg.get("n", d.n);
    d.h = cfg.get("h", d.h);
    d.noise = cfg.get("noise", d.noise);
    d.bumps = cfg.get("bumps", d.bumps);
    d.mixture = read_mixture(cfg.child("mixture"), d.mixture);
    if (cfg.has("warp")) d.warp = read_w(cfg, "warp", TransformParams::identity());
    cfg.finish();
    return d;
}

int cmd_train_toy(Context& ctx) {
    TrainConfig tc;
    tc.steps = ctx.cfg.get("steps", tc.steps);
    tc.lr_v = ctx.cfg.get("lr_v", tc.lr_v);
    tc.lr_w = ctx.cfg.get("lr_w", 0.1 * tc.lr_v);
    tc.batch = ctx.cfg.get("batch", tc.batch);
    tc.crop = ctx.cfg.get("crop", tc.crop);
    tc.freeze_w = ctx.cfg.get("freeze_w", tc.freeze_w);
    const std::string path = ctx.cfg.get<std::string>("path", "learnable");
    if (path != "learnable" && path != "strict") throw ConfigError("config key 'path' must be learnable or strict");
    tc.path = path == "strict" ? FilterPath::strict : FilterPath::learnable;
    const TransformParams w0 = read_w(ctx.cfg, "w_init", TransformParams::identity());
    tc.seed = ctx.seed_or(tc.seed);
    const DenoiseDataConfig dc = read_denoise(ctx.cfg.child("data"));
    ctx.cfg.finish();

    const auto data = make_denoise_set(tc.seed + 1, dc);
    EqNetwork net = make_toy_network(tc.seed, dc.h, w0);
    TrainHistory hist;
    try {
        hist = train(tc, data, net);
    } catch (const std::runtime_error& e) {
        std::cerr << e.what() << "\n";
        return kExitCheckFailed;
    }
    Csv csv("history/1", {"step", "loss", "alpha", "sx", "sy"});
    for (std::size_t s = 0; s < hist.loss.size(); ++s)
        csv.row({std::to_string(s), num(hist.loss[s]), num(hist.w[s].alpha), num(hist.w[s].sx), num(hist.w[s].sy)});
    csv.save(ctx.file("history.csv"));
    json layers = json::array();
    for (const EqLayer& layer : net.layers) {
        json filters = json::array();
        for (const ParamFilter& pf : layer.filters) filters.push_back(pf.v);
        layers.push_back({{"kind", to_string(layer.kind)}, {"in", layer.in_channels}, {"out", layer.out_channels},
                          {"v", filters}});
    }
    json summary{{"w", w_json(net.w)}, {"layers", layers}};
    if (!hist.loss.empty()) {
        summary["initial_loss"] = hist.loss.front();
        summary["final_loss"] = hist.loss.back();
    }
    if (dc.warp) {
        summary["w_distance_start"] = param_distance(w0, *dc.warp);
        summary["w_distance_end"] = param_distance(net.w, *dc.warp);
    }
    write_json(ctx.file("train.json"), summary);
    return kExitOk;
}

int cmd_grad_check(Context& ctx) {
    const int coords = ctx.cfg.get("coords", 50);
    const TransformParams w = read_w(ctx.cfg, "w", {0.2, 1.1, 0.9});
    const int batch = ctx.cfg.get("batch", 2);
    const int crop = ctx.cfg.get("crop", 3);
    const double step = ctx.cfg.get("step", 1e-6);
    const double tol = ctx.cfg.get("tol", 1e-5);
    const std::uint64_t seed = ctx.seed_or(1);
    DenoiseDataConfig dc = read_denoise(ctx.cfg.child("data"));
    ctx.cfg.finish();
    dc.count = batch;
    const auto data = make_denoise_set(seed + 1, dc);
    const EqNetwork net = make_toy_network(seed, dc.h, w);
    const GradCheckReport rep = grad_check(net, data, crop, coords, seed + 2, step);
    Csv csv("grad_check/1", {"layer", "filter", "index", "analytic", "numeric", "rel_error"});
    for (const GradCheckEntry& e : rep.entries)
        csv.row({std::to_string(e.layer), std::to_string(e.filter), std::to_string(e.index), num(e.analytic),
                 num(e.numeric), num(e.rel_error)});
    csv.save(ctx.file("grad_check.csv"));
    write_json(ctx.file("grad_check.json"), {{"max_rel_error", rep.max_rel_error}, {"tol", tol}, {"ok", rep.max_rel_error <= tol}});
    if (rep.max_rel_error > tol) {
        std::cerr << "gradient mismatch: max relative error " << rep.max_rel_error << "\n";
        return kExitCheckFailed;
    }
    return kExitOk;
}

using Command = std::function<int(Context&)>;

const std::vector<std::pair<std::string, std::pair<std::string, Command>>>& table() {
    static const std::vector<std::pair<std::string, std::pair<std::string, Command>>> t{
        {"closure", {"Check closure of the conjugated rotation group", cmd_closure}},
        {"gen-filters", {"Discretize a random parameterized filter and export it as JSON", cmd_gen_filters}},
        {"check-eq", {"Measure layer and network equivariance errors", cmd_check_eq}},
        {"sweep-h", {"Equivariance error against mesh size", cmd_sweep_h}},
        {"sweep-w", {"Equivariance error against parameter mismatch", cmd_sweep_w}},
        {"certificate", {"Compare sweep errors with the theoretical bound", cmd_certificate}},
        {"symmetry", {"Mean local feature profile over the conjugated group", cmd_symmetry}},
        {"fit-w", {"Fit transformation parameters by minimizing symmetry variance", cmd_fit_w}},
        {"train-toy", {"Train the toy denoising network with SGD", cmd_train_toy}},
        {"grad-check", {"Compare backward() with central finite differences", cmd_grad_check}},
    };
    return t;
}

}  // namespace

const std::vector<std::string>& cli_commands() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [name, _] : table()) v.push_back(name);
        return v;
    }();
    return names;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Transformation-learnable equivariant convolution experiments", "tlconv"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    int threads = 1;
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, entry] : table()) {
        CLI::App* sub = app.add_subcommand(name, entry.first);
        sub->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--seed", seed, "Override the configured seed");
        sub->add_option("--threads", threads, "Worker threads for sweeps")->check(CLI::Range(1, 256));
        subs[name] = sub;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }
    try {
        json cfg = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            try {
                cfg = json::parse(in);
            } catch (const json::parse_error& e) {
                throw ConfigError(std::string("malformed JSON config: ") + e.what());
            }
        }
        fs::create_directories(out_dir);
        Context ctx{ConfigReader(cfg), fs::path(out_dir), std::nullopt, threads};
        for (const auto& [name, entry] : table()) {
            if (!subs[name]->parsed()) continue;
            if (subs[name]->count("--seed")) ctx.seed = seed;
            return entry.second(ctx);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckFailed;
    }
    return kExitUsage;
}

}  // namespace tlconv
