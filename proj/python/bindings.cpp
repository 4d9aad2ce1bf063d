#include "tlconv/cli.hpp"
#include "tlconv/eqconv.hpp"
#include "tlconv/filter.hpp"
#include "tlconv/group.hpp"
#include "tlconv/io.hpp"
#include "tlconv/lab.hpp"
#include "tlconv/symmetry.hpp"
#include "tlconv/trainer.hpp"
#include "tlconv/transforms.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>

namespace py = pybind11;
using namespace tlconv;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const Plane& p) {
    Array out({p.size(), p.size()});
    std::copy(p.values().begin(), p.values().end(), out.mutable_data());
    return out;
}

Plane to_plane(const Array& a) {
    if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw std::invalid_argument("expected a square 2-D array");
    Plane p(static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), p.values().begin());
    return p;
}

/// Feature maps travel as [i][j][k] arrays.
Array features_to_numpy(const GroupFeatureMap& f) {
    const int n = f.n(), t = f.t();
    Array out({n, n, t});
    auto m = out.mutable_unchecked<3>();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < t; ++k) m(i, j, k) = f.at(i, j, k);
    return out;
}

GroupFeatureMap to_features(const Array& a, double h) {
    if (a.ndim() != 3 || a.shape(0) != a.shape(1)) throw std::invalid_argument("expected an n x n x t array");
    const int n = static_cast<int>(a.shape(0)), t = static_cast<int>(a.shape(2));
    GroupFeatureMap f(n, t, h);
    auto m = a.unchecked<3>();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < t; ++k) f.at(i, j, k) = m(i, j, k);
    return f;
}

Array stack_to_numpy(const FilterStack& st) {
    const int t = static_cast<int>(st.size()), p = st.front().size();
    Array out({t, p, p});
    double* dst = out.mutable_data();
    for (const Plane& s : st) dst = std::copy(s.values().begin(), s.values().end(), dst);
    return out;
}

Array mid_to_numpy(const FilterStackMid& st) {
    const int p = st.slices.front().size();
    Array out({st.t, st.t, p, p});
    double* dst = out.mutable_data();
    for (const Plane& s : st.slices) dst = std::copy(s.values().begin(), s.values().end(), dst);
    return out;
}

py::list mat_to_list(const Mat2& m) { return py::cast(std::vector<std::vector<double>>{{m.a, m.b}, {m.c, m.d}}); }

py::dict report_dict(const EquivarianceReport& r) {
    py::dict d;
    d["kind"] = r.kind;
    d["t"] = r.t;
    d["k_tilde"] = r.k_tilde;
    d["w"] = r.w.to_array();
    d["w_hat"] = r.w_hat.to_array();
    d["h"] = r.h;
    d["n"] = r.n;
    d["crop"] = r.crop;
    d["error_inf"] = r.error_inf;
    d["error_mean"] = r.error_mean;
    d["dist_w"] = r.dist_w();
    return d;
}

py::dict table_dict(const SweepTable& t) {
    py::list rows;
    for (const SweepRow& row : t.rows) {
        py::dict d = report_dict(row.report);
        d["x"] = row.x;
        rows.append(d);
    }
    py::dict out;
    out["rows"] = rows;
    out["slope"] = t.slope;
    out["intercept"] = t.intercept;
    out["residual"] = t.residual;
    out["monotone"] = t.monotone;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Transformation-learnable equivariant convolution";
    m.attr("__version__") = "0.1.0";

    py::class_<TransformParams>(m, "TransformParams")
        .def(py::init<>())
        .def(py::init([](double a, double sx, double sy) { return TransformParams{a, sx, sy}; }), py::arg("alpha"),
             py::arg("sx"), py::arg("sy"))
        .def_readwrite("alpha", &TransformParams::alpha)
        .def_readwrite("sx", &TransformParams::sx)
        .def_readwrite("sy", &TransformParams::sy)
        .def("to_list", &TransformParams::to_array)
        .def("__repr__", [](const TransformParams& w) {
            return "TransformParams(" + std::to_string(w.alpha) + ", " + std::to_string(w.sx) + ", " +
                   std::to_string(w.sy) + ")";
        });

    py::class_<GroupSpec>(m, "GroupSpec")
        .def(py::init<int, TransformParams>(), py::arg("t"), py::arg("w"))
        .def_property_readonly("order", &GroupSpec::order)
        .def_property_readonly("params", &GroupSpec::params)
        .def("in_recommended_range", &GroupSpec::in_recommended_range);

    m.def("rotation_matrix", [](double th) { return mat_to_list(rotation_matrix(th)); });
    m.def("dw_matrix", [](const TransformParams& w) { return mat_to_list(dw_matrix(w)); });
    m.def("conjugate_element", [](const GroupSpec& g, int k) { return mat_to_list(conjugate_element(g, k)); });
    m.def("verify_closure", [](const GroupSpec& g, double tol) {
        const ClosureReport r = verify_closure(g, tol);
        py::dict d;
        d["ok"] = r.ok;
        d["max_deviation"] = r.max_deviation;
        d["worst_pair"] = py::make_tuple(r.worst_i, r.worst_j);
        return d;
    });

    py::class_<FilterSpec>(m, "FilterSpec")
        .def(py::init<int, double>(), py::arg("p"), py::arg("h"))
        .def_readonly("p", &FilterSpec::p)
        .def_readonly("h", &FilterSpec::h)
        .def_property_readonly("support_radius", &FilterSpec::support_radius);

    py::enum_<FilterRole>(m, "FilterRole")
        .value("input", FilterRole::input)
        .value("intermediate", FilterRole::intermediate)
        .value("output", FilterRole::output);

    py::class_<ParamFilter>(m, "ParamFilter")
        .def(py::init<FilterSpec, std::vector<double>, FilterRole, int>(), py::arg("spec"), py::arg("v"),
             py::arg("role") = FilterRole::input, py::arg("group_index") = 0)
        .def_readonly("spec", &ParamFilter::spec)
        .def_readwrite("v", &ParamFilter::v)
        .def_readonly("role", &ParamFilter::role)
        .def("__call__", [](const ParamFilter& pf, double x0, double x1) {
            return filter_eval(pf, Mat2::identity(), {x0, x1});
        });

    m.def("keys_kernel", &keys_kernel);
    m.def("discretize_input", [](const ParamFilter& pf, const GroupSpec& g) { return stack_to_numpy(discretize_input(pf, g)); });
    m.def("discretize_output", [](const ParamFilter& pf, const GroupSpec& g) { return stack_to_numpy(discretize_output(pf, g)); });
    m.def("discretize_mid", [](const std::vector<ParamFilter>& pfs, const GroupSpec& g) {
        return mid_to_numpy(discretize_mid(pfs, g));
    });

    m.def("conv2d", [](const Array& x, const Array& k) { return to_numpy(conv2d(to_plane(x), to_plane(k))); });
    m.def("input_layer", [](const Array& img, const ParamFilter& pf, const GroupSpec& g, double h) {
        return features_to_numpy(input_layer(GridImage{to_plane(img), h}, discretize_input(pf, g)));
    }, py::arg("image"), py::arg("filter"), py::arg("group"), py::arg("h") = 1.0);
    m.def("mid_layer", [](const Array& f, const std::vector<ParamFilter>& pfs, const GroupSpec& g, double h) {
        return features_to_numpy(mid_layer(to_features(f, h), discretize_mid(pfs, g)));
    }, py::arg("features"), py::arg("filters"), py::arg("group"), py::arg("h") = 1.0);
    m.def("output_layer", [](const Array& f, const ParamFilter& pf, const GroupSpec& g, double h) {
        return to_numpy(output_layer(to_features(f, h), discretize_output(pf, g)).data);
    }, py::arg("features"), py::arg("filter"), py::arg("group"), py::arg("h") = 1.0);

    py::class_<EqNetwork>(m, "EqNetwork")
        .def_readonly("t", &EqNetwork::t)
        .def_readwrite("w", &EqNetwork::w)
        .def_property_readonly("depth", &EqNetwork::depth);
    m.def("make_random_network",
          [](int t, std::vector<int> channels, int p, double h, const TransformParams& w, std::uint64_t seed) {
              NetworkShape s;
              s.t = t;
              s.channels = std::move(channels);
              s.filter = FilterSpec(p, h);
              s.w = w;
              return make_random_network(s, seed);
          },
          py::arg("t"), py::arg("channels"), py::arg("p"), py::arg("h"), py::arg("w"), py::arg("seed"));
    m.def("make_toy_network", &make_toy_network, py::arg("seed"), py::arg("h"), py::arg("w") = TransformParams::identity());
    m.def("forward", [](const EqNetwork& net, const Array& img, double h) {
        return to_numpy(forward(net, GridImage{to_plane(img), h}).data);
    }, py::arg("net"), py::arg("image"), py::arg("h") = 1.0);
    m.def("param_count", &param_count);
    m.def("plain_equiv_count", &plain_equiv_count);

    py::class_<AnalyticImage>(m, "AnalyticImage")
        .def("value", [](const AnalyticImage& r, double x0, double x1) { return r.value({x0, x1}); })
        .def("bounds", [](const AnalyticImage& r) {
            const SmoothBounds b = r.bounds();
            return py::make_tuple(b.f, b.g, b.h);
        });
    m.def("make_gaussian_mixture", [](std::uint64_t seed, int count, double extent, double smin, double smax, double amp) {
        return make_gaussian_mixture(seed, count, {extent, smin, smax, amp});
    }, py::arg("seed"), py::arg("count"), py::arg("extent") = 1.0, py::arg("sigma_min") = 0.1,
       py::arg("sigma_max") = 0.2, py::arg("amplitude") = 1.0);
    m.def("sample_image", [](const AnalyticImage& r, int n, double h) { return to_numpy(sample_image(r, n, h).data); });

    m.def("network_error",
          [](const EqNetwork& net, const AnalyticImage& r, int k_tilde, const TransformParams& w_hat, int n, double h,
             std::optional<int> crop) {
              return report_dict(network_error(net, r, {net.t, k_tilde, w_hat}, n, h, 1, crop));
          },
          py::arg("net"), py::arg("image"), py::arg("k_tilde"), py::arg("w_hat"), py::arg("n"), py::arg("h"),
          py::arg("crop") = py::none());
    m.def("sweep_h", [](std::vector<int> ns, std::uint64_t seed, int threads) {
        SweepHConfig c;
        c.ns = std::move(ns);
        c.setup.seed = seed;
        c.setup.threads = threads;
        return table_dict(sweep_h(c).table);
    }, py::arg("ns") = std::vector<int>{64, 128, 256, 512}, py::arg("seed") = 1, py::arg("threads") = 1);
    m.def("sweep_w", [](int n, std::vector<double> eps, int directions, std::uint64_t seed, int threads) {
        SweepWConfig c;
        c.setup.q = 1;
        c.n = n;
        c.eps = std::move(eps);
        c.directions = directions;
        c.setup.seed = seed;
        c.setup.threads = threads;
        py::list out;
        for (const SweepTable& t : sweep_w(c).tables) out.append(table_dict(t));
        return out;
    }, py::arg("n") = 256, py::arg("eps") = std::vector<double>{0.0, 0.02, 0.04, 0.08, 0.16},
       py::arg("directions") = 5, py::arg("seed") = 1, py::arg("threads") = 1);

    py::class_<Dataset>(m, "Dataset")
        .def_readonly("id", &Dataset::id)
        .def_property_readonly("images", [](const Dataset& d) {
            py::list out;
            for (const GridImage& im : d.images) out.append(to_numpy(im.data));
            return out;
        });
    m.def("dataset_from_arrays", [](const std::vector<Array>& arrays, double h) {
        Dataset d;
        d.id = "arrays";
        for (const Array& a : arrays) d.images.push_back({to_plane(a), h});
        d.validate();
        return d;
    }, py::arg("images"), py::arg("h") = 1.0 / 16);
    m.def("make_warped_dataset", [](const TransformParams& w, std::uint64_t seed, int count) {
        return make_warped_dataset(w, seed, count);
    }, py::arg("w_star"), py::arg("seed"), py::arg("count"));
    m.def("variance_over_group", [](const Dataset& d, const TransformParams& w, int angles) {
        return variance_over_group(d, w, angles).variance;
    }, py::arg("dataset"), py::arg("w"), py::arg("angles") = 36);
    m.def("fit_w", [](const Dataset& d, int grid, int max_iterations) {
        FitConfig c;
        c.grid = grid;
        c.max_iterations = max_iterations;
        const FitResult r = fit_w(d, c);
        py::dict out;
        out["w_hat"] = r.w_hat;
        out["variance"] = r.profile.variance;
        out["identity_variance"] = r.identity_variance;
        out["grid_variance"] = r.grid_variance;
        out["flat"] = r.flat;
        return out;
    }, py::arg("dataset"), py::arg("grid") = 9, py::arg("max_iterations") = 300);
    m.def("canonical_gauge", [](const TransformParams& w) {
        const GaugeView g = canonical_gauge(w);
        return py::make_tuple(g.ratio, g.alpha);
    });

    py::class_<DenoisePair>(m, "DenoisePair")
        .def_property_readonly("noisy", [](const DenoisePair& p) { return to_numpy(p.noisy.data); })
        .def_property_readonly("clean", [](const DenoisePair& p) { return to_numpy(p.clean.data); });
    m.def("make_denoise_set", [](std::uint64_t seed, int count, int n, double noise) {
        DenoiseDataConfig c;
        c.count = count;
        c.n = n;
        c.noise = noise;
        return make_denoise_set(seed, c);
    }, py::arg("seed"), py::arg("count") = 16, py::arg("n") = 32, py::arg("noise") = 0.1);
    m.def("loss", [](const EqNetwork& net, const std::vector<DenoisePair>& batch, int crop) {
        return loss(net, batch, crop);
    }, py::arg("net"), py::arg("batch"), py::arg("crop") = 3);
    m.def("train", [](EqNetwork& net, const std::vector<DenoisePair>& data, int steps, double lr_v, double lr_w,
                      int batch, bool freeze_w) {
        TrainConfig c;
        c.steps = steps;
        c.lr_v = lr_v;
        c.lr_w = lr_w;
        c.batch = batch;
        c.freeze_w = freeze_w;
        const TrainHistory h = train(c, data, net);
        return h.loss;
    }, py::arg("net"), py::arg("data"), py::arg("steps") = 200, py::arg("lr_v") = 0.05, py::arg("lr_w") = 0.005,
       py::arg("batch") = 4, py::arg("freeze_w") = false);
    m.def("grad_check", [](const EqNetwork& net, const std::vector<DenoisePair>& batch, int coords, std::uint64_t seed) {
        return grad_check(net, batch, 3, coords, seed).max_rel_error;
    }, py::arg("net"), py::arg("batch"), py::arg("coords") = 50, py::arg("seed") = 1);

    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    m.def("read_pgm", [](const std::filesystem::path& p) { return to_numpy(read_pgm(p).data); });
    m.def("write_pgm", [](const Array& a, const std::filesystem::path& p) { write_pgm(GridImage{to_plane(a), 1.0}, p); });
    m.def("write_raw_grid", [](const Array& a, double h, const std::filesystem::path& p) {
        if (a.ndim() == 2) write_raw_grid(GridImage{to_plane(a), h}, p);
        else write_raw_grid(to_features(a, h), p);
    }, py::arg("array"), py::arg("h"), py::arg("path"));
    m.def("read_raw_grid", [](const std::filesystem::path& p) {
        const GroupFeatureMap f = read_raw_grid(p);
        return py::make_tuple(f.t() == 1 ? py::object(to_numpy(f.slices[0])) : py::object(features_to_numpy(f)), f.h);
    });

    m.def("run_cli", [](std::vector<std::string> args) {
        args.insert(args.begin(), "tlconv");
        std::vector<char*> argv;
        for (std::string& a : args) argv.push_back(a.data());
        return run_cli(static_cast<int>(argv.size()), argv.data());
    });
}
