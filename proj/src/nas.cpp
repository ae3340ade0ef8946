#include "tabkan/nas.hpp"

#include "tabkan/metrics.hpp"

#include <cmath>
#include <thread>

namespace tabkan::nas {

int SearchSpace::dims() const {
    int d = 2;  // depth, width
    if (order) ++d;
    if (grid) ++d;
    if (pade_q) ++d;
    if (pade_k) ++d;
    return d;
}

SearchSpace space_for(layers::Variant variant) {
    using layers::Variant;
    SearchSpace s;
    s.variant = variant;
    switch (variant) {
        case Variant::cheby:
        case Variant::fkan:
        case Variant::jacobi_r:
            s.depth = {1, 10, 1};
            s.width = {5, 100, 5};
            s.order = IntRange{2, 6, 1};
            break;
        case Variant::fast:
            s.depth = {1, 5, 1};
            s.width = {5, 50, 1};
            break;
        case Variant::pade:
            s.depth = {1, 5, 1};
            s.width = {5, 100, 5};
            s.pade_q = IntRange{2, 6, 1};
            s.pade_k = IntRange{2, 6, 1};
            break;
        case Variant::fourier:
            s.depth = {1, 5, 1};
            s.width = {5, 50, 1};
            s.grid = IntRange{1, 10, 1};
            break;
        case Variant::spline:
            // original KAN: same structural ranges as cheby, grid for the
            // spline resolution
            s.depth = {1, 10, 1};
            s.width = {5, 100, 5};
            s.order = IntRange{2, 6, 1};
            s.grid = IntRange{3, 10, 1};
            break;
    }
    return s;
}

namespace {

double encode_coord(int v, const IntRange& r) {
    if (!r.contains(v)) throw std::invalid_argument("encode: value outside search space");
    if (r.span() == 0) return 0.0;
    return static_cast<double>(v - r.lo) / (r.hi - r.lo);
}

int decode_coord(double c, const IntRange& r) {
    c = std::clamp(c, 0.0, 1.0);
    if (r.span() == 0) return r.lo;
    int steps = static_cast<int>(std::lround(c * r.span()));
    return r.lo + steps * r.step;
}

}  // namespace

std::vector<double> encode(const network::NetworkSpec& spec, const SearchSpace& space) {
    if (spec.variant != space.variant) throw std::invalid_argument("encode: variant mismatch");
    int depth = static_cast<int>(spec.widths.size()) - 1;
    int width = depth > 1 ? spec.widths[1] : space.width.lo;
    std::vector<double> p;
    p.push_back(encode_coord(depth, space.depth));
    p.push_back(encode_coord(width, space.width));
    if (space.order) p.push_back(encode_coord(spec.hyper.order, *space.order));
    if (space.grid) p.push_back(encode_coord(spec.hyper.grid, *space.grid));
    if (space.pade_q) p.push_back(encode_coord(spec.hyper.pade_q, *space.pade_q));
    if (space.pade_k) p.push_back(encode_coord(spec.hyper.pade_k, *space.pade_k));
    return p;
}

network::NetworkSpec decode(const std::vector<double>& point, const SearchSpace& space,
                            int n_features, int n_classes) {
    if (static_cast<int>(point.size()) != space.dims())
        throw std::invalid_argument("decode: dimension mismatch");
    network::NetworkSpec spec;
    spec.variant = space.variant;
    std::size_t i = 0;
    int depth = decode_coord(point[i++], space.depth);
    int width = decode_coord(point[i++], space.width);
    if (space.order) spec.hyper.order = decode_coord(point[i++], *space.order);
    if (space.grid) spec.hyper.grid = decode_coord(point[i++], *space.grid);
    if (space.pade_q) spec.hyper.pade_q = decode_coord(point[i++], *space.pade_q);
    if (space.pade_k) spec.hyper.pade_k = decode_coord(point[i++], *space.pade_k);
    spec.widths.push_back(n_features);
    for (int l = 1; l < depth; ++l) spec.widths.push_back(width);
    spec.widths.push_back(n_classes);
    return spec;
}

GpSurrogate gp_fit(const Matrix& points, const Vector& values, double jitter) {
    if (points.rows() < 2) throw std::invalid_argument("gp_fit: need >= 2 points");
    if (points.rows() != values.size()) throw std::invalid_argument("gp_fit: size mismatch");
    GpSurrogate gp;
    gp.x = points;
    gp.y_mean = values.mean();
    double var = (values.array() - gp.y_mean).square().mean();
    gp.y_scale = std::sqrt(var) > 1e-12 ? std::sqrt(var) : 1.0;
    gp.y_std = (values.array() - gp.y_mean) / gp.y_scale;
    gp.signal_var = 1.0;

    // median heuristic for the length-scale
    std::vector<double> dists;
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        for (Eigen::Index j = i + 1; j < points.rows(); ++j)
            dists.push_back((points.row(i) - points.row(j)).norm());
    std::sort(dists.begin(), dists.end());
    double med = dists.empty() ? 1.0 : dists[dists.size() / 2];
    gp.length_scale = med > 1e-9 ? med : 1.0;

    Eigen::Index n = points.rows();
    Matrix k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
            double d2 = (points.row(i) - points.row(j)).squaredNorm();
            double v = gp.signal_var * std::exp(-d2 / (2.0 * gp.length_scale * gp.length_scale));
            k(i, j) = v;
            k(j, i) = v;
        }
    gp.jitter = jitter;
    while (true) {
        Matrix kj = k + gp.jitter * Matrix::Identity(n, n);
        gp.chol.compute(kj);
        if (gp.chol.info() == Eigen::Success) break;
        gp.jitter *= 10.0;
        if (gp.jitter > 1e-2) throw std::runtime_error("gp_fit: kernel not positive definite");
    }
    gp.alpha = gp.chol.solve(gp.y_std);
    return gp;
}

std::pair<double, double> gp_posterior(const GpSurrogate& gp, const Vector& point) {
    Eigen::Index n = gp.x.rows();
    Vector ks(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double d2 = (gp.x.row(i).transpose() - point).squaredNorm();
        ks(i) = gp.signal_var * std::exp(-d2 / (2.0 * gp.length_scale * gp.length_scale));
    }
    double mu_std = ks.dot(gp.alpha);
    Vector v = gp.chol.solve(ks);
    double var = gp.signal_var - ks.dot(v);
    var = std::max(var, 0.0);
    return {mu_std * gp.y_scale + gp.y_mean, std::sqrt(var) * gp.y_scale};
}

double expected_improvement(double mu, double sigma, double y_best, double xi) {
    if (sigma < 0.0) throw std::invalid_argument("expected_improvement: sigma < 0");
    double improve = mu - y_best - xi;
    if (sigma == 0.0) return std::max(improve, 0.0);
    double z = improve / sigma;
    double ei = improve * normal_cdf(z) + sigma * normal_pdf(z);
    return std::max(ei, 0.0);
}

std::vector<double> propose_next(const GpSurrogate& gp, const SearchSpace& space,
                                 const AcquisitionConfig& cfg, double y_best, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    int dims = space.dims();
    std::vector<double> best_point;
    double best_ei = -1.0;
    Vector candidate(dims);
    for (int c = 0; c < cfg.pool_size; ++c) {
        for (int d = 0; d < dims; ++d) candidate(d) = unif(rng);
        auto [mu, sigma] = gp_posterior(gp, candidate);
        double ei = expected_improvement(mu, sigma, y_best, cfg.xi);
        if (ei > best_ei) {  // strict: first index wins ties
            best_ei = ei;
            best_point.assign(candidate.data(), candidate.data() + dims);
        }
    }
    return best_point;
}

namespace {

Trial evaluate_trial(int index, const std::vector<double>& point, const SearchSpace& space,
                     int n_features, int n_classes, std::uint64_t seed,
                     const TrialObjective& objective) {
    Trial t;
    t.index = index;
    t.spec = decode(point, space, n_features, n_classes);
    t.spec.seed = derive_seed(seed, 0x747269616cULL + index);
    t.point = encode(t.spec, space);  // snapped to the grid the GP sees
    try {
        t.objective = objective(t.spec, t.report);
        if (!std::isfinite(t.objective)) {
            t.failed = true;
            t.objective = -std::numeric_limits<double>::infinity();
        }
    } catch (const std::exception&) {
        t.failed = true;
        t.objective = -std::numeric_limits<double>::infinity();
    }
    return t;
}

}  // namespace

SearchResult run_search(layers::Variant variant, int n_features, int n_classes,
                        const AcquisitionConfig& cfg, std::uint64_t seed,
                        const TrialObjective& objective, int workers) {
    if (cfg.n_trials < cfg.n_initial || cfg.n_initial < 1)
        throw std::invalid_argument("run_search: bad trial budget");
    SearchSpace space = space_for(variant);
    Rng rng(derive_seed(seed, 0x6e6173ULL));
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    SearchResult result;
    auto random_point = [&]() {
        std::vector<double> p(space.dims());
        for (auto& v : p) v = unif(rng);
        return p;
    };

    // initial random phase (parallel when workers > 1)
    int n0 = std::min(cfg.n_initial, cfg.n_trials);
    std::vector<std::vector<double>> init_points;
    for (int i = 0; i < n0; ++i) init_points.push_back(random_point());
    result.trials.resize(n0);
    if (workers > 1) {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&]() {
                int i;
                while ((i = next.fetch_add(1)) < n0)
                    result.trials[i] = evaluate_trial(i, init_points[i], space, n_features,
                                                      n_classes, seed, objective);
            });
        for (auto& th : pool) th.join();
    } else {
        for (int i = 0; i < n0; ++i)
            result.trials[i] =
                evaluate_trial(i, init_points[i], space, n_features, n_classes, seed, objective);
    }

    for (int t = n0; t < cfg.n_trials; ++t) {
        // fit GP on successful trials
        std::vector<const Trial*> ok;
        for (const auto& tr : result.trials)
            if (!tr.failed) ok.push_back(&tr);
        std::vector<double> point;
        if (ok.size() >= 2) {
            Matrix pts(ok.size(), space.dims());
            Vector vals(ok.size());
            double y_best = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < ok.size(); ++i) {
                for (int d = 0; d < space.dims(); ++d) pts(i, d) = ok[i]->point[d];
                vals(i) = ok[i]->objective;
                y_best = std::max(y_best, ok[i]->objective);
            }
            try {
                GpSurrogate gp = gp_fit(pts, vals);
                point = propose_next(gp, space, cfg, y_best, rng);
            } catch (const std::exception&) {
                point = random_point();
            }
        } else {
            point = random_point();
        }
        result.trials.push_back(
            evaluate_trial(t, point, space, n_features, n_classes, seed, objective));
    }

    const Trial* best = nullptr;
    for (const auto& tr : result.trials)
        if (!tr.failed && (!best || tr.objective > best->objective)) best = &tr;
    if (!best) throw std::runtime_error("run_search: all trials failed");
    result.best_spec = best->spec;
    result.best_objective = best->objective;
    return result;
}

TrialObjective make_supervised_objective(const Matrix& x_train, const std::vector<int>& y_train,
                                         const Matrix& x_val, const std::vector<int>& y_val,
                                         int n_classes, const optim::TrainConfig& train_cfg,
                                         const network::PenaltySpec& penalty) {
    return [=, &x_train, &y_train, &x_val, &y_val](network::NetworkSpec& spec,
                                                   optim::TrainReport& report) {
        network::Model model(spec);
        report = optim::train(model, x_train, y_train, train_cfg, penalty);
        Matrix logits = model.predict_logits(x_val);
        auto preds = metrics::argmax_rows(logits);
        return n_classes > 2 ? metrics::macro_f1(preds, y_val, n_classes)
                             : metrics::f1(preds, y_val, 1);
    };
}

}  // namespace tabkan::nas
