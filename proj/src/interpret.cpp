#include "tabkan/interpret.hpp"

#include "tabkan/basis.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace tabkan::interpret {

namespace {

constexpr double kJacobiAlpha = 1.0;
constexpr double kJacobiBeta = 1.0;

const layers::Layer& layer_at(const network::Model& model, int layer) {
    if (layer < 0 || static_cast<std::size_t>(layer) >= model.depth())
        throw std::out_of_range("interpret: layer index out of range");
    return *model.layer_stack()[layer];
}

std::vector<double> edge_slice(const std::vector<Matrix>& stack, int i, int o) {
    std::vector<double> out;
    out.reserve(stack.size());
    for (const auto& m : stack) out.push_back(m(i, o));
    return out;
}

}  // namespace

EdgeFunction extract_edge_function(const network::Model& model, int layer, int i, int o) {
    const layers::Layer& l = layer_at(model, layer);
    if (i < 0 || i >= l.n_in() || o < 0 || o >= l.n_out())
        throw std::out_of_range("interpret: edge index out of range");
    EdgeFunction edge;
    edge.family = l.variant();
    edge.layer = layer;
    edge.feature = i;
    edge.output = o;
    switch (l.variant()) {
        case layers::Variant::cheby:
            edge.lo = -1.0;
            edge.hi = 1.0;
            edge.coeffs = edge_slice(layers::cheby_coeffs(l), i, o);
            break;
        case layers::Variant::fourier:
            edge.lo = -std::numbers::pi;
            edge.hi = std::numbers::pi;
            edge.cos_c = edge_slice(layers::fourier_cos(l), i, o);
            edge.sin_c = edge_slice(layers::fourier_sin(l), i, o);
            break;
        case layers::Variant::pade:
            edge.lo = 0.0;
            edge.hi = 1.0;
            edge.num = edge_slice(layers::pade_num(l), i, o);
            edge.den = edge_slice(layers::pade_den(l), i, o);
            break;
        default:
            throw std::invalid_argument("interpret: edge extraction supports cheby/fourier/pade");
    }
    return edge;
}

double edge_value(const EdgeFunction& edge, double x) {
    switch (edge.family) {
        case layers::Variant::cheby: {
            auto e = basis::cheby_eval_all(x, static_cast<int>(edge.coeffs.size()) - 1);
            double y = 0.0;
            for (std::size_t k = 0; k < edge.coeffs.size(); ++k) y += edge.coeffs[k] * e.values[k];
            return y;
        }
        case layers::Variant::fourier: {
            double y = 0.0;
            for (std::size_t k = 0; k < edge.cos_c.size(); ++k) {
                double kk = static_cast<double>(k + 1);
                y += edge.cos_c[k] * std::cos(kk * x) + edge.sin_c[k] * std::sin(kk * x);
            }
            return y;
        }
        case layers::Variant::pade: {
            double t = 2.0 * x - 1.0;
            int deg = static_cast<int>(std::max(edge.num.size(), edge.den.size())) - 1;
            auto e = basis::jacobi_eval_all(deg, kJacobiAlpha, kJacobiBeta, t);
            double p = 0.0, q = 0.0;
            for (std::size_t a = 0; a < edge.num.size(); ++a) p += edge.num[a] * e.values[a];
            for (std::size_t a = 0; a < edge.den.size(); ++a) q += edge.den[a] * e.values[a];
            if (std::abs(q) < layers::kPadeFloor)
                q = (q >= 0.0 ? layers::kPadeFloor : -layers::kPadeFloor);
            return p / q;
        }
        default:
            throw std::invalid_argument("interpret: unsupported edge family");
    }
}

std::vector<std::pair<double, double>> sample_curve(const EdgeFunction& edge, int n_points) {
    if (n_points < 2) throw std::invalid_argument("sample_curve: need >= 2 points");
    std::vector<std::pair<double, double>> out;
    out.reserve(n_points);
    for (int j = 0; j < n_points; ++j) {
        double x = edge.lo + (edge.hi - edge.lo) * j / (n_points - 1);
        out.emplace_back(x, edge_value(edge, x));
    }
    return out;
}

std::vector<double> feature_importance(const network::Model& model) {
    const layers::Layer& first = layer_at(model, 0);
    std::vector<double> scores(first.n_in(), 0.0);
    auto accumulate = [&](const std::vector<Matrix>& stack) {
        for (const auto& m : stack)
            for (int i = 0; i < first.n_in(); ++i) scores[i] += m.row(i).cwiseAbs().sum();
    };
    switch (first.variant()) {
        case layers::Variant::cheby:
            accumulate(layers::cheby_coeffs(first));
            break;
        case layers::Variant::fourier:
            accumulate(layers::fourier_cos(first));
            accumulate(layers::fourier_sin(first));
            break;
        default:
            throw std::invalid_argument("feature_importance: first layer must be cheby or fourier");
    }
    return scores;
}

EnergyReport high_order_energy(const network::Model& model) {
    EnergyReport report;
    double total_num = 0.0, total_den = 0.0;
    for (std::size_t li = 0; li < model.depth(); ++li) {
        const layers::Layer& l = *model.layer_stack()[li];
        layers::Variant v = l.variant();
        if (v != layers::Variant::cheby && v != layers::Variant::fourier)
            throw std::invalid_argument("high_order_energy: cheby or fourier models only");
        for (int i = 0; i < l.n_in(); ++i)
            for (int o = 0; o < l.n_out(); ++o) {
                double num = 0.0, den = 0.0;
                if (v == layers::Variant::cheby) {
                    const auto& stack = layers::cheby_coeffs(l);
                    for (std::size_t k = 0; k < stack.size(); ++k) {
                        double c2 = stack[k](i, o) * stack[k](i, o);
                        den += c2;
                        if (k >= 3) num += c2;
                    }
                } else {
                    const auto& wc = layers::fourier_cos(l);
                    const auto& ws = layers::fourier_sin(l);
                    for (std::size_t k = 0; k < wc.size(); ++k) {
                        double c2 = wc[k](i, o) * wc[k](i, o) + ws[k](i, o) * ws[k](i, o);
                        den += c2;
                        if (k + 1 >= 3) num += c2;
                    }
                }
                EdgeEnergy e;
                e.layer = static_cast<int>(li);
                e.feature = i;
                e.output = o;
                e.defined = den > 0.0;
                e.energy = e.defined ? num / den : 0.0;
                report.edges.push_back(e);
                total_num += num;
                total_den += den;
            }
    }
    report.defined = total_den > 0.0;
    report.aggregate = report.defined ? total_num / total_den : 0.0;
    return report;
}

std::vector<RetrainRow> top_k_retrain(const Matrix& x_train, const std::vector<int>& y_train,
                                      const Matrix& x_test, const std::vector<int>& y_test,
                                      int n_classes, const network::NetworkSpec& spec,
                                      const std::vector<double>& fractions,
                                      const RetrainConfig& cfg) {
    int n_features = static_cast<int>(x_train.cols());
    for (double f : fractions)
        if (f <= 0.0 || f > 1.0) throw std::invalid_argument("top_k_retrain: fraction outside (0,1]");

    network::NetworkSpec base = spec;
    base.widths.front() = n_features;
    base.seed = derive_seed(cfg.seed, 0x72657472ULL);
    network::Model full(base);
    optim::train(full, x_train, y_train, cfg.train, cfg.penalty);
    metrics::MetricReport full_metrics =
        metrics::evaluate(full.predict_logits(x_test), y_test, n_classes);

    std::vector<double> scores = feature_importance(full);
    std::vector<int> order(n_features);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });

    std::vector<RetrainRow> rows;
    for (double f : fractions) {
        int n_keep = static_cast<int>(std::lround(f * n_features));
        if (n_keep <= 0) throw std::invalid_argument("top_k_retrain: fraction keeps 0 features");
        RetrainRow row;
        row.fraction = f;
        row.n_features = n_keep;
        row.kept.assign(order.begin(), order.begin() + n_keep);
        // columns stay in original order so the full-fraction run is the
        // baseline model bit for bit
        std::sort(row.kept.begin(), row.kept.end());
        if (n_keep == n_features) {
            row.metrics = full_metrics;
        } else {
            Matrix xtr(x_train.rows(), n_keep), xte(x_test.rows(), n_keep);
            for (int c = 0; c < n_keep; ++c) {
                xtr.col(c) = x_train.col(row.kept[c]);
                xte.col(c) = x_test.col(row.kept[c]);
            }
            network::NetworkSpec sub = base;
            sub.widths.front() = n_keep;
            network::Model model(sub);
            optim::train(model, xtr, y_train, cfg.train, cfg.penalty);
            row.metrics = metrics::evaluate(model.predict_logits(xte), y_test, n_classes);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

// Map a point of the normalized basis domain back to the scaled-feature
// axis, inverting the layer's input squash.
double unsquash(const EdgeFunction& edge, double x) {
    switch (edge.family) {
        case layers::Variant::cheby: {
            double c = std::clamp(x, -1.0 + 1e-12, 1.0 - 1e-12);
            return std::atanh(c);
        }
        case layers::Variant::pade: {
            double c = std::clamp(x, 1e-12, 1.0 - 1e-12);
            return std::log(c / (1.0 - c));
        }
        default:
            return x;  // fourier has no squash
    }
}

}  // namespace

void write_curve_csv(const std::string& path, const EdgeFunction& edge, int n_points,
                     const data::ScalerState* scaler) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << (scaler ? "x,f,x_original\n" : "x,f\n");
    out.precision(12);
    for (const auto& [x, y] : sample_curve(edge, n_points)) {
        out << x << ',' << y;
        if (scaler) out << ',' << data::unscale_value(*scaler, edge.feature, unsquash(edge, x));
        out << '\n';
    }
}

void write_curve_svg(const std::string& path, const EdgeFunction& edge, int n_points) {
    auto pts = sample_curve(edge, n_points);
    double ylo = pts[0].second, yhi = pts[0].second;
    for (const auto& p : pts) {
        ylo = std::min(ylo, p.second);
        yhi = std::max(yhi, p.second);
    }
    if (yhi - ylo < 1e-12) {
        ylo -= 0.5;
        yhi += 0.5;
    }
    const double w = 480, h = 320, pad = 40;
    auto px = [&](double x) { return pad + (x - edge.lo) / (edge.hi - edge.lo) * (w - 2 * pad); };
    auto py = [&](double y) { return h - pad - (y - ylo) / (yhi - ylo) * (h - 2 * pad); };
    std::ostringstream svg;
    svg.precision(6);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad << "\" y2=\""
        << h - pad << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << h - pad
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << w / 2 << "\" y=\"16\" text-anchor=\"middle\" font-size=\"12\">"
        << layers::variant_name(edge.family) << " edge L" << edge.layer << ' ' << edge.feature
        << "-&gt;" << edge.output << "</text>\n<polyline fill=\"none\" stroke=\"steelblue\" "
        << "stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : pts) svg << px(x) << ',' << py(y) << ' ';
    svg << "\"/>\n</svg>\n";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << svg.str();
}

void write_importance_csv(const std::string& path, const std::vector<double>& scores,
                          const std::vector<std::string>& feature_names) {
    if (scores.size() != feature_names.size())
        throw std::invalid_argument("importance csv: name/score length mismatch");
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    std::vector<int> rank(scores.size());
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<int>(r) + 1;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "feature_name,score,rank\n";
    out.precision(12);
    // scores are summed over output units and basis orders
    for (std::size_t i = 0; i < scores.size(); ++i)
        out << feature_names[i] << ',' << scores[i] << ',' << rank[i] << '\n';
}

}  // namespace tabkan::interpret
