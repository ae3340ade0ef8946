#include "tabkan/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace tabkan::data {

namespace {

ColumnKind kind_from_name(const std::string& s) {
    if (s == "numerical") return ColumnKind::numerical;
    if (s == "categorical") return ColumnKind::categorical;
    if (s == "binary") return ColumnKind::binary;
    if (s == "label") return ColumnKind::label;
    throw std::invalid_argument("schema: unknown column kind '" + s + "'");
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            out.push_back(field);
            field.clear();
        } else {
            field += c;
        }
    }
    out.push_back(field);
    for (auto& f : out) {
        std::size_t a = f.find_first_not_of(" \t\r");
        std::size_t b = f.find_last_not_of(" \t\r");
        f = (a == std::string::npos) ? "" : f.substr(a, b - a + 1);
    }
    return out;
}

}  // namespace

Schema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("schema file not found: " + path);
    nlohmann::json j;
    in >> j;
    Schema schema;
    for (const auto& col : j.at("columns")) {
        ColumnSchema cs;
        cs.name = col.at("name").get<std::string>();
        cs.kind = kind_from_name(col.at("kind").get<std::string>());
        if (col.contains("categories"))
            cs.categories = col["categories"].get<std::vector<std::string>>();
        schema.push_back(std::move(cs));
    }
    validate_schema(schema);
    return schema;
}

void validate_schema(const Schema& schema) {
    int labels = 0;
    for (const auto& c : schema) {
        if (c.kind == ColumnKind::label) ++labels;
        if (c.kind == ColumnKind::categorical) {
            if (c.categories.empty())
                throw std::invalid_argument("schema: categorical column '" + c.name +
                                            "' needs categories");
            std::set<std::string> uniq(c.categories.begin(), c.categories.end());
            if (uniq.size() != c.categories.size())
                throw std::invalid_argument("schema: duplicate categories in '" + c.name + "'");
        }
        if (c.kind == ColumnKind::binary && !c.categories.empty() && c.categories.size() != 2)
            throw std::invalid_argument("schema: binary column '" + c.name +
                                        "' needs exactly 2 categories");
    }
    if (labels != 1) throw std::invalid_argument("schema: exactly one label column required");
}

std::size_t RawTable::missing_count() const {
    std::size_t n = 0;
    for (const auto& r : rows)
        for (const auto& c : r) n += c.missing;
    return n;
}

RawTable load_csv(const std::string& path, const Schema& schema,
                  const std::string& missing_sentinel) {
    validate_schema(schema);
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv file not found: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: empty file: " + path);
    auto header = split_csv_line(line);
    if (header.size() != schema.size())
        throw std::runtime_error("csv: header width does not match schema");
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] != schema[i].name)
            throw std::runtime_error("csv: header column '" + header[i] +
                                     "' does not match schema '" + schema[i].name + "'");

    RawTable table;
    table.schema = schema;
    int label_col = -1;
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (schema[i].kind == ColumnKind::label) label_col = static_cast<int>(i);
        else table.data_columns.push_back(static_cast<int>(i));
    }

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != schema.size())
            throw std::runtime_error("malformed row at line " + std::to_string(lineno));
        std::vector<RawTable::Cell> row;
        for (int ci : table.data_columns) {
            const auto& col = schema[ci];
            const std::string& v = fields[ci];
            RawTable::Cell cell;
            if (v.empty() || v == missing_sentinel) {
                cell.missing = true;
            } else if (col.kind == ColumnKind::numerical) {
                try {
                    std::size_t pos = 0;
                    cell.num = std::stod(v, &pos);
                    if (pos != v.size()) throw std::invalid_argument(v);
                } catch (const std::exception&) {
                    throw std::runtime_error("unparseable numeric cell '" + v + "' at line " +
                                             std::to_string(lineno));
                }
            } else {  // categorical or binary
                std::vector<std::string> cats = col.categories;
                if (col.kind == ColumnKind::binary && cats.empty()) cats = {"0", "1"};
                auto it = std::find(cats.begin(), cats.end(), v);
                if (it == cats.end())
                    throw std::runtime_error("unknown category '" + v + "' in column '" +
                                             col.name + "' at line " + std::to_string(lineno));
                cell.cat = static_cast<int>(it - cats.begin());
            }
            row.push_back(cell);
        }
        const std::string& lv = fields[label_col];
        if (lv.empty() || lv == missing_sentinel)
            throw std::runtime_error("missing label at line " + std::to_string(lineno));
        table.raw_labels.push_back(lv);
        table.rows.push_back(std::move(row));
    }
    return table;
}

namespace {

// distance over mutually observed numerical columns, z-scored by global stats
double knn_distance(const RawTable& t, std::size_t r1, std::size_t r2,
                    const std::vector<int>& num_cols, const std::vector<double>& mu,
                    const std::vector<double>& sd) {
    double d2 = 0.0;
    int shared = 0;
    for (std::size_t j = 0; j < num_cols.size(); ++j) {
        const auto& a = t.rows[r1][num_cols[j]];
        const auto& b = t.rows[r2][num_cols[j]];
        if (a.missing || b.missing) continue;
        double za = (a.num - mu[j]) / sd[j];
        double zb = (b.num - mu[j]) / sd[j];
        d2 += (za - zb) * (za - zb);
        ++shared;
    }
    return shared > 0 ? std::sqrt(d2) : std::numeric_limits<double>::max();
}

}  // namespace

void impute(RawTable& table, int knn_k) {
    std::size_t n = table.rows.size();
    if (n == 0) return;
    std::size_t ncols = table.data_columns.size();

    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t r = 0; r < n; ++r) by_class[table.raw_labels[r]].push_back(r);

    // column-local indices of numerical columns (within rows[])
    std::vector<int> num_cols, cat_cols;
    for (std::size_t j = 0; j < ncols; ++j) {
        auto kind = table.schema[table.data_columns[j]].kind;
        if (kind == ColumnKind::numerical) num_cols.push_back(static_cast<int>(j));
        else cat_cols.push_back(static_cast<int>(j));
    }

    // global stats for fallback and KNN z-scoring
    std::vector<double> g_mu(num_cols.size(), 0.0), g_sd(num_cols.size(), 1.0);
    for (std::size_t j = 0; j < num_cols.size(); ++j) {
        double sum = 0.0, sum2 = 0.0;
        long cnt = 0;
        for (std::size_t r = 0; r < n; ++r) {
            const auto& c = table.rows[r][num_cols[j]];
            if (c.missing) continue;
            sum += c.num;
            sum2 += c.num * c.num;
            ++cnt;
        }
        if (cnt == 0)
            throw std::runtime_error("impute: column '" +
                                     table.schema[table.data_columns[num_cols[j]]].name +
                                     "' has no observed values");
        g_mu[j] = sum / cnt;
        double var = sum2 / cnt - g_mu[j] * g_mu[j];
        g_sd[j] = std::sqrt(std::max(var, 1e-16));
    }

    // numerical: per-class mean, iterated to a fixed point
    for (auto& [cls, rows] : by_class) {
        for (std::size_t j = 0; j < num_cols.size(); ++j) {
            int col = num_cols[j];
            std::vector<std::size_t> missing_rows;
            double sum = 0.0;
            long cnt = 0;
            for (std::size_t r : rows) {
                const auto& c = table.rows[r][col];
                if (c.missing) missing_rows.push_back(r);
                else {
                    sum += c.num;
                    ++cnt;
                }
            }
            if (missing_rows.empty()) continue;
            double fill = (cnt > 0) ? sum / cnt : g_mu[j];
            for (int iter = 0; iter < 100; ++iter) {
                double total = sum + fill * missing_rows.size();
                double next = total / (cnt + missing_rows.size());
                // the per-column model makes this contraction exact; a
                // couple of sweeps reach the 1e-8 fixed point
                if (std::abs(next - fill) < 1e-8) break;
                fill = next;
            }
            for (std::size_t r : missing_rows) {
                table.rows[r][col].num = fill;
                table.rows[r][col].missing = false;
            }
        }
    }

    // categorical: same-class KNN mode over mutually observed numerics
    for (auto& [cls, rows] : by_class) {
        for (int col : cat_cols) {
            std::vector<std::size_t> missing_rows, observed_rows;
            for (std::size_t r : rows) {
                if (table.rows[r][col].missing) missing_rows.push_back(r);
                else observed_rows.push_back(r);
            }
            if (missing_rows.empty()) continue;
            // global mode as fallback
            std::map<int, int> global_counts;
            for (std::size_t r = 0; r < n; ++r)
                if (!table.rows[r][col].missing) global_counts[table.rows[r][col].cat]++;
            if (global_counts.empty())
                throw std::runtime_error("impute: column '" +
                                         table.schema[table.data_columns[col]].name +
                                         "' has no observed values");
            int global_mode = global_counts.begin()->first;
            for (const auto& [cat, cnt] : global_counts)
                if (cnt > global_counts[global_mode]) global_mode = cat;

            for (std::size_t r : missing_rows) {
                int fill = global_mode;
                if (!observed_rows.empty()) {
                    std::vector<std::pair<double, std::size_t>> dist;
                    for (std::size_t o : observed_rows)
                        dist.push_back({knn_distance(table, r, o, num_cols, g_mu, g_sd), o});
                    std::sort(dist.begin(), dist.end());
                    std::map<int, int> counts;
                    int k = std::min<int>(knn_k, static_cast<int>(dist.size()));
                    for (int i = 0; i < k; ++i)
                        counts[table.rows[dist[i].second][col].cat]++;
                    int best = counts.begin()->first;
                    for (const auto& [cat, cnt] : counts)
                        if (cnt > counts[best]) best = cat;
                    fill = best;
                }
                table.rows[r][col].cat = fill;
                table.rows[r][col].missing = false;
            }
        }
    }
}

Dataset one_hot_encode(const RawTable& table) {
    if (table.missing_count() > 0)
        throw std::invalid_argument("one_hot_encode: table has missing cells");
    Dataset ds;
    std::size_t n = table.rows.size();

    // label mapping: sorted distinct raw labels -> 0..M-1
    std::set<std::string> label_set(table.raw_labels.begin(), table.raw_labels.end());
    ds.class_names.assign(label_set.begin(), label_set.end());
    ds.n_classes = static_cast<int>(ds.class_names.size());
    std::map<std::string, int> label_map;
    for (int i = 0; i < ds.n_classes; ++i) label_map[ds.class_names[i]] = i;
    for (const auto& s : table.raw_labels) ds.y.push_back(label_map[s]);

    // feature layout
    struct Col {
        int src;  // index within rows[]
        ColumnKind kind;
        int cat = -1;  // category index for one-hot columns
    };
    std::vector<Col> cols;
    for (std::size_t j = 0; j < table.data_columns.size(); ++j) {
        const auto& cs = table.schema[table.data_columns[j]];
        if (cs.kind == ColumnKind::numerical) {
            cols.push_back({static_cast<int>(j), cs.kind});
            ds.feature_names.push_back(cs.name);
        } else if (cs.kind == ColumnKind::binary) {
            cols.push_back({static_cast<int>(j), cs.kind});
            ds.feature_names.push_back(cs.name);
        } else {
            for (std::size_t c = 0; c < cs.categories.size(); ++c) {
                cols.push_back({static_cast<int>(j), cs.kind, static_cast<int>(c)});
                ds.feature_names.push_back(cs.name + "=" + cs.categories[c]);
            }
        }
    }
    ds.x.resize(n, cols.size());
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t f = 0; f < cols.size(); ++f) {
            const auto& cell = table.rows[r][cols[f].src];
            switch (cols[f].kind) {
                case ColumnKind::numerical: ds.x(r, f) = cell.num; break;
                case ColumnKind::binary: ds.x(r, f) = cell.cat; break;
                default: ds.x(r, f) = (cell.cat == cols[f].cat) ? 1.0 : 0.0;
            }
        }
    }
    if (!ds.x.allFinite()) throw std::runtime_error("one_hot_encode: non-finite values");
    return ds;
}

Dataset subset(const Dataset& ds, const std::vector<int>& indices) {
    Dataset out;
    out.feature_names = ds.feature_names;
    out.class_names = ds.class_names;
    out.n_classes = ds.n_classes;
    out.x.resize(indices.size(), ds.x.cols());
    out.y.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        out.x.row(i) = ds.x.row(indices[i]);
        out.y.push_back(ds.y[indices[i]]);
    }
    return out;
}

Dataset balance_smote(const Dataset& ds, std::uint64_t seed, int knn_k) {
    std::vector<std::vector<int>> by_class(ds.n_classes);
    for (std::size_t i = 0; i < ds.y.size(); ++i) by_class[ds.y[i]].push_back(i);
    std::size_t target = 0;
    for (const auto& v : by_class) target = std::max(target, v.size());

    std::vector<Eigen::RowVectorXd> synth_x;
    std::vector<int> synth_y;
    Rng rng(derive_seed(seed, 0x736d6f7465ULL));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, 1e-3);

    for (int c = 0; c < ds.n_classes; ++c) {
        const auto& members = by_class[c];
        if (members.empty()) continue;
        std::size_t need = target - members.size();
        if (need == 0) continue;
        if (members.size() == 1) {
            // SMOTE needs two parents; duplicate with small jitter instead
            for (std::size_t s = 0; s < need; ++s) {
                Eigen::RowVectorXd row = ds.x.row(members[0]);
                for (Eigen::Index j = 0; j < row.size(); ++j) row(j) += jitter(rng);
                synth_x.push_back(row);
                synth_y.push_back(c);
            }
            continue;
        }
        // neighbor lists within the class
        std::vector<std::vector<int>> neighbors(members.size());
        for (std::size_t i = 0; i < members.size(); ++i) {
            std::vector<std::pair<double, int>> dist;
            for (std::size_t j = 0; j < members.size(); ++j) {
                if (i == j) continue;
                double d = (ds.x.row(members[i]) - ds.x.row(members[j])).squaredNorm();
                dist.push_back({d, members[j]});
            }
            std::sort(dist.begin(), dist.end());
            int k = std::min<int>(knn_k, static_cast<int>(dist.size()));
            for (int m = 0; m < k; ++m) neighbors[i].push_back(dist[m].second);
        }
        for (std::size_t s = 0; s < need; ++s) {
            std::size_t i = s % members.size();
            const auto& nbrs = neighbors[i];
            std::uniform_int_distribution<std::size_t> pick(0, nbrs.size() - 1);
            int j = nbrs[pick(rng)];
            double u = unif(rng);
            Eigen::RowVectorXd row =
                ds.x.row(members[i]) + u * (ds.x.row(j) - ds.x.row(members[i]));
            synth_x.push_back(row);
            synth_y.push_back(c);
        }
    }

    if (synth_x.empty()) return ds;
    Dataset out;
    out.feature_names = ds.feature_names;
    out.class_names = ds.class_names;
    out.n_classes = ds.n_classes;
    out.x.resize(ds.x.rows() + synth_x.size(), ds.x.cols());
    out.x.topRows(ds.x.rows()) = ds.x;
    for (std::size_t i = 0; i < synth_x.size(); ++i)
        out.x.row(ds.x.rows() + i) = synth_x[i];
    out.y = ds.y;
    out.y.insert(out.y.end(), synth_y.begin(), synth_y.end());
    return out;
}

ScaleMode scale_mode_from_name(const std::string& name) {
    if (name == "raw") return ScaleMode::raw;
    if (name == "standard") return ScaleMode::standard;
    if (name == "quantile") return ScaleMode::quantile;
    throw std::invalid_argument("unknown scale mode: " + name);
}

std::string scale_mode_name(ScaleMode mode) {
    switch (mode) {
        case ScaleMode::raw: return "raw";
        case ScaleMode::standard: return "standard";
        case ScaleMode::quantile: return "quantile";
    }
    throw std::logic_error("bad scale mode");
}

ScalerState fit_scaler(const Matrix& x_train, ScaleMode mode) {
    ScalerState st;
    st.mode = mode;
    if (mode == ScaleMode::raw) return st;
    Eigen::Index n = x_train.rows(), m = x_train.cols();
    if (n == 0) throw std::invalid_argument("fit_scaler: empty training matrix");
    if (mode == ScaleMode::standard) {
        st.mean = x_train.colwise().mean();
        st.stddev.resize(m);
        for (Eigen::Index j = 0; j < m; ++j) {
            double var = (x_train.col(j).array() - st.mean(j)).square().mean();
            st.stddev(j) = std::max(std::sqrt(var), 1e-8);
        }
    } else {
        st.references.resize(m);
        for (Eigen::Index j = 0; j < m; ++j) {
            st.references[j].assign(x_train.col(j).data(), x_train.col(j).data() + n);
            std::sort(st.references[j].begin(), st.references[j].end());
        }
    }
    return st;
}

namespace {

double quantile_transform(const std::vector<double>& refs, double v) {
    std::size_t n = refs.size();
    auto lo = std::lower_bound(refs.begin(), refs.end(), v);
    auto hi = std::upper_bound(refs.begin(), refs.end(), v);
    double pos;
    if (lo != hi) {
        // exact ties: average position of the tied block
        pos = 0.5 * (static_cast<double>(lo - refs.begin()) +
                     static_cast<double>(hi - refs.begin() - 1));
    } else if (lo == refs.begin()) {
        pos = 0.0;
    } else if (lo == refs.end()) {
        pos = static_cast<double>(n - 1);
    } else {
        double a = *(lo - 1), b = *lo;
        double frac = (b > a) ? (v - a) / (b - a) : 0.5;
        pos = static_cast<double>(lo - refs.begin() - 1) + frac;
    }
    double p = (pos + 0.5) / static_cast<double>(n);
    p = std::clamp(p, 0.5 / n, 1.0 - 0.5 / n);
    return normal_quantile(p);
}

}  // namespace

Matrix apply_scaler(const ScalerState& st, const Matrix& x) {
    if (st.mode == ScaleMode::raw) return x;
    Matrix out(x.rows(), x.cols());
    if (st.mode == ScaleMode::standard) {
        if (x.cols() != st.mean.size()) throw std::invalid_argument("scaler: width mismatch");
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            out.col(j) = (x.col(j).array() - st.mean(j)) / st.stddev(j);
        return out;
    }
    if (static_cast<std::size_t>(x.cols()) != st.references.size())
        throw std::invalid_argument("scaler: width mismatch");
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index r = 0; r < x.rows(); ++r)
            out(r, j) = quantile_transform(st.references[j], x(r, j));
    return out;
}

double unscale_value(const ScalerState& st, int column, double v) {
    switch (st.mode) {
        case ScaleMode::raw: return v;
        case ScaleMode::standard: return v * st.stddev(column) + st.mean(column);
        case ScaleMode::quantile: {
            const auto& refs = st.references[column];
            double p = normal_cdf(v);
            double pos = p * refs.size() - 0.5;
            pos = std::clamp(pos, 0.0, static_cast<double>(refs.size() - 1));
            std::size_t i = static_cast<std::size_t>(pos);
            double frac = pos - i;
            if (i + 1 >= refs.size()) return refs.back();
            return refs[i] + frac * (refs[i + 1] - refs[i]);
        }
    }
    throw std::logic_error("bad scale mode");
}

SplitPlan split_70_10_20(const std::vector<int>& y, std::uint64_t seed) {
    if (y.size() < 10) throw std::invalid_argument("split: need at least 10 rows");
    SplitPlan plan;
    plan.seed = seed;
    int m = *std::max_element(y.begin(), y.end()) + 1;
    std::vector<std::vector<int>> by_class(m);
    for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
    Rng rng(derive_seed(seed, 0x73706c6974ULL));
    for (int c = 0; c < m; ++c) {
        auto& idx = by_class[c];
        std::shuffle(idx.begin(), idx.end(), rng);
        if (idx.size() < 3) {
            plan.warnings.push_back("class " + std::to_string(c) +
                                    " too small to stratify; placed in train");
            plan.train.insert(plan.train.end(), idx.begin(), idx.end());
            continue;
        }
        std::size_t n_train = static_cast<std::size_t>(std::lround(0.7 * idx.size()));
        std::size_t n_val = static_cast<std::size_t>(std::lround(0.1 * idx.size()));
        n_val = std::max<std::size_t>(n_val, 1);
        if (n_train + n_val >= idx.size()) n_train = idx.size() - n_val - 1;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (i < n_train) plan.train.push_back(idx[i]);
            else if (i < n_train + n_val) plan.val.push_back(idx[i]);
            else plan.test.push_back(idx[i]);
        }
    }
    std::sort(plan.train.begin(), plan.train.end());
    std::sort(plan.val.begin(), plan.val.end());
    std::sort(plan.test.begin(), plan.test.end());
    return plan;
}

std::vector<Fold> stratified_kfold(const std::vector<int>& y, int k, std::uint64_t seed) {
    if (k < 2 || static_cast<std::size_t>(k) > y.size())
        throw std::invalid_argument("kfold: k out of range");
    int m = *std::max_element(y.begin(), y.end()) + 1;
    std::vector<std::vector<int>> by_class(m);
    for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
    for (int c = 0; c < m; ++c)
        if (static_cast<int>(by_class[c].size()) < k)
            throw std::invalid_argument("kfold: k exceeds smallest class count");
    Rng rng(derive_seed(seed, 0x6b666f6c64ULL));
    std::vector<std::vector<int>> fold_members(k);
    for (int c = 0; c < m; ++c) {
        auto& idx = by_class[c];
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t i = 0; i < idx.size(); ++i)
            fold_members[i % k].push_back(idx[i]);
    }
    std::vector<Fold> folds(k);
    for (int f = 0; f < k; ++f) {
        folds[f].val = fold_members[f];
        std::sort(folds[f].val.begin(), folds[f].val.end());
        for (int g = 0; g < k; ++g) {
            if (g == f) continue;
            folds[f].train.insert(folds[f].train.end(), fold_members[g].begin(),
                                  fold_members[g].end());
        }
        std::sort(folds[f].train.begin(), folds[f].train.end());
    }
    return folds;
}

}  // namespace tabkan::data
