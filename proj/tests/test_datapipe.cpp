#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tabkan/dataset.hpp"
#include "support/synth.hpp"

#include <fstream>

using namespace tabkan;
namespace fs = std::filesystem;

namespace {

synth::Paths write_files(const std::string& stem, const std::string& schema,
                         const std::string& csv) {
    fs::path dir = synth::scratch_dir();
    synth::Paths p{(dir / (stem + ".csv")).string(), (dir / (stem + ".schema.json")).string()};
    std::ofstream(p.schema) << schema;
    std::ofstream(p.csv) << csv;
    return p;
}

const char* kSchema = R"({"columns":[
  {"name":"a","kind":"numerical"},
  {"name":"c","kind":"categorical","categories":["red","green"]},
  {"name":"b","kind":"binary","categories":["no","yes"]},
  {"name":"y","kind":"label"}]})";

}  // namespace

TEST_CASE("schema validation") {
    auto p = write_files("schema_ok", kSchema, "a,c,b,y\n");
    auto schema = data::load_schema(p.schema);
    CHECK_NOTHROW(data::validate_schema(schema));

    auto bad = write_files("schema_two_labels",
                           R"({"columns":[{"name":"y1","kind":"label"},{"name":"y2","kind":"label"}]})",
                           "");
    CHECK_THROWS(data::validate_schema(data::load_schema(bad.schema)));

    auto dup = write_files("schema_dup_cats",
                           R"({"columns":[{"name":"c","kind":"categorical","categories":["x","x"]},{"name":"y","kind":"label"}]})",
                           "");
    CHECK_THROWS(data::validate_schema(data::load_schema(dup.schema)));
}

TEST_CASE("csv parsing: identity, sentinel, malformed") {
    auto p = write_files("csv_basic", kSchema,
                         "a,c,b,y\n1.5,red,yes,p\n2.5,green,no,q\n3.5,red,yes,p\n");
    auto schema = data::load_schema(p.schema);
    auto table = data::load_csv(p.csv, schema);
    CHECK(table.rows.size() == 3);
    CHECK(table.missing_count() == 0);
    CHECK(table.rows[0][0].num == doctest::Approx(1.5));
    CHECK(table.rows[1][1].cat == 1);
    CHECK(table.raw_labels[2] == "p");

    auto q = write_files("csv_missing", kSchema, "a,c,b,y\n?,red,yes,p\n2.0,?,no,q\n");
    auto t2 = data::load_csv(q.csv, data::load_schema(q.schema));
    CHECK(t2.missing_count() == 2);
    CHECK(t2.rows[0][0].missing);
    CHECK(t2.rows[1][1].missing);

    auto bad = write_files("csv_malformed", kSchema, "a,c,b,y\n1.0,red,yes\n");
    CHECK_THROWS_WITH_AS(data::load_csv(bad.csv, data::load_schema(bad.schema)),
                         doctest::Contains("malformed"), std::runtime_error);

    auto badnum = write_files("csv_badnum", kSchema, "a,c,b,y\nxyz,red,yes,p\n");
    CHECK_THROWS(data::load_csv(badnum.csv, data::load_schema(badnum.schema)));

    auto badcat = write_files("csv_badcat", kSchema, "a,c,b,y\n1.0,blue,yes,p\n");
    CHECK_THROWS(data::load_csv(badcat.csv, data::load_schema(badcat.schema)));
}

TEST_CASE("imputation: class mean, knn mode, identity") {
    auto p = write_files("imp1", kSchema,
                         "a,c,b,y\n1,red,yes,p\n?,red,yes,p\n3,red,no,p\n10,green,no,q\n");
    auto table = data::load_csv(p.csv, data::load_schema(p.schema));
    data::impute(table);
    CHECK(table.missing_count() == 0);
    CHECK(table.rows[1][0].num == doctest::Approx(2.0));  // class-p mean of {1,3}

    // categorical knn mode within same class
    auto q = write_files("imp2", kSchema,
                         "a,c,b,y\n1.0,red,yes,p\n1.1,red,yes,p\n1.2,green,yes,p\n1.05,?,yes,p\n");
    auto t2 = data::load_csv(q.csv, data::load_schema(q.schema));
    data::impute(t2, 3);
    CHECK(t2.rows[3][1].cat == 0);  // mode of {red, red, green} -> red

    // no missing -> unchanged
    auto r = write_files("imp3", kSchema, "a,c,b,y\n5,green,no,p\n6,red,yes,q\n");
    auto t3 = data::load_csv(r.csv, data::load_schema(r.schema));
    auto copy = t3;
    data::impute(t3);
    CHECK(t3.rows[0][0].num == copy.rows[0][0].num);
    CHECK(t3.rows[1][1].cat == copy.rows[1][1].cat);
}

TEST_CASE("one-hot encoding layout and label ordering") {
    auto p = write_files("enc", kSchema,
                         "a,c,b,y\n1,red,yes,zeta\n2,green,no,alpha\n3,red,yes,zeta\n");
    auto table = data::load_csv(p.csv, data::load_schema(p.schema));
    auto ds = data::one_hot_encode(table);
    // a + 2 categories + binary = 4 columns
    CHECK(ds.x.cols() == 4);
    CHECK(ds.feature_names[1] == "c=red");
    CHECK(ds.feature_names[2] == "c=green");
    CHECK(ds.x(0, 1) == 1.0);
    CHECK(ds.x(0, 2) == 0.0);
    CHECK(ds.x(1, 1) == 0.0);
    CHECK(ds.x(1, 2) == 1.0);
    CHECK(ds.x(0, 3) == 1.0);  // yes
    CHECK(ds.x(1, 3) == 0.0);
    // labels sorted lexicographically: alpha=0, zeta=1
    CHECK(ds.y == std::vector<int>{1, 0, 1});
    CHECK(ds.n_classes == 2);
    CHECK(ds.class_names == std::vector<std::string>{"alpha", "zeta"});
}

TEST_CASE("smote balances and synthesizes on segments between parents") {
    auto ds = synth::toy_dataset(14, 3, 2, 5);
    // make it 10 vs 4
    data::Dataset imb;
    imb.n_classes = 2;
    imb.feature_names = ds.feature_names;
    imb.class_names = ds.class_names;
    std::vector<int> keep;
    int minority = 0;
    for (int i = 0; i < 14; ++i) {
        if (ds.y[i] == 1 && minority >= 4) continue;
        if (ds.y[i] == 1) ++minority;
        keep.push_back(i);
    }
    imb = data::subset(ds, keep);
    auto bal = data::balance_smote(imb, 99);
    int c0 = 0, c1 = 0;
    for (int y : bal.y) (y ? c1 : c0)++;
    CHECK(c0 == c1);
    // synthetic rows (beyond the original ones) lie on a segment between
    // two minority parents
    for (Eigen::Index r = imb.x.rows(); r < bal.x.rows(); ++r) {
        CHECK(bal.y[r] == 1);
        double best = 1e9;
        for (Eigen::Index i = 0; i < imb.x.rows(); ++i) {
            if (imb.y[i] != 1) continue;
            for (Eigen::Index j = 0; j < imb.x.rows(); ++j) {
                if (imb.y[j] != 1 || i == j) continue;
                Vector a = imb.x.row(i), b = imb.x.row(j), s = bal.x.row(r);
                Vector ab = b - a;
                double t = ab.squaredNorm() > 0 ? (s - a).dot(ab) / ab.squaredNorm() : 0.0;
                if (t < -1e-9 || t > 1.0 + 1e-9) continue;
                best = std::min(best, (s - (a + t * ab)).norm());
            }
        }
        CHECK(best < 1e-9);
    }
    // balanced input returned unchanged
    auto again = data::balance_smote(bal, 7);
    CHECK(again.x.rows() == bal.x.rows());
    // determinism
    auto bal2 = data::balance_smote(imb, 99);
    CHECK((bal.x - bal2.x).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("smote minority of size one falls back to jitter") {
    data::Dataset ds;
    ds.n_classes = 2;
    ds.x.resize(4, 2);
    ds.x << 0, 0, 1, 1, 2, 2, 5, 5;
    ds.y = {0, 0, 0, 1};
    ds.feature_names = {"f0", "f1"};
    ds.class_names = {"a", "b"};
    auto bal = data::balance_smote(ds, 3);
    int c1 = 0;
    for (int y : bal.y) c1 += y;
    CHECK(c1 == 3);
    for (Eigen::Index r = 4; r < bal.x.rows(); ++r)
        CHECK((bal.x.row(r) - ds.x.row(3)).norm() < 0.1);  // jitter sigma 1e-3
}

TEST_CASE("scalers: standard, quantile, raw") {
    Matrix x(3, 2);
    x << 1, 10, 2, 10, 3, 10;
    auto st = data::fit_scaler(x, data::ScaleMode::standard);
    Matrix xs = data::apply_scaler(st, x);
    CHECK(xs(0, 0) == doctest::Approx(-1.2247).epsilon(1e-3));
    CHECK(xs(1, 0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(xs(2, 0) == doctest::Approx(1.2247).epsilon(1e-3));
    CHECK(std::abs(xs(0, 1)) < 1e-6);  // constant column floored to ~0

    auto qt = data::fit_scaler(x, data::ScaleMode::quantile);
    Matrix xq = data::apply_scaler(qt, x);
    CHECK(xq(1, 0) == doctest::Approx(0.0).epsilon(1e-9));  // median -> 0
    CHECK(xq(0, 0) < 0.0);
    CHECK(xq(2, 0) > 0.0);

    auto raw = data::fit_scaler(x, data::ScaleMode::raw);
    CHECK((data::apply_scaler(raw, x) - x).lpNorm<Eigen::Infinity>() == 0.0);

    // inverse of a standard-scaled value
    CHECK(data::unscale_value(st, 0, xs(0, 0)) == doctest::Approx(1.0));
}

TEST_CASE("scaler never consults non-training rows") {
    Matrix train = Matrix::Random(20, 3);
    auto st = data::fit_scaler(train, data::ScaleMode::standard);
    Matrix test1 = Matrix::Random(5, 3);
    Matrix test2 = 1000.0 * Matrix::Random(5, 3);
    auto st2 = data::fit_scaler(train, data::ScaleMode::standard);
    CHECK((st.mean - st2.mean).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((data::apply_scaler(st, test1) - data::apply_scaler(st2, test1))
              .lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("70/10/20 split: proportions, determinism, warnings") {
    std::vector<int> y(100);
    for (int i = 0; i < 100; ++i) y[i] = i % 2;
    auto plan = data::split_70_10_20(y, 5);
    CHECK(plan.train.size() == 70);
    CHECK(plan.val.size() == 10);
    CHECK(plan.test.size() == 20);
    int tr1 = 0;
    for (int i : plan.train) tr1 += y[i];
    CHECK(tr1 == 35);
    // disjoint cover
    std::vector<int> all = plan.train;
    all.insert(all.end(), plan.val.begin(), plan.val.end());
    all.insert(all.end(), plan.test.begin(), plan.test.end());
    std::sort(all.begin(), all.end());
    for (int i = 0; i < 100; ++i) CHECK(all[i] == i);

    auto plan2 = data::split_70_10_20(y, 5);
    CHECK(plan.train == plan2.train);
    bool any_diff = false;
    for (std::uint64_t s = 6; s < 16; ++s)
        any_diff = any_diff || data::split_70_10_20(y, s).train != plan.train;
    CHECK(any_diff);

    // class with < 3 samples goes fully to train with a warning
    std::vector<int> y2(20, 0);
    y2[7] = 1;
    y2[13] = 1;
    auto plan3 = data::split_70_10_20(y2, 1);
    CHECK(!plan3.warnings.empty());
    int in_train = 0;
    for (int i : plan3.train) in_train += y2[i];
    CHECK(in_train == 2);
}

TEST_CASE("stratified k-fold partitions with balanced class shares") {
    std::vector<int> y(100);
    for (int i = 0; i < 100; ++i) y[i] = i % 4;
    auto folds = data::stratified_kfold(y, 5, 3);
    REQUIRE(folds.size() == 5);
    std::vector<int> seen(100, 0);
    for (const auto& f : folds) {
        CHECK(f.val.size() == 20);
        for (int i : f.val) seen[i]++;
        int per_class[4] = {0, 0, 0, 0};
        for (int i : f.val) per_class[y[i]]++;
        for (int c = 0; c < 4; ++c) CHECK(std::abs(per_class[c] - 5) <= 1);
        // train+val disjoint cover
        CHECK(f.train.size() + f.val.size() == 100);
    }
    for (int s : seen) CHECK(s == 1);
    CHECK_THROWS(data::stratified_kfold(std::vector<int>{0, 0, 0, 1}, 3, 1));
}

TEST_CASE("full synthetic pipeline produces a finite, clean matrix") {
    auto p = synth::write_credit_like("pipe_cg", 300, 17);
    auto schema = data::load_schema(p.schema);
    data::validate_schema(schema);
    auto table = data::load_csv(p.csv, schema);
    CHECK(table.missing_count() > 0);
    data::impute(table);
    CHECK(table.missing_count() == 0);
    auto ds = data::one_hot_encode(table);
    CHECK(ds.x.allFinite());
    CHECK(ds.n_classes == 2);
    CHECK(static_cast<std::size_t>(ds.x.rows()) == ds.y.size());
}
