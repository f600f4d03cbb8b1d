#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "tsad/dataset.hpp"
#include "tsad/rng.hpp"

using namespace tsad;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
    const auto path = std::filesystem::temp_directory_path() / ("tsad_test_" + name);
    std::ofstream(path) << contents;
    return path;
}

MultivariateSeries series_from(Tensor values) {
    MultivariateSeries s;
    s.values = std::move(values);
    for (std::size_t j = 0; j < s.variables(); ++j) s.variable_names.push_back("x" + std::to_string(j));
    return s;
}

// Cyclic Jacobi eigenvalue iteration for a small symmetric matrix, written
// independently of the library's solver. Returns eigenvalues (unsorted) and
// eigenvectors as columns of `vectors`.
void jacobi_eigen(std::vector<std::vector<double>> a, std::vector<double>& values,
                  std::vector<std::vector<double>>& vectors) {
    const std::size_t n = a.size();
    vectors.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) vectors[i][i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = vectors[k][p], vkq = vectors[k][q];
                    vectors[k][p] = c * vkp - s * vkq;
                    vectors[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    values.resize(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = a[i][i];
}

std::vector<std::vector<double>> sample_covariance(const Tensor& x) {
    const std::size_t m = x.dim(0), t = x.dim(1);
    std::vector<double> mean(t, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < t; ++j) mean[j] += x(i, j) / static_cast<double>(m);
    std::vector<std::vector<double>> cov(t, std::vector<double>(t, 0.0));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t a = 0; a < t; ++a)
            for (std::size_t b = 0; b < t; ++b) cov[a][b] += (x(i, a) - mean[a]) * (x(i, b) - mean[b]) / double(m - 1);
    return cov;
}

} // namespace

TEST_CASE("load_csv parses values and labels") {
    const auto path = temp_file("basic.csv", "a,b,c,label\n1,2,3,0\n4,5,6,0\n7,8,9,1\n1.5,-2e-3,0,0\n");
    const MultivariateSeries s = load_csv(path, "label");
    CHECK(s.length() == 4);
    CHECK(s.variables() == 3);
    CHECK(s.values(3, 1) == -2e-3);
    REQUIRE(s.labels);
    CHECK(*s.labels == LabelSeq{0, 0, 1, 0});
    CHECK(s.variable_names == std::vector<std::string>{"a", "b", "c"});

    const MultivariateSeries unlabeled = load_csv(path);
    CHECK(unlabeled.variables() == 4);
    CHECK_FALSE(unlabeled.labels);
}

TEST_CASE("load_csv errors") {
    std::string rows = "a,b\n";
    for (int i = 1; i <= 6; ++i) rows += std::to_string(i) + ",1\n";
    rows += "abc,2\n";
    const auto bad_cell = temp_file("bad_cell.csv", rows);
    try {
        load_csv(bad_cell);
        FAIL("expected an error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("row 7") != std::string::npos);
        CHECK(std::string(e.what()).find("abc") != std::string::npos);
    }
    CHECK_THROWS(load_csv(temp_file("ragged.csv", "a,b\n1,2\n3\n")));
    CHECK_THROWS(load_csv(temp_file("labels.csv", "a,label\n1,0\n2,2\n"), "label"));
    CHECK_THROWS(load_csv(temp_file("nan.csv", "a\nnan\n")));
    CHECK_THROWS(load_csv("/nonexistent/file.csv"));
}

TEST_CASE("save_csv round trip is exact") {
    Rng rng(3);
    MultivariateSeries s = series_from(sample_normal(rng, {20, 3}));
    s.labels = LabelSeq(20, 0);
    (*s.labels)[5] = 1;
    const auto path = std::filesystem::temp_directory_path() / "tsad_test_roundtrip.csv";
    save_csv(s, path);
    const MultivariateSeries back = load_csv(path, "label");
    CHECK(back.values == s.values);
    CHECK(back.labels == s.labels);
    CHECK(back.variable_names == s.variable_names);
}

TEST_CASE("min-max normalizer") {
    const MultivariateSeries s = series_from(Tensor::matrix({{1, 2, 10}, {3, 2, -4}, {5, 2, 0}}));
    const NormalizationState n = fit_normalizer(s);
    CHECK(n.min == std::vector<double>{1, 2, -4});
    CHECK(n.max == std::vector<double>{5, 2, 10});
    const MultivariateSeries z = normalize(s, n);
    CHECK(z.values(2, 0) == 1.0);
    CHECK(z.values(0, 0) == -1.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(z.values(i, 1) == 0.0);
    for (double v : z.values.values()) CHECK(std::abs(v) <= 1.0);
    CHECK_THROWS_AS(normalize(series_from(Tensor({2, 2})), n), std::invalid_argument);
}

TEST_CASE("normalize then denormalize recovers the input") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor v = sample_normal(rng, {50, 4});
        for (double& x : v.values()) x = 100.0 * x + 7.0;
        const MultivariateSeries s = series_from(v);
        const NormalizationState n = fit_normalizer(s);
        const MultivariateSeries back = denormalize(normalize(s, n), n);
        for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(back.values[i] - v[i]) <= 1e-10 * std::abs(v[i]));
    }
}

TEST_CASE("PCA of perfectly correlated points") {
    const MultivariateSeries s = series_from(Tensor::matrix({{0, 0}, {1, 1}, {2, 2}, {-3, -3}, {5, 5}}));
    const PcaState p = fit_pca(s, 2);
    CHECK(p.variance_ratio[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(p.variance_ratio[1]) < 1e-12);
    CHECK(std::abs(p.components(0, 0)) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(p.components(0, 0) == doctest::Approx(p.components(0, 1)).epsilon(1e-12));
}

TEST_CASE("PCA matches an independent Jacobi eigensolver") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor x = sample_normal(rng, {200, 4});
        // Mix columns so the spectrum is not flat.
        for (std::size_t i = 0; i < 200; ++i) {
            x(i, 1) += 0.8 * x(i, 0);
            x(i, 3) = 0.3 * x(i, 3) - 0.5 * x(i, 2);
        }
        const PcaState p = fit_pca(series_from(x), 4);

        std::vector<double> values;
        std::vector<std::vector<double>> vectors;
        jacobi_eigen(sample_covariance(x), values, vectors);
        std::vector<std::size_t> order{0, 1, 2, 3};
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] > values[b]; });
        double total = 0.0;
        for (double v : values) total += v;

        for (std::size_t r = 0; r < 4; ++r) {
            CHECK(p.variance_ratio[r] == doctest::Approx(values[order[r]] / total).epsilon(1e-9));
            // Axes agree up to sign.
            double d = 0.0;
            for (std::size_t j = 0; j < 4; ++j) d += p.components(r, j) * vectors[j][order[r]];
            CHECK(std::abs(d) == doctest::Approx(1.0).epsilon(1e-8));
        }
    }
}

TEST_CASE("isotropic Gaussian splits variance evenly") {
    Rng rng(2024);
    const PcaState p = fit_pca(series_from(sample_normal(rng, {2000, 2})), 2);
    CHECK(std::abs(p.variance_ratio[0] - 0.5) < 0.05);
    CHECK(std::abs(p.variance_ratio[1] - 0.5) < 0.05);
}

TEST_CASE("PCA invariants on random data") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t t = 2 + rng.below(6);
        const std::size_t k = 1 + rng.below(t);
        const PcaState p = fit_pca(series_from(sample_normal(rng, {30 + rng.below(50), t})), k);
        double sum = 0.0;
        for (std::size_t a = 0; a < k; ++a) {
            sum += p.variance_ratio[a];
            CHECK(p.variance_ratio[a] >= 0.0);
            CHECK(p.variance_ratio[a] <= 1.0);
            if (a > 0) CHECK(p.variance_ratio[a] <= p.variance_ratio[a - 1]);
            for (std::size_t b = 0; b < k; ++b) {
                double g = 0.0;
                for (std::size_t j = 0; j < t; ++j) g += p.components(a, j) * p.components(b, j);
                CHECK(std::abs(g - (a == b ? 1.0 : 0.0)) < 1e-8);
            }
        }
        CHECK(sum <= 1.0 + 1e-8);
    }
}

TEST_CASE("project and reconstruct") {
    Rng rng(12);
    const MultivariateSeries s = series_from(sample_normal(rng, {40, 5}));
    const PcaState full = fit_pca(s, 5);
    const MultivariateSeries back = reconstruct(project(s, full), full);
    for (std::size_t i = 0; i < s.values.size(); ++i) CHECK(std::abs(back.values[i] - s.values[i]) < 1e-8);

    Tensor mean_row({1, 5});
    for (std::size_t j = 0; j < 5; ++j) mean_row[j] = full.mean[j];
    const MultivariateSeries zero = project(series_from(mean_row), fit_pca(s, 3));
    for (double v : zero.values.values()) CHECK(std::abs(v) < 1e-12);

    CHECK_THROWS_AS(fit_pca(s, 6), std::invalid_argument);
    CHECK_THROWS_AS(fit_pca(s, 0), std::invalid_argument);
    CHECK_THROWS_AS(project(series_from(Tensor({2, 4})), full), std::invalid_argument);
}

TEST_CASE("rank-1 reconstruction error equals the discarded variance") {
    // Oracle: with k = 1 the summed squared residual over all rows equals
    // (M - 1) times the sum of the discarded covariance eigenvalues.
    Rng rng(21);
    Tensor x = sample_normal(rng, {300, 3});
    for (std::size_t i = 0; i < 300; ++i) x(i, 0) = 3.0 * x(i, 0) + x(i, 1);
    const MultivariateSeries s = series_from(x);
    const PcaState p = fit_pca(s, 1);
    const MultivariateSeries back = reconstruct(project(s, p), p);
    double residual = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) residual += (x[i] - back.values[i]) * (x[i] - back.values[i]);

    std::vector<double> values;
    std::vector<std::vector<double>> vectors;
    jacobi_eigen(sample_covariance(x), values, vectors);
    std::sort(values.begin(), values.end());
    CHECK(residual == doctest::Approx(299.0 * (values[0] + values[1])).epsilon(1e-9));
}

TEST_CASE("components_for_variance") {
    CHECK(components_for_variance({0.6, 0.3, 0.1}, 0.5) == 1);
    CHECK(components_for_variance({0.6, 0.3, 0.1}, 0.9) == 2);
    CHECK(components_for_variance({0.6, 0.3, 0.1}, 0.995) == 3);
}

TEST_CASE("sliding windows") {
    SUBCASE("count and starts") {
        const WindowSet w = make_windows(series_from(Tensor({100, 2})), 30, 10);
        CHECK(w.count() == 8);
        CHECK(w.start_indices.front() == 0);
        CHECK(w.start_indices.back() == 70);
        CHECK(w.windows.shape() == Shape{8, 30, 2});
        CHECK(make_windows(series_from(Tensor({30, 1})), 30, 10).count() == 1);
        CHECK(window_count(35, 30, 10) == 1);
    }
    SUBCASE("contents") {
        const WindowSet w = make_windows(series_from(Tensor({4, 1}, {1, 2, 3, 4})), 3, 1);
        CHECK(w.windows == Tensor({2, 3, 1}, {1, 2, 3, 2, 3, 4}));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(make_windows(series_from(Tensor({20, 1})), 30, 10), std::invalid_argument);
        CHECK_THROWS_AS(make_windows(series_from(Tensor({20, 1})), 0, 1), std::invalid_argument);
        CHECK_THROWS_AS(make_windows(series_from(Tensor({20, 1})), 5, 0), std::invalid_argument);
    }
}

TEST_CASE("window rows equal source rows for random geometries") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t m = 1 + rng.below(200);
        const std::size_t d = 1 + rng.below(4);
        const std::size_t sw = 1 + rng.below(m);
        const std::size_t ss = 1 + rng.below(20);
        const MultivariateSeries s = series_from(sample_normal(rng, {m, d}));
        const WindowSet w = make_windows(s, sw, ss);
        CHECK(w.count() == (m - sw) / ss + 1);
        for (std::size_t i = 0; i < w.count(); ++i) {
            CHECK(w.start_indices[i] == i * ss);
            for (std::size_t k = 0; k < sw; ++k)
                for (std::size_t j = 0; j < d; ++j) CHECK(w.windows(i, k, j) == s.values(i * ss + k, j));
        }
    }
}

TEST_CASE("feature pipeline keeps projected training data inside [-1, 1]") {
    Rng rng(4);
    Tensor x = sample_normal(rng, {300, 3});
    for (std::size_t i = 0; i < 300; ++i) x(i, 2) = 2.0 * x(i, 0) - x(i, 1) + 0.01 * x(i, 2);
    const MultivariateSeries s = series_from(x);
    const FeaturePipeline p = fit_pipeline(s, {PcaChoice::Mode::fixed, 2, 0.995});
    CHECK(p.output_dim() == 2);
    const MultivariateSeries out = apply_pipeline(s, p);
    for (double v : out.values.values()) CHECK(std::abs(v) <= 1.0 + 1e-12);
    CHECK(fit_pipeline(s, {PcaChoice::Mode::variance, 0, 0.995}).output_dim() == 2);
    CHECK(fit_pipeline(s, {PcaChoice::Mode::none, 0, 0.995}).output_dim() == 3);
}
