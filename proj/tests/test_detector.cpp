#include "doctest.h"

#include <cmath>

#include "tsad/detector.hpp"

using namespace tsad;

namespace {

GanModel random_model(std::size_t data_dim, std::size_t window, std::uint64_t seed) {
    GanModel m;
    m.latent_dim = 4;
    m.window_size = window;
    m.window_step = 1;
    Rng rng(seed);
    m.generator = init_params(rng, {4, 8, 2, data_dim});
    m.discriminator = init_params(rng, {data_dim, 6, 1, 1});
    return m;
}

// Straight enumeration of every (window, offset) landing on each timestep.
Remap remap_oracle(const Tensor& losses, std::size_t step, std::size_t length) {
    Remap out{std::vector<double>(length, 0.0), std::vector<std::size_t>(length, 0)};
    for (std::size_t t = 0; t < length; ++t) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t j = 0; j < losses.dim(0); ++j) {
            for (std::size_t s = 0; s < losses.dim(1); ++s) {
                if (j * step + s == t) {
                    sum += losses(j, s);
                    ++count;
                }
            }
        }
        out.values[t] = count ? sum / static_cast<double>(count) : 0.0;
        out.coverage[t] = count;
    }
    return out;
}

std::vector<std::size_t> starts(std::size_t n, std::size_t step) {
    std::vector<std::size_t> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = j * step;
    return out;
}

} // namespace

TEST_CASE("remap of a hand-worked example") {
    const Tensor losses = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
    const Remap r = drs_remap(losses, starts(2, 1), 1, 4);
    CHECK(r.values == std::vector<double>{1.0, 3.0, 4.0, 6.0});
    CHECK(r.coverage == std::vector<std::size_t>{1, 2, 2, 1});
}

TEST_CASE("constant losses remap to the constant") {
    const Tensor losses({5, 7}, 0.37);
    const Remap r = drs_remap(losses, starts(5, 3), 3, 25);
    for (std::size_t t = 0; t < 25; ++t) {
        if (t < 4 * 3 + 7) {
            CHECK(r.values[t] == doctest::Approx(0.37).epsilon(1e-15));
            CHECK(r.coverage[t] >= 1);
        } else {
            CHECK(r.coverage[t] == 0);
        }
    }
}

TEST_CASE("remap equals enumeration for random geometries") {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t sw = 1 + rng.below(40);
        const std::size_t ss = 1 + rng.below(15);
        const std::size_t length = sw + rng.below(500 - sw + 1);
        const std::size_t n = window_count(length, sw, ss);
        const Tensor losses = sample_normal(rng, {n, sw});
        const Remap fast = drs_remap(losses, starts(n, ss), ss, length);
        const Remap slow = remap_oracle(losses, ss, length);
        CHECK(fast.values == slow.values);
        CHECK(fast.coverage == slow.coverage);
    }
}

TEST_CASE("remap geometry errors") {
    const Tensor losses({2, 3});
    CHECK_THROWS_AS(drs_remap(losses, std::vector<std::size_t>{0, 2}, 1, 10), std::invalid_argument);
    CHECK_THROWS_AS(drs_remap(losses, starts(2, 1), 1, 3), std::invalid_argument);
    CHECK_THROWS_AS(drs_remap(losses, starts(3, 1), 1, 10), std::invalid_argument);
}

TEST_CASE("residual") {
    const Tensor x = Tensor::matrix({{0.5, 1.0}, {0.0, 0.0}});
    CHECK(residual(x, x) == std::vector<double>{0.0, 0.0});
    const Tensor y = Tensor::matrix({{0.0, 1.5}, {0.25, 0.0}});
    CHECK(residual(x, y) == std::vector<double>{1.0, 0.25});
    const Tensor y2 = Tensor::matrix({{-0.5, 2.0}, {0.5, 0.0}});
    CHECK(residual(x, y2) == std::vector<double>{2.0, 0.5});
    CHECK_THROWS_AS(residual(x, Tensor({2, 3})), std::invalid_argument);
}

TEST_CASE("combined loss degenerate and convex cases") {
    Rng rng(3);
    std::vector<double> res(20), disc(20);
    for (std::size_t i = 0; i < 20; ++i) {
        res[i] = rng.uniform();
        disc[i] = rng.uniform();
    }
    CHECK(combined_loss(res, disc, 1.0) == res);
    CHECK(combined_loss(res, disc, 0.0) == disc);
    CHECK(combined_loss(std::vector<double>{0.4}, std::vector<double>{0.8}, 0.5)[0] == doctest::Approx(0.6));
    CHECK_THROWS_AS(combined_loss(res, disc, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(combined_loss(res, disc, -0.1), std::invalid_argument);
}

TEST_CASE("min-max scaling and discrimination loss") {
    const std::vector<double> v{2.0, 4.0, 3.0};
    CHECK(minmax_scale(v) == std::vector<double>{0.0, 1.0, 0.5});
    CHECK(minmax_scale(std::vector<double>{3.0, 3.0}) == std::vector<double>{0.0, 0.0});
    CHECK(discrimination_loss(0.5) == doctest::Approx(std::log(2.0)));
    CHECK(discrimination_loss(1e-300) == doctest::Approx(-std::log(1e-7)));
    CHECK(discrimination_loss(0.9) < discrimination_loss(0.1));
}

TEST_CASE("threshold labels") {
    ScoreSeries s;
    s.drs = {0.1, 0.9, 0.5, 0.0};
    s.residual_part = s.discrimination_part = s.drs;
    s.coverage = {1, 2, 1, 0};
    const LabelVector a = threshold_labels(s, 0.4);
    CHECK(a.labels == LabelSeq{0, 1, 1, 0});
    CHECK(a.uncovered == std::vector<bool>{false, false, false, true});
    CHECK(threshold_labels(s, -1e9).labels == LabelSeq{1, 1, 1, 0});
    CHECK(threshold_labels(s, 10.0).positives() == 0);
    CHECK_THROWS(threshold_labels(s, NAN));
}

TEST_CASE("thresholding is monotone in tau") {
    Rng rng(6);
    ScoreSeries s;
    for (int i = 0; i < 300; ++i) {
        s.drs.push_back(rng.uniform());
        s.coverage.push_back(rng.below(4));
    }
    for (int trial = 0; trial < 50; ++trial) {
        double t1 = rng.uniform(), t2 = rng.uniform();
        if (t1 > t2) std::swap(t1, t2);
        const LabelVector lo = threshold_labels(s, t1);
        const LabelVector hi = threshold_labels(s, t2);
        for (std::size_t t = 0; t < s.length(); ++t) {
            CHECK(hi.labels[t] <= lo.labels[t]);
            if (hi.uncovered[t]) CHECK(hi.labels[t] == 0);
        }
    }
}

TEST_CASE("quantile") {
    CHECK(quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
    CHECK(quantile({1.0, 2.0}, 0.25) == 1.25);
    CHECK(quantile({5.0}, 0.99) == 5.0);
    CHECK_THROWS(quantile({}, 0.5));
}

TEST_CASE("reconstruction error") {
    const Tensor x = Tensor::matrix({{1, 0}, {0, 1}});
    CHECK(reconstruction_error(x, x, Similarity::cosine) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(reconstruction_error(x, scale(x, 3.0), Similarity::cosine) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(reconstruction_error(x, scale(x, -1.0), Similarity::cosine) == doctest::Approx(2.0));
    CHECK(reconstruction_error(x, Tensor({2, 2}), Similarity::neg_mse) == doctest::Approx(0.5));
}

TEST_CASE("inversion never increases the error") {
    const GanModel m = random_model(2, 6, 11);
    Rng rng(4);
    const Tensor windows = sample_normal(rng, {5, 6, 2});
    for (Similarity sim : {Similarity::cosine, Similarity::neg_mse}) {
        for (std::size_t iterations : {1, 10}) {
            InversionConfig c;
            c.iterations = iterations;
            c.similarity = sim;
            const std::vector<Inversion> inv = invert_windows(m, windows, c, rng);
            REQUIRE(inv.size() == 5);
            for (const Inversion& i : inv) {
                CHECK(i.restart_final_errors.size() == 3);
                for (std::size_t r = 0; r < 3; ++r) CHECK(i.restart_final_errors[r] <= i.restart_initial_errors[r]);
                CHECK(i.error <= i.initial_error);
                CHECK(i.error == *std::min_element(i.restart_final_errors.begin(), i.restart_final_errors.end()));
                CHECK(i.reconstruction.shape() == Shape{6, 2});
                CHECK(i.latent.shape() == Shape{6, 4});
            }
        }
    }
}

TEST_CASE("inversion recovers windows produced by the generator") {
    const GanModel m = random_model(2, 8, 5);
    Rng rng(21);
    const Tensor z0 = sample_latent(rng, 6, 8, 4);
    const Tensor targets = generate_from(m, z0);
    InversionConfig c;
    const std::vector<Inversion> inv = invert_windows(m, targets, c, rng);
    for (std::size_t i = 0; i < inv.size(); ++i) {
        CHECK(inv[i].error < inv[i].initial_error);
        CHECK(inv[i].error < 0.05);
        const Tensor x = gather_windows(targets, {i}).reshaped({8, 2});
        CHECK(reconstruction_error(x, inv[i].reconstruction, Similarity::cosine) == doctest::Approx(inv[i].error));
    }
}

TEST_CASE("batched inversion equals one window at a time") {
    const GanModel m = random_model(1, 5, 8);
    Rng data(1);
    const Tensor windows = sample_normal(data, {7, 5, 1});
    InversionConfig c;
    c.iterations = 8;
    c.chunk_size = 3;
    Rng a(99), b(99);
    const std::vector<Inversion> batched = invert_windows(m, windows, c, a);
    c.chunk_size = 1;
    const std::vector<Inversion> single = invert_windows(m, windows, c, b);
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(batched[i].error == single[i].error);
        CHECK(batched[i].latent == single[i].latent);
    }
    Rng c1(5);
    const Inversion one = invert_window(m, gather_windows(windows, {0}).reshaped({5, 1}), c, c1);
    CHECK(std::isfinite(one.error));
}

TEST_CASE("inversion config validation") {
    const GanModel m = random_model(1, 5, 8);
    Rng rng(1);
    InversionConfig c;
    c.iterations = 0;
    CHECK_THROWS_AS(invert_window(m, Tensor({5, 1}), c, rng), std::invalid_argument);
    c = InversionConfig{};
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(invert_window(m, Tensor({5, 1}), c, rng), std::invalid_argument);
    CHECK_THROWS_AS(invert_window(m, Tensor({5, 2}), InversionConfig{}, rng), std::invalid_argument);
}

TEST_CASE("combined scores keep the convex-combination invariant") {
    Rng rng(14);
    WindowSet w;
    w.window_size = 6;
    w.step = 2;
    w.origin_length = 21;
    w.start_indices = starts(window_count(21, 6, 2), 2);
    const std::size_t n = w.start_indices.size();
    w.windows = Tensor({n, 6, 1});
    WindowScores scores{sample_normal(rng, {n, 6}), sample_normal(rng, {n, 6}), std::vector<double>(n)};
    for (double lambda : {0.0, 0.3, 0.5, 1.0}) {
        const ScoreSeries s = combine_scores(scores, w, lambda);
        CHECK(s.length() == 21);
        for (std::size_t t = 0; t < 21; ++t) {
            CHECK(s.drs[t] == lambda * s.residual_part[t] + (1.0 - lambda) * s.discrimination_part[t]);
            CHECK(std::isfinite(s.drs[t]));
            CHECK(s.residual_part[t] >= 0.0);
            CHECK(s.residual_part[t] <= 1.0);
        }
        CHECK_FALSE(s.covered(20));
        CHECK(s.covered(19));
    }
}
