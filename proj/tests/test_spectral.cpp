#include "meg/spectral.hpp"

#include "meg/errors.hpp"
#include "testutil.hpp"

#include "doctest.h"

using namespace meg;
using megtest::dense_spectrum;

namespace {

ProjectedNetwork single_edge() {
    return make_projected_network({"a", "b"}, {{0, 1, 1.0}}, "edge");
}

}  // namespace

TEST_CASE("normalized Laplacian of a single edge") {
    LaplacianResult lap = normalized_laplacian(single_edge());
    CHECK(lap.dropped.empty());
    CHECK(lap.matrix.coeff(0, 0) == doctest::Approx(1.0));
    CHECK(lap.matrix.coeff(0, 1) == doctest::Approx(-1.0));
    CHECK(lap.matrix.coeff(1, 0) == doctest::Approx(-1.0));
    CHECK(lap.matrix.coeff(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("normalized Laplacian of a path has -1/sqrt(2) couplings") {
    LaplacianResult lap = normalized_laplacian(megtest::path_graph(3));
    const double c = 1.0 / std::sqrt(2.0);
    CHECK(lap.matrix.coeff(0, 0) == doctest::Approx(1.0));
    CHECK(lap.matrix.coeff(1, 1) == doctest::Approx(1.0));
    CHECK(lap.matrix.coeff(0, 1) == doctest::Approx(-c));
    CHECK(lap.matrix.coeff(1, 2) == doctest::Approx(-c));
    CHECK(lap.matrix.coeff(0, 2) == doctest::Approx(0.0));
}

TEST_CASE("isolated vertices are dropped and reported") {
    ProjectedNetwork pn = make_projected_network({"a", "b", "iso"}, {{0, 1, 2.0}}, "t");
    LaplacianResult lap = normalized_laplacian(pn);
    CHECK(lap.matrix.rows() == 2);
    REQUIRE(lap.dropped.size() == 1);
    CHECK(pn.vertex_ids[lap.dropped[0]] == "iso");

    Spectrum s = spectrum(pn, 2);
    REQUIRE(s.dropped_isolated.size() == 1);
    CHECK(s.dropped_isolated[0] == "iso");
    CHECK(s.vertex_ids == std::vector<std::string>{"a", "b"});
}

TEST_CASE("fully isolated networks have no spectrum") {
    ProjectedNetwork pn = make_projected_network({"a", "b", "c"}, {}, "empty");
    CHECK_THROWS_AS(normalized_laplacian(pn), DataError);
    CHECK_THROWS_AS(spectrum(pn, 1), DataError);
}

TEST_CASE("path P3 spectrum is (0, 1, 2)") {
    Spectrum s = spectrum(megtest::path_graph(3), 3);
    REQUIRE(s.size() == 3);
    CHECK(s.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(s.eigenvalues[1] == doctest::Approx(1.0));
    CHECK(s.eigenvalues[2] == doctest::Approx(2.0));
}

TEST_CASE("complete graph K3 spectrum is (0, 1.5, 1.5)") {
    Spectrum s = spectrum(megtest::complete_graph(3), 3);
    REQUIRE(s.size() == 3);
    CHECK(s.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(s.eigenvalues[1] == doctest::Approx(1.5));
    CHECK(s.eigenvalues[2] == doctest::Approx(1.5));
}

TEST_CASE("two disjoint edges have a double zero eigenvalue") {
    ProjectedNetwork pn =
        make_projected_network({"a", "b", "c", "d"}, {{0, 1, 1.0}, {2, 3, 1.0}}, "pairs");
    Spectrum s = spectrum(pn, 2);
    REQUIRE(s.size() == 2);
    CHECK(std::abs(s.eigenvalues[0]) < 1e-10);
    CHECK(std::abs(s.eigenvalues[1]) < 1e-10);
}

TEST_CASE("iterative solver matches the dense oracle on random graphs") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 12; ++trial) {
        int n = 10 + static_cast<int>(rng() % 60);
        double density = 0.03 + 0.2 * (trial % 4);
        ProjectedNetwork pn = megtest::random_graph(rng, n, density);
        LaplacianResult lap = normalized_laplacian(pn);
        megtest::DenseSpectrum oracle = dense_spectrum(lap.matrix);

        int k = static_cast<int>(lap.matrix.rows());
        SpectrumOptions opts;
        opts.tol = 1e-10;
        Spectrum s = spectrum(pn, k, opts);
        REQUIRE(s.size() == k);
        for (int i = 0; i < k; ++i) {
            CHECK(std::abs(s.eigenvalues[i] - oracle.values(i)) < 1e-8);
            CHECK(s.residual_norms[i] <= 1e-10);
            CHECK(s.eigenvalues[i] > -1e-8);
            CHECK(s.eigenvalues[i] < 2.0 + 1e-8);
        }
        // Orthonormal columns.
        Eigen::MatrixXd gram = s.eigenvectors.transpose() * s.eigenvectors;
        CHECK((gram - Eigen::MatrixXd::Identity(k, k)).norm() < 1e-8);
    }
}

TEST_CASE("partial spectra return the k smallest eigenvalues") {
    std::mt19937_64 rng(4242);
    ProjectedNetwork pn = megtest::random_connected_graph(rng, 40, 0.1);
    LaplacianResult lap = normalized_laplacian(pn);
    megtest::DenseSpectrum oracle = dense_spectrum(lap.matrix);
    Spectrum s = spectrum(pn, 7);
    REQUIRE(s.size() == 7);
    for (int i = 0; i < 7; ++i) CHECK(std::abs(s.eigenvalues[i] - oracle.values(i)) < 1e-7);
}

TEST_CASE("extend_spectrum grows a spectrum without recomputation") {
    std::mt19937_64 rng(77);
    ProjectedNetwork pn = megtest::random_graph(rng, 30, 0.15);
    LaplacianResult lap = normalized_laplacian(pn);
    Spectrum base = spectrum(pn, 4);
    Spectrum grown = extend_spectrum(pn, base, 6);
    REQUIRE(grown.size() == 10);

    // The original pairs are reused verbatim.
    for (int i = 0; i < 4; ++i) {
        bool found = false;
        for (int j = 0; j < grown.size(); ++j)
            if (grown.eigenvalues[j] == base.eigenvalues[i] &&
                (grown.eigenvectors.col(j) - base.eigenvectors.col(i)).norm() == 0.0)
                found = true;
        CHECK(found);
    }
    megtest::DenseSpectrum oracle = dense_spectrum(lap.matrix);
    for (int i = 0; i < grown.size(); ++i)
        CHECK(std::abs(grown.eigenvalues[i] - oracle.values(i)) < 1e-7);

    CHECK_THROWS_AS(extend_spectrum(pn, base, 1000), ConfigError);
}

TEST_CASE("spectrum is deterministic for a fixed seed") {
    std::mt19937_64 rng(123);
    ProjectedNetwork pn = megtest::random_graph(rng, 25, 0.2);
    SpectrumOptions opts;
    opts.seed = 99;
    Spectrum a = spectrum(pn, 6, opts);
    Spectrum b = spectrum(pn, 6, opts);
    CHECK(a.eigenvalues == b.eigenvalues);
    CHECK((a.eigenvectors - b.eigenvectors).norm() == 0.0);
}

TEST_CASE("unreachable tolerance raises a numerical error") {
    ProjectedNetwork pn = megtest::path_graph(5);
    SpectrumOptions opts;
    opts.tol = 1e-300;
    CHECK_THROWS_AS(spectrum(pn, 3, opts), NumericalError);
}

TEST_CASE("spectrum rejects out-of-range k") {
    ProjectedNetwork pn = megtest::path_graph(3);
    CHECK_THROWS_AS(spectrum(pn, 0), ConfigError);
    CHECK_THROWS_AS(spectrum(pn, 4), ConfigError);
}

TEST_CASE("spectral_embedding selects eigenvector columns") {
    Spectrum s = spectrum(megtest::path_graph(4), 4);

    SUBCASE("all dims verbatim") {
        EmbeddingMatrix e = spectral_embedding(s, {0, 1, 2, 3});
        CHECK(e.rows.cols() == 4);
        CHECK((e.rows - s.eigenvectors).norm() == 0.0);
        CHECK(e.columns[2].eigenvalue == s.eigenvalues[2]);
        CHECK(e.columns[2].eigen_index == 2);
    }
    SUBCASE("empty dims give a zero-width matrix") {
        EmbeddingMatrix e = spectral_embedding(s, {});
        CHECK(e.rows.cols() == 0);
        CHECK(e.rows.rows() == 4);
        CHECK(e.vertex_ids.size() == 4);
    }
    SUBCASE("out-of-range index is rejected") {
        CHECK_THROWS_AS(spectral_embedding(s, {4}), ConfigError);
        CHECK_THROWS_AS(spectral_embedding(s, {-1}), ConfigError);
    }
}

TEST_CASE("skipping zero-eigenvalue columns keeps orthonormal columns") {
    ProjectedNetwork pn =
        make_projected_network({"a", "b", "c", "d"}, {{0, 1, 1.0}, {2, 3, 1.0}}, "pairs");
    Spectrum s = spectrum(pn, 4);
    EmbeddingMatrix e = spectral_embedding(s, {2, 3});  // skip the two zero modes
    Eigen::MatrixXd gram = e.rows.transpose() * e.rows;
    CHECK((gram - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-8);
}

TEST_CASE("pca_loss matches the closed forms") {
    SUBCASE("single edge, k=1") {
        Spectrum s = spectrum(single_edge(), 2);
        CHECK(pca_loss(s, 1) == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("K3, k=1") {
        Spectrum s = spectrum(megtest::complete_graph(3), 3);
        CHECK(pca_loss(s, 1) == doctest::Approx(0.5));
    }
    SUBCASE("k = |V| discards nothing") {
        Spectrum s = spectrum(megtest::path_graph(4), 4);
        CHECK(pca_loss(s, 4) == 0.0);
    }
    SUBCASE("partial spectra and bad k are rejected") {
        Spectrum partial = spectrum(megtest::path_graph(4), 2);
        CHECK_THROWS_AS(pca_loss(partial, 1), ConfigError);
        Spectrum s = spectrum(megtest::path_graph(4), 4);
        CHECK_THROWS_AS(pca_loss(s, 5), ConfigError);
    }
}

TEST_CASE("pca_loss equals the Frobenius low-rank approximation error") {
    std::mt19937_64 rng(314);
    for (int trial = 0; trial < 4; ++trial) {
        ProjectedNetwork pn = megtest::random_graph(rng, 24, 0.2);
        LaplacianResult lap = normalized_laplacian(pn);
        megtest::DenseSpectrum oracle = dense_spectrum(lap.matrix);
        int n = static_cast<int>(lap.matrix.rows());
        Spectrum s = spectrum(pn, n);

        Eigen::MatrixXd shifted = 2.0 * Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd(lap.matrix);
        for (int k : {1, 3, 7}) {
            Eigen::MatrixXd h = oracle.vectors.leftCols(k);
            Eigen::VectorXd w(k);
            for (int i = 0; i < k; ++i) w(i) = 2.0 - oracle.values(i);
            double frobenius = (shifted - h * w.asDiagonal() * h.transpose()).squaredNorm();
            double loss = pca_loss(s, k);
            CHECK(std::abs(frobenius - loss) <= 1e-8 * std::max(1.0, std::abs(loss)));
        }
    }
}
