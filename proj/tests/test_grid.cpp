#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "rxcu/dataset.hpp"
#include "rxcu/grid.hpp"
#include "rxcu/rng.hpp"

using namespace rxcu;

namespace {

GridPoint random_point(Rng& rng) {
  GridPoint p;
  p.x = rng.uniform(-3, 3);
  p.y = rng.uniform(-3, 3);
  p.z = rng.uniform(-3, 3);
  p.weight = rng.uniform(0.01, 0.5);
  p.f.rho_up = rng.uniform(0.0, 1.0);
  p.f.rho_down = rng.uniform(0.0, 1.0);
  p.f.grad_sq_up = rng.uniform(0.0, 0.5);
  p.f.grad_sq_down = rng.uniform(0.0, 0.5);
  p.f.grad_sq_total = p.f.grad_sq_up + p.f.grad_sq_down + rng.uniform(0.0, 0.2);
  p.f.tau_up = rng.uniform(0.0, 0.3);
  p.f.tau_down = rng.uniform(0.0, 0.3);
  p.f.e_hf_w1_up = -rng.uniform(0.0, 0.4);
  p.f.e_hf_w1_down = -rng.uniform(0.0, 0.4);
  p.f.e_hf_w2_up = -rng.uniform(0.0, 0.8);
  p.f.e_hf_w2_down = -rng.uniform(0.0, 0.8);
  return p;
}

MolecularGrid random_grid(Rng& rng, std::size_t n) {
  MolecularGrid g;
  g.species_id = "probe";
  for (std::size_t i = 0; i < n; ++i) {
    g.points.push_back(random_point(rng));
    const auto& p = g.points.back();
    g.n_electrons_up += p.weight * p.f.rho_up;
    g.n_electrons_down += p.weight * p.f.rho_down;
  }
  return g;
}

}  // namespace

TEST_CASE("extended feature vector is the documented concatenation") {
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const GridPoint p = random_point(rng);
    const double e_lda = -rng.uniform(0.0, 1.0);
    const double e_conv = -rng.uniform(0.0, 1.0);
    const ExtendedFeatures y =
        build_extended_features(p.f, e_lda, e_conv, p.weight);
    for (int k = 0; k < PointFeatures::kCount; ++k) {
      CHECK(y.v[static_cast<std::size_t>(k)] == p.f[k]);
    }
    CHECK(y.v[11] == p.f.e_hf_w1_up + p.f.e_hf_w1_down);
    CHECK(y.v[12] == p.f.e_hf_w2_up + p.f.e_hf_w2_down);
    CHECK(y.v[13] == e_lda);
    CHECK(y.v[14] == e_conv);
    CHECK(y.v[15] == p.weight);
  }
}

TEST_CASE("extended features reject non-finite inputs by name") {
  PointFeatures f;
  f.rho_up = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH(build_extended_features(f, 0.0, 0.0, 1.0),
                    Catch::Matchers::ContainsSubstring("rho_up"));
  PointFeatures ok;
  CHECK_THROWS_WITH(
      build_extended_features(ok, std::numeric_limits<double>::infinity(), 0.0,
                              1.0),
      Catch::Matchers::ContainsSubstring("e_lda"));
}

TEST_CASE("density-weighted integration is linear and order-fixed") {
  Rng rng(5);
  MolecularGrid g = random_grid(rng, 64);
  std::vector<double> a(64), b(64);
  for (auto& v : a) v = rng.uniform(-1, 1);
  for (auto& v : b) v = rng.uniform(-1, 1);
  const double ia = integrate_density_weighted(g, a);
  const double ib = integrate_density_weighted(g, b);
  std::vector<double> sum(64);
  for (std::size_t i = 0; i < 64; ++i) sum[i] = 2.0 * a[i] + 3.0 * b[i];
  CHECK(integrate_density_weighted(g, sum) ==
        Catch::Approx(2.0 * ia + 3.0 * ib).epsilon(1e-12));
  // Bitwise reproducibility of the fixed-order sum.
  CHECK(integrate_density_weighted(g, a) == ia);
  std::vector<double> wrong(63);
  CHECK_THROWS_AS(integrate_density_weighted(g, wrong), data_error);
}

TEST_CASE("integration with unit values recovers the electron count") {
  Rng rng(9);
  MolecularGrid g = random_grid(rng, 128);
  std::vector<double> ones(128, 1.0);
  CHECK(integrate_density_weighted(g, ones) ==
        Catch::Approx(g.n_electrons()).epsilon(1e-12));
}

TEST_CASE("grid validation reports violations and warnings") {
  Rng rng(13);
  MolecularGrid g = random_grid(rng, 32);

  SECTION("a clean grid passes") {
    const ValidationReport rep = validate_grid(g);
    CAPTURE(rep.str());
    CHECK(rep.ok());
  }

  SECTION("nonpositive weight is a violation") {
    g.points[4].weight = 0.0;
    CHECK_FALSE(validate_grid(g).ok());
  }

  SECTION("negative density is a violation") {
    g.points[7].f.rho_down = -1e-8;
    const ValidationReport rep = validate_grid(g);
    CHECK_FALSE(rep.ok());
    CHECK_THAT(rep.str(), Catch::Matchers::ContainsSubstring("rho_down"));
  }

  SECTION("positive hf exchange is only a warning") {
    g.points[2].f.e_hf_w1_up = +0.2;
    const ValidationReport rep = validate_grid(g);
    CHECK(rep.ok());
    CHECK_FALSE(rep.findings.empty());
    CHECK(rep.findings.front().warning);
  }

  SECTION("electron count mismatch is a violation naming both numbers") {
    g.n_electrons_up += 0.5;
    const ValidationReport rep = validate_grid(g);
    CHECK_FALSE(rep.ok());
    CHECK_THAT(rep.str(), Catch::Matchers::ContainsSubstring("electron"));
  }

  SECTION("empty grid is a violation") {
    MolecularGrid empty;
    CHECK_FALSE(validate_grid(empty).ok());
  }
}

TEST_CASE("canonicalization sorts points and is idempotent") {
  Rng rng(17);
  MolecularGrid g = random_grid(rng, 50);
  MolecularGrid shuffled = g;
  std::vector<std::size_t> order(50);
  for (std::size_t i = 0; i < 50; ++i) order[i] = i;
  rng.shuffle(order);
  for (std::size_t i = 0; i < 50; ++i) shuffled.points[i] = g.points[order[i]];

  const MolecularGrid c1 = canonicalized(g);
  const MolecularGrid c2 = canonicalized(shuffled);
  REQUIRE(c1.points.size() == c2.points.size());
  for (std::size_t i = 0; i < c1.points.size(); ++i) {
    CHECK(c1.points[i].x == c2.points[i].x);
    CHECK(c1.points[i].weight == c2.points[i].weight);
    CHECK(c1.points[i].f.rho_up == c2.points[i].f.rho_up);
  }
  for (std::size_t i = 1; i < c1.points.size(); ++i) {
    const auto& a = c1.points[i - 1];
    const auto& b = c1.points[i];
    CHECK((a.x < b.x || (a.x == b.x && (a.y < b.y ||
                                        (a.y == b.y && a.z <= b.z)))));
  }

  // Identical point multisets integrate bit-identically after
  // canonicalization, whatever order they arrived in.
  std::vector<double> vals;
  for (const auto& p : c1.points) vals.push_back(p.f.tau_up);
  CHECK(integrate_density_weighted(c1, vals) ==
        integrate_density_weighted(c2, vals));

  const MolecularGrid c3 = canonicalized(c1);
  for (std::size_t i = 0; i < c1.points.size(); ++i) {
    CHECK(c3.points[i].x == c1.points[i].x);
  }
}

TEST_CASE("reaction records enforce shape") {
  ReactionRecord r;
  r.reaction_id = "r1";
  r.terms = {{"a", -1}, {"b", 2}};
  CHECK_NOTHROW(r.validate());
  r.terms = {{"a", 1}, {"b", 2}};
  CHECK_THROWS_AS(r.validate(), data_error);
  r.terms = {{"a", -1}, {"b", 0}};
  CHECK_THROWS_AS(r.validate(), data_error);
}

TEST_CASE("dataset validation resolves every reaction term") {
  Rng rng(21);
  Dataset ds;
  MolecularGrid g = random_grid(rng, 8);
  g.species_id = "a";
  ds.grids["a"] = g;
  ds.compositions["a"] = {{"H", 2}};
  ReactionRecord r;
  r.reaction_id = "r1";
  r.terms = {{"a", -1}, {"missing", 1}};
  ds.reactions.push_back(r);
  CHECK_THROWS_WITH(ds.validate(),
                    Catch::Matchers::ContainsSubstring("missing"));
}

TEST_CASE("element symbols map to atomic numbers") {
  CHECK(element_z("H") == 1);
  CHECK(element_z("C") == 6);
  CHECK(element_z("Cl") == 17);
  CHECK_THROWS_AS(element_z("Xx"), data_error);
  CHECK(atom_count({{"C", 2}, {"H", 6}}) == 8);
}
