#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <string>

#include "rxcu/energy.hpp"
#include "rxcu/rng.hpp"

using namespace rxcu;

namespace {

MolecularGrid random_grid(std::uint64_t seed, int n) {
  Rng rng(seed);
  MolecularGrid g;
  g.species_id = "sp" + std::to_string(seed);
  for (int i = 0; i < n; ++i) {
    GridPoint p;
    p.x = rng.uniform(-2.0, 2.0);
    p.y = rng.uniform(-2.0, 2.0);
    p.z = rng.uniform(-2.0, 2.0);
    p.weight = rng.uniform(0.01, 0.4);
    p.f.rho_up = rng.uniform(0.01, 1.0);
    p.f.rho_down = rng.uniform(0.01, 1.0);
    p.f.grad_sq_up = rng.uniform(0.0, 0.5);
    p.f.grad_sq_down = rng.uniform(0.0, 0.5);
    p.f.grad_sq_total =
        p.f.grad_sq_up + p.f.grad_sq_down + rng.uniform(0.0, 0.2);
    p.f.tau_up = rng.uniform(0.0, 0.3);
    p.f.tau_down = rng.uniform(0.0, 0.3);
    p.f.e_hf_w1_up = rng.uniform(-0.4, 0.0);
    p.f.e_hf_w1_down = rng.uniform(-0.4, 0.0);
    p.f.e_hf_w2_up = rng.uniform(-0.6, 0.0);
    p.f.e_hf_w2_down = rng.uniform(-0.6, 0.0);
    g.n_electrons_up += p.weight * p.f.rho_up;
    g.n_electrons_down += p.weight * p.f.rho_down;
    g.points.push_back(p);
  }
  return g;
}

// A network whose every weight is zero except the mean head's final bias, so
// e0 is the same constant at every grid point.
Model constant_mean_model(double bias, FeatureSet fs = FeatureSet::kY16) {
  Model m = make_zero_model(ConventionalSpec{}, ClampConfig{}, fs);
  m.params.head_mean.back().b(0) = bias;
  return m;
}

}  // namespace

TEST_CASE("zero parameters leave the conventional energy untouched") {
  MolecularGrid g = random_grid(1, 40);
  Model zero = make_zero_model(ConventionalSpec{}, ClampConfig{});
  SpeciesEnergies se = species_energies(g, zero);

  CHECK(se.e_ru == 0.0);

  double hand = 0.0, mass = 0.0;
  for (const auto& p : g.points) {
    const double wr = p.weight * p.f.rho_total();
    hand += wr * conventional_density(p.f, zero.conv);
    mass += wr;
  }
  CHECK(se.e_conv == Catch::Approx(hand).epsilon(1e-15));

  // s0 = 0 clamps to log(eps), so every point contributes sqrt(eps) = 0.01
  // per unit of integrated density.
  CHECK(se.sigma == Catch::Approx(0.01 * mass).epsilon(1e-13));
}

TEST_CASE("saturated mean head recovers the conventional density on a point") {
  GridEval ev;
  ev.species_id = "one";
  ev.raw = Eigen::MatrixXd::Zero(1, 16);
  ev.e_conv = Eigen::VectorXd::Constant(1, -0.5);
  ev.wr = Eigen::VectorXd::Constant(1, 1.0);
  ev.e_conv_total = -0.5;

  Model m = constant_mean_model(50.0);  // tanh(50) == 1 in double precision
  SpeciesForward sf = species_forward(ev, m.standardizer.apply(ev.raw), m);
  CHECK(sf.totals.e_ru == -0.5);
  CHECK(sf.totals.e_conv == -0.5);
  CHECK(sf.e_bar(0) == -0.5);
}

TEST_CASE("conventional energy is independent of network parameters") {
  MolecularGrid g = random_grid(2, 30);
  Model a = make_zero_model(ConventionalSpec{}, ClampConfig{});
  a.params = init_params(5, 16);
  Model b = a;
  b.params = init_params(99, 16);

  SpeciesEnergies ea = species_energies(g, a);
  SpeciesEnergies eb = species_energies(g, b);
  CHECK(ea.e_conv == eb.e_conv);
  CHECK(ea.e_ru != eb.e_ru);
}

TEST_CASE("integrated residual obeys the pointwise clamp bound") {
  MolecularGrid g = random_grid(3, 50);
  for (std::uint64_t seed : {1ull, 7ull, 19ull}) {
    Model m = make_zero_model(ConventionalSpec{}, ClampConfig{});
    m.clamp.k1 = 1.4;
    m.params = init_params(seed, 16);
    SpeciesEnergies se = species_energies(g, m);

    double bound = 0.0;
    for (const auto& p : g.points) {
      bound += p.weight * p.f.rho_total() *
               std::abs(conventional_density(p.f, m.conv));
    }
    CHECK(std::abs(se.e_ru) <= m.clamp.k1 * bound);
  }
}

TEST_CASE("reaction assembly follows stoichiometry") {
  std::map<std::string, SpeciesEnergies> species;
  species["h2"] = {-0.7, 0.02, 0.004};
  species["h"] = {-0.3, -0.01, 0.003};
  const double eps = 1e-4;

  SECTION("identity reaction cancels exactly") {
    ReactionRecord r;
    r.reaction_id = "ident";
    r.terms = {{"h2", -1}, {"h2", 1}};
    EnergyBreakdown bd = reaction_energy(r, species, eps);
    CHECK(bd.e_conv_total == 0.0);
    CHECK(bd.e_ru_total == 0.0);
    CHECK(bd.predicted() == 0.0);
    CHECK(bd.sigma == Catch::Approx(0.008).epsilon(1e-15));
  }

  SECTION("atomisation arithmetic") {
    ReactionRecord r;
    r.reaction_id = "h2_atomisation";
    r.terms = {{"h2", -1}, {"h", 2}};
    EnergyBreakdown bd = reaction_energy(r, species, eps);
    CHECK(bd.e_conv_total == Catch::Approx(0.1).epsilon(1e-14));
    CHECK(bd.e_ru_total == Catch::Approx(-0.04).epsilon(1e-14));
    CHECK(bd.sigma == Catch::Approx(0.01).epsilon(1e-14));
    CHECK(bd.s == Catch::Approx(std::log(1e-4)).epsilon(1e-12));

    ReactionRecord dbl = r;
    dbl.terms = {{"h2", -2}, {"h", 4}};
    EnergyBreakdown bd2 = reaction_energy(dbl, species, eps);
    CHECK(bd2.e_conv_total == Catch::Approx(2.0 * bd.e_conv_total).epsilon(1e-15));
    CHECK(bd2.e_ru_total == Catch::Approx(2.0 * bd.e_ru_total).epsilon(1e-15));
    CHECK(bd2.sigma == Catch::Approx(2.0 * bd.sigma).epsilon(1e-15));

    // Flipping every sign flips the means but not the spread.
    ReactionRecord rev = r;
    rev.terms = {{"h2", 1}, {"h", -2}};
    EnergyBreakdown bd3 = reaction_energy(rev, species, eps);
    CHECK(bd3.e_conv_total == -bd.e_conv_total);
    CHECK(bd3.sigma == bd.sigma);
  }

  SECTION("zero spread floors the log-variance at log(eps)") {
    std::map<std::string, SpeciesEnergies> sharp;
    sharp["h2"] = {-0.7, 0.0, 0.0};
    sharp["h"] = {-0.3, 0.0, 0.0};
    ReactionRecord r;
    r.reaction_id = "sharp";
    r.terms = {{"h2", -1}, {"h", 2}};
    EnergyBreakdown bd = reaction_energy(r, sharp, eps);
    CHECK(bd.s == Catch::Approx(-9.2103403719761827361).epsilon(1e-14));
  }

  SECTION("missing species is a data error naming the reaction") {
    ReactionRecord r;
    r.reaction_id = "bad_rxn";
    r.terms = {{"h2", -1}, {"he", 2}};
    CHECK_THROWS_WITH(reaction_energy(r, species, eps),
                      Catch::Matchers::ContainsSubstring("bad_rxn") &&
                          Catch::Matchers::ContainsSubstring("'he'"));
  }
}

TEST_CASE("direct mode reports the whole prediction through e_ru") {
  MolecularGrid g = random_grid(4, 25);

  Model m = make_zero_model(ConventionalSpec{}, ClampConfig{}, FeatureSet::kX11);
  m.loss_mode = LossMode::kDirectU;
  m.params = init_params(21, 11);
  SpeciesEnergies se = species_energies(g, m);
  CHECK(se.e_conv == 0.0);
  CHECK(se.e_ru != 0.0);

  // The clamp plays no role in this mode.
  Model no_clamp = m;
  no_clamp.clamp.k1 = 0.0;
  SpeciesEnergies se2 = species_energies(g, no_clamp);
  CHECK(se2.e_ru == se.e_ru);
  CHECK(se2.sigma == se.sigma);

  // A zero direct network predicts zero total energy.
  Model z = make_zero_model(ConventionalSpec{}, ClampConfig{}, FeatureSet::kX11);
  z.loss_mode = LossMode::kDirectU;
  SpeciesEnergies sz = species_energies(g, z);
  CHECK(sz.e_conv == 0.0);
  CHECK(sz.e_ru == 0.0);
}

TEST_CASE("featurization caches rows, densities, and quadrature factors") {
  MolecularGrid g = random_grid(5, 12);
  ConventionalSpec spec;

  GridEval y = featurize(g, spec, FeatureSet::kY16);
  REQUIRE(y.raw.rows() == 12);
  REQUIRE(y.raw.cols() == 16);
  for (int i = 0; i < 12; ++i) {
    const GridPoint& p = g.points[static_cast<std::size_t>(i)];
    const double e_conv = conventional_density(p.f, spec);
    const double e_lda = lda_xc_density(p.f.rho_up, p.f.rho_down, spec.vwn);
    const ExtendedFeatures want =
        build_extended_features(p.f, e_lda, e_conv, p.weight);
    for (int k = 0; k < ExtendedFeatures::kCount; ++k) {
      CHECK(y.raw(i, k) == want.v[static_cast<std::size_t>(k)]);
    }
    CHECK(y.e_conv(i) == e_conv);
    CHECK(y.wr(i) == p.weight * p.f.rho_total());
  }

  GridEval x = featurize(g, spec, FeatureSet::kX11);
  REQUIRE(x.raw.cols() == 11);
  for (int k = 0; k < PointFeatures::kCount; ++k) {
    CHECK(x.raw(0, k) == g.points[0].f[k]);
  }
  CHECK(x.e_conv_total == y.e_conv_total);

  // Overflowing the accumulated conventional energy names the species.
  MolecularGrid huge = g;
  for (auto& p : huge.points) p.weight = 1e308;
  CHECK_THROWS_WITH(featurize(huge, spec, FeatureSet::kY16),
                    Catch::Matchers::ContainsSubstring(g.species_id));
}

TEST_CASE("species forward rejects mismatched feature rows") {
  MolecularGrid g = random_grid(6, 8);
  Model m = make_zero_model(ConventionalSpec{}, ClampConfig{});
  GridEval ev = featurize(g, m.conv, m.feature_set);
  Eigen::MatrixXd wrong = Eigen::MatrixXd::Zero(7, 16);
  CHECK_THROWS_AS(species_forward(ev, wrong, m), data_error);
}
