#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <string>

#include "doctest.h"
#include "so3tengen/equivar.hpp"
#include "so3tengen/errors.hpp"
#include "so3tengen/invgen.hpp"
#include "so3tengen/verify.hpp"

using namespace so3tengen;

TEST_CASE("invariance sweep certifies an enumerated set") {
  const inv::Signature sig = inv::Signature::parse("cart:2,cart:1");
  const inv::GeneratorSet set = inv::enumerate_networks(sig, 3, 1);
  REQUIRE(!set.generators.empty());

  const vfy::VerificationReport rep = vfy::check_invariance(set, 60);
  CHECK(rep.signature == "cart:2,cart:1");
  CHECK(rep.out_rep.empty());
  CHECK(rep.max_degree == 3);
  CHECK(rep.rotations == 60);
  CHECK(rep.seed == 1);
  REQUIRE(rep.invariance.size() == set.generators.size());
  CHECK(rep.equivariance.empty());
  CHECK(rep.pass);
  for (double v : rep.invariance) CHECK(v <= 1e-8);
  // At least one generator moves away from zero on these probes, so the
  // sweep is not passing vacuously.
  CHECK(*std::max_element(rep.invariance.begin(), rep.invariance.end()) >
        0.0);

  SUBCASE("execution twins agree bitwise") {
    const vfy::VerificationReport s =
        vfy::check_invariance(set, 60, 1e-8, 1, Exec::Serial);
    CHECK(s == rep);
  }

  SUBCASE("tightening the tolerance below fp noise fails the report") {
    const vfy::VerificationReport tight =
        vfy::check_invariance(set, 60, 1e-18);
    CHECK(!tight.pass);
    CHECK(tight.tol == 1e-18);
  }

  SUBCASE("degenerate rotation counts are rejected") {
    CHECK_THROWS_AS(vfy::check_invariance(set, 0), Error);
    CHECK_THROWS_AS(vfy::check_invariance(set, -3), Error);
  }
}

TEST_CASE("equivariance sweep certifies a basis") {
  const inv::Signature sig = inv::Signature::parse("cart:1,cart:1");
  const eqv::EquivariantBasis basis =
      eqv::equivariant_basis(sig, inv::Slot::cart(1), 2);
  REQUIRE(basis.elements.size() == 3);

  const vfy::VerificationReport rep = vfy::check_equivariance(basis, 40);
  CHECK(rep.signature == "cart:1,cart:1");
  CHECK(rep.out_rep == "cart:1");
  CHECK(rep.invariance.empty());
  REQUIRE(rep.equivariance.size() == 3);
  CHECK(rep.pass);
  for (double v : rep.equivariance) CHECK(v <= 1e-8);

  SUBCASE("spherical outputs rotate by their irrep") {
    const eqv::EquivariantBasis sph = eqv::equivariant_basis(
        inv::Signature::parse("sph:2"), inv::Slot::sph(2), 2);
    REQUIRE(!sph.elements.empty());
    const vfy::VerificationReport r = vfy::check_equivariance(sph, 40);
    CHECK(r.pass);
  }
}

TEST_CASE("summand order is part of the contract") {
  // A direct-sum slot stores its summands in declared order; swapping the
  // declaration while keeping the stored networks mismatches the rotation
  // blocks against the wrap and must surface as a real violation.
  const inv::GeneratorSet set =
      inv::enumerate_networks(inv::Signature::parse("sum:0+2"), 2, 1);
  REQUIRE(!set.generators.empty());
  CHECK(vfy::check_invariance(set, 40).pass);

  Json j = inv::generator_set_to_json(set);
  std::string text = j.dump();
  const auto at = text.find("sum:0+2");
  REQUIRE(at != std::string::npos);
  text.replace(at, 7, "sum:2+0");
  const inv::GeneratorSet swapped =
      inv::generator_set_from_json(Json::parse(text));

  const vfy::VerificationReport rep = vfy::check_invariance(swapped, 40);
  CHECK(!rep.pass);
  CHECK(*std::max_element(rep.invariance.begin(), rep.invariance.end()) >
        1e-3);
}

TEST_CASE("report json round trip") {
  const inv::GeneratorSet set =
      inv::enumerate_networks(inv::Signature::parse("cart:1,cart:1"), 2, 1);
  const vfy::VerificationReport rep = vfy::check_invariance(set, 25, 1e-8, 7);
  const Json j = vfy::report_to_json(rep);
  CHECK(j.at("signature") == "cart:1,cart:1");
  CHECK(j.at("rotations") == 25);
  CHECK(j.at("seed") == 7);
  CHECK(j.at("pass") == true);
  CHECK(vfy::report_from_json(j) == rep);
}
