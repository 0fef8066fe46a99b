#include <cmath>
#include <map>
#include <sstream>

#include "doctest.h"

#include "kpzlab/dynamics.hpp"
#include "kpzlab/fields.hpp"
#include "kpzlab/stats.hpp"

using namespace kpzlab;

namespace {

Params small_params(std::int64_t n, std::int64_t ell, double a, double rho) {
  Params p;
  p.n = n;
  p.ell = ell;
  p.a = a;
  p.rho = rho;
  return p;
}

Configuration from_bits(std::uint32_t s, int L) {
  Configuration eta(L);
  for (int x = 0; x < L; ++x) eta.set(x, (s >> x) & 1u);
  return eta;
}

}  // namespace

TEST_CASE("parameters") {
  const auto p = small_params(64, 4, 1.0, 0.5);
  CHECK(p.L() == 256);
  CHECK(p.asymmetry() == doctest::Approx(1.0 / 8));
  CHECK(p.p() + p.q() == doctest::Approx(1.0));
  CHECK(p.p() - p.q() == doctest::Approx(p.asymmetry()));
  CHECK_THROWS(small_params(64, 4, 1.0, 1.5).validate());
}

TEST_CASE("sum tree search matches a linear scan") {
  Philox g(4, 4);
  SumTree t(37);
  std::vector<double> leaves(37);
  for (int round = 0; round < 200; ++round) {
    const auto i = static_cast<std::size_t>(g.uniform() * 37);
    leaves[i] = std::floor(g.uniform() * 4);
    t.set(i, leaves[i]);
    double total = 0;
    for (double v : leaves) total += v;
    if (total == 0) continue;
    const double target = g.uniform() * total;
    double acc = 0;
    std::size_t expect = 0;
    for (; expect < leaves.size(); ++expect) {
      acc += leaves[expect];
      if (target < acc) break;
    }
    CHECK(t.find(target) == expect);
  }
  SumTree rebuilt(37);
  rebuilt.rebuild(leaves);
  CHECK(rebuilt == t);
}

TEST_CASE("bond rates of the exclusion process") {
  const Model m(small_params(8, 2, 1.0, 0.5), wasep_rates());
  const auto eta = Configuration::from_string("1000000000000001");
  const double n2 = 64;
  CHECK(m.bond_rate(eta, 0) == doctest::Approx(n2 * m.params().p()));
  CHECK(m.bond_rate(eta, 14) == doctest::Approx(n2 * m.params().q()));
  CHECK(m.bond_rate(eta, 15) == 0.0);
  CHECK(m.bond_rate(eta, 5) == 0.0);
}

TEST_CASE("Bernoulli product measures are stationary on a six-site ring") {
  for (const auto& rates : {wasep_rates(), gradient_b_rates(1.0), gradient_b_rates(0.4)}) {
    for (double rho : {0.3, 0.5}) {
      const Model m(small_params(2, 3, 1.0, rho), rates);
      const int L = 6;
      auto pi = [&](const Configuration& e) {
        const auto k = e.particle_count();
        return std::pow(rho, static_cast<double>(k)) * std::pow(1 - rho, static_cast<double>(L - k));
      };
      for (std::uint32_t s = 0; s < 64; ++s) {
        const auto eta = from_bits(s, L);
        double out = 0, in = 0;
        for (int x = 0; x < L; ++x) {
          out += m.bond_rate(eta, x);
          const auto prev = swap_bond(eta, x);
          in += pi(prev) * m.bond_rate(prev, x);
        }
        CHECK(in == doctest::Approx(pi(eta) * out).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("a non-gradient speed change with asymmetry is not stationary under product measures") {
  const RateModel ng(WindowFunction::tabulate(-1, 1, [](const PatternView& e) { return 1.0 + e(-1); }));
  const Model m(small_params(2, 3, 1.0, 0.5), ng);
  double worst = 0;
  for (std::uint32_t s = 0; s < 64; ++s) {
    const auto eta = from_bits(s, 6);
    double out = 0, in = 0;
    for (int x = 0; x < 6; ++x) {
      out += m.bond_rate(eta, x);
      in += m.bond_rate(swap_bond(eta, x), x);
    }
    worst = std::max(worst, std::abs(in - out));  // equal weights at rho = 1/2 within a sector
  }
  CHECK(worst > 1e-3);
  // With a = 0 the same rates are reversible, so the defect vanishes.
  const Model sym(small_params(2, 3, 0.0, 0.5), ng);
  for (std::uint32_t s = 0; s < 64; ++s) {
    const auto eta = from_bits(s, 6);
    double out = 0, in = 0;
    for (int x = 0; x < 6; ++x) {
      out += sym.bond_rate(eta, x);
      in += sym.bond_rate(swap_bond(eta, x), x);
    }
    CHECK(in == doctest::Approx(out));
  }
}

TEST_CASE("holding times of a lone particle are exponential") {
  const Model m(small_params(2, 2, 1.0, 0.5), wasep_rates());
  SimState st(m, Configuration::from_string("0100"), 1, 2);
  std::vector<double> dts;
  for (int i = 0; i < 5000; ++i) dts.push_back(st.step()->dt);
  const double rate = 4.0;  // n^2 (p + q)
  const auto ks = stats::ks_test(dts, [rate](double t) { return t <= 0 ? 0.0 : 1 - std::exp(-rate * t); });
  CHECK(ks.p_value > 1e-3);
  CHECK(st.eta().particle_count() == 1);
  CHECK(st.audit());
}

TEST_CASE("trajectory invariants: conservation, continuity and rate index") {
  for (const auto& rates : {wasep_rates(), gradient_b_rates(1.0)}) {
    const Model m(small_params(16, 2, 1.0, 0.5), rates);
    const auto eta0 = sample_grand_canonical(32, 0.5, 77);
    SimState st(m, eta0, 5, 6);
    for (int i = 0; i < 20000; ++i) st.step();
    CHECK(st.eta().particle_count() == eta0.particle_count());
    CHECK(continuity_holds(eta0, st.eta(), st.currents()));
    CHECK(st.audit());
    auto J = st.currents();
    J[3] += 1;
    CHECK_FALSE(continuity_holds(eta0, st.eta(), J));
  }
}

TEST_CASE("same seed gives the same trajectory") {
  const Model m(small_params(16, 2, 1.0, 0.5), gradient_b_rates(1.0));
  const auto eta0 = sample_grand_canonical(32, 0.5, 1);
  SimState a(m, eta0, 3, 9), b(m, eta0, 3, 9);
  for (int i = 0; i < 5000; ++i) {
    const auto ea = a.step(), eb = b.step();
    REQUIRE(ea->bond == eb->bond);
    REQUIRE(ea->dt == eb->dt);
  }
}

TEST_CASE("event log round trip") {
  const Model m(small_params(8, 2, 1.0, 0.5), wasep_rates());
  SimState st(m, sample_grand_canonical(16, 0.5, 2), 1, 1);
  std::stringstream buf;
  EventLogWriter w(buf, {{"note", "roundtrip"}});
  st.set_event_log(&w);
  std::vector<Event> evs;
  for (int i = 0; i < 300; ++i) evs.push_back(*st.step());
  const auto log = read_event_log(buf);
  CHECK(log.header["note"] == "roundtrip");
  REQUIRE(log.records.size() == evs.size());
  double t = 0;
  for (std::size_t i = 0; i < evs.size(); ++i) {
    t += evs[i].dt;
    CHECK(log.records[i].t == t);
    CHECK(log.records[i].bond == evs[i].bond);
    CHECK(log.records[i].direction == evs[i].direction);
  }
}

TEST_CASE("generator and carre du champ on a single-site functional") {
  const Model m(small_params(4, 2, 1.0, 0.5), wasep_rates());
  const auto eta = Configuration::from_string("10000000");
  const Functional F = [](const Configuration& e) { return static_cast<double>(e[0]); };
  // The particle at 0 leaves right at n^2 p and left at n^2 q.
  CHECK(apply_generator(F, eta, m) == doctest::Approx(-16.0));
  CHECK(carre_du_champ(F, eta, m) == doctest::Approx(16.0));
}
