#include "maxsmooth/error.hpp"
#include "maxsmooth/simulator.hpp"

#include <doctest.h>

#include <sstream>

using namespace maxsmooth;

TEST_CASE("paper-like scenario shape") {
  const SimulatedData d = simulate_scenario(paper_like_scenario(5));
  REQUIRE(d.sites.size() == 60u);
  CHECK(d.sites[0].site_id == "S001");
  CHECK(d.sites[59].site_id == "S060");
  for (const auto& s : d.sites) {
    CHECK(s.size() >= 30u);
    CHECK(s.size() <= 80u);
    CHECK(s.years.back() == 2013);
    s.validate();
  }
  CHECK(d.descriptors.names == std::vector<std::string>{"AREA", "SAAR", "BFIHOST", "URBEXT"});
  d.descriptors.validate();
  CHECK(d.eta.rows() == 60);
  CHECK(d.eta.cols() == 4);
  CHECK(d.fields[0].size() == static_cast<Eigen::Index>(d.mesh->nodes.size()));
  CHECK(d.fields[2].isZero());
  for (const auto& c : d.descriptors.coords) {
    CHECK(c.x() >= 0.0);
    CHECK(c.x() <= 700.0);
    CHECK(c.y() <= 1200.0);
  }
}

TEST_CASE("simulation is a pure function of the seed") {
  Scenario s = paper_like_scenario(7);
  s.n_sites = 20;
  const SimulatedData a = simulate_scenario(s), b = simulate_scenario(s);
  CHECK(a.eta == b.eta);
  for (std::size_t i = 0; i < a.sites.size(); ++i) CHECK(a.sites[i].maxima == b.sites[i].maxima);
  s.seed = 8;
  CHECK(simulate_scenario(s).eta != a.eta);

  std::ostringstream ta, tb;
  write_truth(ta, a);
  write_truth(tb, b);
  CHECK(ta.str() == tb.str());
  CHECK(ta.str().find("S001") != std::string::npos);
}

TEST_CASE("scenario validation") {
  Scenario s = paper_like_scenario();
  s.min_length = 90;
  CHECK_THROWS_AS(s.validate(), InputError);
  s = paper_like_scenario();
  s.n_sites = 2;
  CHECK_THROWS_AS(s.validate(), InputError);
}
