#pragma once

#include "maxsmooth/gev.hpp"
#include "maxsmooth/site_ml.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace maxsmooth::testing {

// `n` annual maxima from a (possibly trending) GEV, consecutive years from `first_year`.
inline SiteData gev_record(const std::string& id, const GevParams& p, int n, int first_year, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SiteData d;
  d.site_id = id;
  for (int t = 0; t < n; ++t) {
    double y;
    do {
      y = gev_sample(rng, p, first_year + t);
    } while (!(y > 0.0));
    d.years.push_back(first_year + t);
    d.maxima.push_back(y);
  }
  return d;
}

}  // namespace maxsmooth::testing
