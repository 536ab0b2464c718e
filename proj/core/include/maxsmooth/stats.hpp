#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace maxsmooth::stats {

double mean(std::span<const double> x);
/// Unbiased (n - 1) variance.
double variance(std::span<const double> x);
double sd(std::span<const double> x);

/// Sample quantile with linear interpolation between order statistics (type 7).
double quantile(std::span<const double> x, double p);
/// Several probabilities from one sort.
std::vector<double> quantiles(std::span<const double> x, std::span<const double> probs);
double median(std::span<const double> x);
double iqr(std::span<const double> x);

/// 0-based ranks; ties broken by position (earlier index gets the lower rank).
std::vector<std::size_t> ordinal_ranks(std::span<const double> x);

double spearman(std::span<const double> x, std::span<const double> y);
/// Kendall's tau-a.
double kendall_tau(std::span<const double> x, std::span<const double> y);

double normal_logpdf(double x, double mean, double sd);

/// Deterministic 64-bit seed mixing (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);
std::uint64_t hash_string(std::string_view s);

}  // namespace maxsmooth::stats
