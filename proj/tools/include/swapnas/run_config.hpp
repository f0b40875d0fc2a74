#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "swapnas/evo_search.hpp"

namespace swapnas {

/// mu/sigma as given on the command line or in a config file.
struct RegularisationChoice {
  enum class Mode { None, Auto, Fixed } mode = Mode::Auto;
  double mu = 0.0;
  double sigma = 0.0;
};

/// Parses "auto", "none" or a pair of numbers.
RegularisationChoice parse_regularisation(const std::string& mu, const std::string& sigma);

/// Number of random cells whose sizes feed "auto" mu/sigma.
inline constexpr int kAutoSizeSamples = 1000;

std::optional<RegularisationParams> resolve_regularisation(const RegularisationChoice& choice, int nodes,
                                                           const AssemblyConfig& assembly, std::uint64_t seed);

/// Search run described by a key=value file ('#' comments, blank lines ok).
///
///   population cycles sample_size mutation_times crossover_prob nodes seed
///   batch depth stem_channels reductions num_classes mu sigma standardise
struct SearchRunConfig {
  SearchConfig search;
  RegularisationChoice regularisation;
};

SearchRunConfig parse_search_config(const std::string& text);
SearchRunConfig load_search_config(const std::filesystem::path& path);

/// Parses "1,2" style integer lists ("" gives an empty list).
std::vector<int> parse_int_list(const std::string& text);
bool parse_bool(const std::string& text);

/// Text written by `search --out`.
std::string format_search_result(const SearchResult& result, const SearchConfig& cfg);

}  // namespace swapnas
