#pragma once

#include <cstdint>
#include <string>

namespace thal::synth {

// Deterministic stand-in for the alpha-thalassemia screening table: 15
// independent variables (sex plus 14 continuous blood indices), a binary
// carrier/normal phenotype, and a class-dependent signal in a subset of the
// indices. Returns CSV text with a header row.
std::string generate_csv(std::size_t rows = 288, std::uint64_t seed = 7,
                         double carrier_fraction = 1.0 / 3.0);

void write_csv(const std::string& path, std::size_t rows = 288, std::uint64_t seed = 7,
               double carrier_fraction = 1.0 / 3.0);

}  // namespace thal::synth
