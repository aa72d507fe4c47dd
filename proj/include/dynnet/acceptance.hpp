#pragma once

#include <cstdint>
#include <ostream>

namespace dynnet {

// Runs the full acceptance suite and prints one PASS/FAIL line per
// criterion to out. Returns the number of failed criteria. jobs bounds the
// trial-level parallelism; every check is deterministic given seed.
int run_acceptance(std::uint64_t seed, int jobs, std::ostream& out);

}  // namespace dynnet
