#pragma once

// Shared fixtures: the two shipped network files plus small hand-built
// systems used across suites.

#include "oef/model.hpp"

#include <random>

namespace oef::test {

/// 6-node power / 7-node gas system, one power region (two blocks).
IegsSystem two_block_fixture();

/// 118-node power / 48-node gas system, three power regions (four blocks),
/// radial gas network with five compressors.
IegsSystem four_block_fixture();

/// Gas-only chain 1-2-3 with a cheap well at one end and an expensive well
/// at the other; the nonconvex optimum is recoverable and sits away from
/// zero flows.
IegsSystem chain3_gas_fixture();

/// Minimal valid system: one power node, one coal generator, one load.
IegsSystem minimal_power_fixture();

/// Random radial (tree) gas-only system. Loads are scaled to the requested
/// fraction of total well capacity; pressure bounds are sized from the tree
/// depth so zero-slack recovery stays reachable.
IegsSystem random_radial_gas(std::mt19937& rng, int num_nodes, double load_fraction);

}  // namespace oef::test
