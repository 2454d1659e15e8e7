#pragma once

#include <memory>
#include <string>

#include "ghostsim/fingerprint.hpp"
#include "ghostsim/world.hpp"

#ifndef GHOSTSIM_TEST_FIXTURES
#define GHOSTSIM_TEST_FIXTURES "fixtures"
#endif

namespace ghostsim::test {

inline std::string fixture(const std::string& name) { return std::string(GHOSTSIM_TEST_FIXTURES) + "/" + name; }

inline std::shared_ptr<const World> world_fixture(const std::string& name) {
  return std::make_shared<const World>(load_world_file(fixture(name)));
}

inline const FingerprintGrid& eastwing_grid() {
  static const FingerprintGrid grid = load_fingerprint_csv(fixture("eastwing_beacon1.csv"), "beacon1");
  return grid;
}

inline PlayerState pose(std::string venue, Cell cell, Orientation facing, int floor = 0, double clock = 0.0) {
  PlayerState p;
  p.venue = std::move(venue);
  p.cell = cell;
  p.facing = facing;
  p.floor = floor;
  p.clock_s = clock;
  return p;
}

}  // namespace ghostsim::test
