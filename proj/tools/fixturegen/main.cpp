#include <iostream>

#include "fixture_sets.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: fixturegen <output-dir>\n";
    return 1;
  }
  try {
    revsim::fixtures::write_all(argv[1]);
  } catch (const std::exception& e) {
    std::cerr << "fixturegen: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
