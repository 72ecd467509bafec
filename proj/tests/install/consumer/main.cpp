#include <iostream>

#include "revsim/review_engine.hpp"

int main() {
  const int ratings[] = {6, 4, 5, 6, 5, 5, 5};
  auto d = revsim::review::decide(ratings);
  std::cout << d.average.num << "/" << d.average.den << (d.accepted ? " accept" : " reject") << "\n";
  return d.accepted ? 1 : 0;
}
