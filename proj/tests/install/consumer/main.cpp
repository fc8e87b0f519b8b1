#include <cmath>
#include <iostream>

#include "membrane/green_solver.hpp"

int main() {
  const auto g = membrane::GreenSolver::assemble(1, {membrane::Site{0}, membrane::Site{1}});
  const double v = g.variance(membrane::Site{0});
  std::cout << "G(0,0) = " << v << '\n';
  return std::abs(v - 0.3) < 1e-12 ? 0 : 1;
}
