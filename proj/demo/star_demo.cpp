// Fedosov star product of two polynomials on R^4 with a curved connection,
// then the induced product on the Whitney quotient of the coordinate plane.
#include <iostream>

#include "wdq/fedosov.hpp"
#include "wdq/whitney.hpp"

int main() {
  using namespace wdq;
  TruncationPolicy policy;
  policy.n = 2;
  policy.jet_order = 2;
  policy.base_degree = 6;
  policy.fedosov_order = 6;
  policy.hbar_order = 2;

  FedosovData fd = build_A(ConnectionInput::builtin("curved-linear-n2", 2), policy);
  MixedElement f = parse_element("x1*x3 + x2", policy);
  MixedElement g = parse_element("x1^2*x4", policy);

  MixedElement fg = star(f, g, fd);
  std::cout << "f*g = " << fg.str() << "\n";
  for (int k = 0; k <= policy.hbar_order; ++k) std::cout << "  c_" << k << " = " << c_k(f, g, fd, k).str() << "\n";

  ModelPtr plane = WhitneyModel::make(SubsetModel::builtin("plane-in-r4", 2), policy);
  WhitneySeries induced = induced_star(project(f, plane), project(g, plane), fd);
  std::cout << "induced on plane-in-r4: " << induced.str() << "\n";
}
