#include <fstream>
#include <iostream>

#include "proxsqp/bench.hpp"

// Regenerates data/maxquad.json from the closed-form construction.
int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: gen_maxquad OUT.json\n";
    return 2;
  }
  const auto inst = proxsqp::bench::maxquad_construction();
  std::ofstream out(argv[1], std::ios::binary);
  if (!out) {
    std::cerr << "cannot write " << argv[1] << "\n";
    return 1;
  }
  out << proxsqp::bench::maxquad_data_file(inst).dump(2) << '\n';
  return 0;
}
