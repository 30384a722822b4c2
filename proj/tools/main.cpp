#include <malloc.h>

#include <iostream>

#include "lbc/cli.hpp"

int main(int argc, char** argv) {
  // Keep the large tape buffers in the heap between objective evaluations.
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  return lbc::cli::run(argc, argv, std::cout, std::cerr);
}
