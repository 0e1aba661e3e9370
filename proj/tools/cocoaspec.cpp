#include <iostream>

#include "cocoa/pipeline.hpp"

int main(int argc, char** argv) {
  return cocoa::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
