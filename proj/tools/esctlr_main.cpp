#include "esctlr/harness.hpp"

int main(int argc, char** argv) { return esctlr::harness::cli(argc, argv); }
