#include "fedff/experiments.hpp"

int main(int argc, char** argv) { return fedff::run_cli(argc, argv); }
