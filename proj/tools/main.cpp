#include "zggp/cli.hpp"

int main(int argc, char** argv) { return zggp::dispatch(argc, argv); }
