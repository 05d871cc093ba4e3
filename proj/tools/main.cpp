#include "robustsbm/cli.hpp"

int main(int argc, char** argv) { return rsbm::cli_main(argc, argv); }
