#include "mnip/cli.hpp"

int main(int argc, char** argv) { return mnip::cli::run(argc, argv, std::cout, std::cerr); }
