#include <string>
#include <vector>

#include "apf/cli/cli.hpp"

int main(int argc, char **argv) { return apf::cli::run(std::vector<std::string>(argv, argv + argc)); }
