#include <iostream>
#include <string>
#include <vector>

#include "fadingmac/cli_io.hpp"

int main(int argc, char** argv) {
    return fmac::run_command(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
