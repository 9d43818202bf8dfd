#include <iostream>
#include <string>
#include <vector>

#include "nlq/cli_io.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return nlq::cli_main(args, std::cout, std::cerr);
}
