#include <string>
#include <vector>

#include "windnet/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return windnet::cli::run(args);
}
