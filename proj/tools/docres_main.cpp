#include <string>
#include <vector>

#include "docres/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return docres::cli::run(args);
}
