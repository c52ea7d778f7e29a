#include <t2net/cli.hpp>

int main(int argc, char** argv) {
    return t2net::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
