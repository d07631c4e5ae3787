#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "attnlab/errors.hpp"
#include "attnlab/runconfig.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        const attnlab::RunConfig cfg = attnlab::parse_args(args);
        if (cfg.show_help) {
            std::cout << attnlab::usage();
            return 0;
        }
        return attnlab::run(cfg);
    } catch (const attnlab::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << attnlab::usage();
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
