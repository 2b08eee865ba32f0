#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cli.hpp"

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("affectlab"));
    return affectlab::cli::run(argc, argv, std::cin, std::cout, std::cerr);
}
