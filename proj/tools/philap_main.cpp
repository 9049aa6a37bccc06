#include "philap/cli.hpp"

int main(int argc, char** argv) { return philap::cli::run(argc, argv); }
