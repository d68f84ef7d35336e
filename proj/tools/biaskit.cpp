#include "biaskit/cli.hpp"

int main(int argc, char** argv) { return biaskit::cli::run(argc, argv); }
