#include "ivote/cli.hpp"

int main(int argc, char** argv) { return ivote::cli::main(argc, argv); }
