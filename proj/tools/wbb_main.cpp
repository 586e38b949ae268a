#include "wbb/cli.hpp"

int main(int argc, char** argv) { return wbb::cli::dispatch(argc, argv); }
