#include "refcycle/cli.hpp"

int main(int argc, char** argv) { return refcycle::cli::dispatch(argc, argv); }
