#include "sfolab/cli.hpp"

int main(int argc, char** argv) { return sfolab::dispatch(argc, argv); }
