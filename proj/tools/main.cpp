#include "fxliq/cli.hpp"

int main(int argc, char** argv) { return fxliq::dispatch(argc, argv); }
