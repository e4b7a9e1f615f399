#include "empatheval/cli.hpp"

int main(int argc, char** argv) { return empatheval::run(argc, argv); }
